#include "omtherm/waveform.hpp"

#include <algorithm>
#include <cmath>

#include "omtherm/errors.hpp"

namespace omtherm {

bool SampledWaveform::same_grid(const SampledWaveform& other) const noexcept {
  const double tol = 1e-9 * std::max(std::abs(dt), std::abs(other.dt));
  return values.size() == other.values.size() && std::abs(dt - other.dt) <= tol &&
         std::abs(t0 - other.t0) <= tol;
}

void SampledWaveform::validate_grid() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt", "must be > 0");
  if (!std::isfinite(t0)) throw InvalidParameter("t0", "must be finite");
  if (values.empty()) throw InvalidParameter("values", "waveform has no samples");
}

void SampledWaveform::validate_nonnegative() const {
  validate_grid();
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidParameter("values", "samples must be finite and >= 0");
}

double SampledWaveform::max() const {
  if (values.empty()) return 0.0;
  return *std::max_element(values.begin(), values.end());
}

}  // namespace omtherm
