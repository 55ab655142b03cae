#include "omtherm/random.hpp"

#include <cmath>

#include "omtherm/errors.hpp"
#include "omtherm/units.hpp"

namespace omtherm {

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x9e3779b9u};
  engine_.seed(seq);
}

double RandomStream::uniform() {
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double radius = std::sqrt(-2.0 * std::log(uniform()));
  const double angle = kTwoPi * uniform();
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t poisson_inverse_cdf(double mean, double u) {
  if (mean <= 0.0) return 0;
  double p = std::exp(-mean);
  double cdf = p;
  std::uint64_t k = 0;
  // Past this point the remaining mass is below double resolution.
  const auto limit = static_cast<std::uint64_t>(mean + 40.0 * std::sqrt(mean) + 100.0);
  while (u > cdf && k < limit) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

std::uint64_t RandomStream::poisson(double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw DomainError("poisson: mean must be finite and >= 0");
  if (mean < kPoissonNormalCutover) return poisson_inverse_cdf(mean, uniform());
  const double draw = std::floor(mean + std::sqrt(mean) * normal() + 0.5);
  return draw <= 0.0 ? 0 : static_cast<std::uint64_t>(draw);
}

}  // namespace omtherm
