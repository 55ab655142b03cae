#include "omtherm/likelihood.hpp"

#include <cmath>
#include <limits>

#include "omtherm/errors.hpp"

namespace omtherm {

double poisson_log_likelihood(std::span<const double> expected,
                              std::span<const std::uint64_t> counts) {
  if (expected.size() != counts.size())
    throw InvalidParameter("expected", "one expected count per bin is required");
  double logp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double lambda = expected[i];
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
      throw InvalidParameter("expected", "must be finite and >= 0");
    const auto k = static_cast<double>(counts[i]);
    if (counts[i] == 0) {
      logp -= lambda;
      continue;
    }
    if (lambda == 0.0) return -std::numeric_limits<double>::infinity();
    logp += k * std::log(lambda) - lambda - std::lgamma(k + 1.0);
  }
  return logp;
}

double poisson_log_likelihood(std::span<const double> expected, const ClickHistogram& data) {
  return poisson_log_likelihood(expected, std::span<const std::uint64_t>(data.counts));
}

}  // namespace omtherm
