#pragma once

#include <cstdint>
#include <span>

#include "omtherm/detection.hpp"

namespace omtherm {

/// sum_i k_i ln(lambda_i) - lambda_i - ln(k_i!). Returns -infinity when a bin
/// with clicks has zero expected counts; throws InvalidParameter on negative
/// or non-finite lambda or mismatched lengths.
double poisson_log_likelihood(std::span<const double> expected, std::span<const std::uint64_t> counts);
double poisson_log_likelihood(std::span<const double> expected, const ClickHistogram& data);

}  // namespace omtherm
