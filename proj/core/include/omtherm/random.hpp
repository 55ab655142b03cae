#pragma once

#include <cstdint>
#include <random>

namespace omtherm {

/// Means at or above this value are drawn from a continuity-corrected normal
/// approximation; below it, by exact CDF inversion.
inline constexpr double kPoissonNormalCutover = 50.0;

/// Independent, reproducible random stream addressed by (seed, stream index).
/// The engine is seeded through std::seed_seq so the mapping from address
/// to sequence is fixed by the standard and portable across toolchains.
class RandomStream {
public:
  RandomStream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller.
  double normal();
  /// Poisson variate; inversion below kPoissonNormalCutover, normal above.
  std::uint64_t poisson(double mean);

  std::mt19937_64& engine() noexcept { return engine_; }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Exact inversion of the Poisson CDF at u in (0, 1).
std::uint64_t poisson_inverse_cdf(double mean, double u);

}  // namespace omtherm
