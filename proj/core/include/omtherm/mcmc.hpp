#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace omtherm {

struct ParameterBounds {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

/// Independent uniform priors, one per parameter.
struct PriorSpec {
  std::vector<ParameterBounds> params;

  void validate() const;
  std::size_t size() const noexcept { return params.size(); }
  bool contains(std::span<const double> x) const noexcept;
  double width(std::size_t i) const noexcept { return params[i].upper - params[i].lower; }
  std::vector<std::string> names() const;
};

/// Log density up to a constant; -infinity marks zero probability.
using LogDensity = std::function<double(std::span<const double>)>;

enum class WalkerInit {
  uniform,  ///< uniform over the prior box
  ball,     ///< Gaussian ball around McmcOptions::center, clipped to the prior
};

struct McmcOptions {
  int walkers = 32;
  int steps = 2000;
  double stretch = 2.0;
  double burn_in_fraction = 0.25;
  std::uint64_t seed = 0;
  int threads = 0;  ///< walker evaluations in parallel; 0 = runtime default
  WalkerInit init = WalkerInit::uniform;
  std::vector<double> center;  ///< ball init only
  std::vector<double> scale;   ///< ball init only, per-parameter sigma
};

/// Ensemble chain stored step-major: draw(step, walker, param).
struct PosteriorSamples {
  std::vector<std::string> names;
  std::size_t walkers = 0;
  std::size_t steps = 0;
  std::size_t burn_in = 0;
  std::uint64_t seed = 0;
  std::vector<double> chain;
  std::vector<double> log_prob;  ///< step-major, one per (step, walker)
  double acceptance_fraction = 0.0;

  std::size_t dim() const noexcept { return names.size(); }
  double draw(std::size_t step, std::size_t walker, std::size_t param) const noexcept {
    return chain[(step * walkers + walker) * dim() + param];
  }
  std::size_t retained() const noexcept { return (steps - burn_in) * walkers; }
  std::size_t index_of(const std::string& name) const;

  /// Post-burn-in draws of one parameter, walker-minor order.
  std::vector<double> flat(std::size_t param) const;
  double mean(std::size_t param) const;
  double stddev(std::size_t param) const;
  /// Type-7 (linear interpolation) sample quantile of the retained draws.
  double quantile(std::size_t param, double q) const;
  /// Sample correlation of two parameters over retained draws.
  double correlation(std::size_t a, std::size_t b) const;
  /// Integrated autocorrelation time in steps, walker-averaged autocorrelation
  /// with a self-consistent window of 5 tau.
  double autocorrelation_time(std::size_t param) const;
};

/// Affine-invariant stretch-move ensemble sampler. `log_likelihood` is only
/// called inside the prior box; the posterior is likelihood times the uniform
/// prior. All random numbers for one half-ensemble update are drawn before
/// any evaluation, so the chain is identical for any thread count.
PosteriorSamples ensemble_mcmc(const LogDensity& log_likelihood, const PriorSpec& prior,
                               const McmcOptions& options);

/// Type-7 quantile of an unsorted sample.
double sample_quantile(std::vector<double> values, double q);

}  // namespace omtherm
