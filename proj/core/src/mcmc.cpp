#include "omtherm/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "omtherm/errors.hpp"
#include "omtherm/random.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omtherm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kInitAttempts = 1000;

// Exceptions must not cross an OpenMP region: the first one is held and
// rethrown after the loop.
class ExceptionSlot {
public:
  template <class F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
#ifdef _OPENMP
#pragma omp critical(omtherm_mcmc_exception)
#endif
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

private:
  std::exception_ptr error_;
};

struct Proposal {
  std::size_t partner = 0;
  double z = 1.0;
  double log_u = 0.0;
};

}  // namespace

void PriorSpec::validate() const {
  if (params.empty()) throw InvalidParameter("prior", "at least one parameter is required");
  for (const auto& p : params) {
    if (!std::isfinite(p.lower) || !std::isfinite(p.upper) || !(p.lower < p.upper))
      throw InvalidParameter("prior." + p.name, "requires finite lower < upper");
  }
}

bool PriorSpec::contains(std::span<const double> x) const noexcept {
  if (x.size() != params.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= params[i].lower && x[i] <= params[i].upper)) return false;
  return true;
}

std::vector<std::string> PriorSpec::names() const {
  std::vector<std::string> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.name);
  return out;
}

std::size_t PosteriorSamples::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidParameter(name, "no such parameter");
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> PosteriorSamples::flat(std::size_t param) const {
  std::vector<double> out;
  out.reserve(retained());
  for (std::size_t s = burn_in; s < steps; ++s)
    for (std::size_t w = 0; w < walkers; ++w) out.push_back(draw(s, w, param));
  return out;
}

double PosteriorSamples::mean(std::size_t param) const {
  const auto v = flat(param);
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double PosteriorSamples::stddev(std::size_t param) const {
  const auto v = flat(param);
  const double m = mean(param);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double PosteriorSamples::quantile(std::size_t param, double q) const {
  return sample_quantile(flat(param), q);
}

double PosteriorSamples::correlation(std::size_t a, std::size_t b) const {
  const auto x = flat(a);
  const auto y = flat(b);
  const double mx = mean(a);
  const double my = mean(b);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

double PosteriorSamples::autocorrelation_time(std::size_t param) const {
  const std::size_t n = steps - burn_in;
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<double>> series(walkers, std::vector<double>(n));
  for (std::size_t w = 0; w < walkers; ++w) {
    double m = 0.0;
    for (std::size_t s = 0; s < n; ++s) m += series[w][s] = draw(burn_in + s, w, param);
    m /= static_cast<double>(n);
    for (double& v : series[w]) v -= m;
  }
  auto acov = [&](std::size_t lag) {
    double sum = 0.0;
    for (const auto& x : series)
      for (std::size_t s = 0; s + lag < n; ++s) sum += x[s] * x[s + lag];
    return sum / static_cast<double>(walkers * n);
  };
  const double c0 = acov(0);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    tau += 2.0 * acov(lag) / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

double sample_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidParameter("values", "empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidParameter("q", "must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

PosteriorSamples ensemble_mcmc(const LogDensity& log_likelihood, const PriorSpec& prior,
                               const McmcOptions& options) {
  prior.validate();
  const std::size_t dim = prior.size();
  if (options.walkers < static_cast<int>(2 * (dim + 1)) || options.walkers % 2 != 0)
    throw InvalidParameter("walkers", "must be even and >= 2 (dim + 1)");
  if (options.steps < 1) throw InvalidParameter("steps", "must be >= 1");
  if (!(options.stretch > 1.0)) throw InvalidParameter("stretch", "must be > 1");
  if (!(options.burn_in_fraction >= 0.0 && options.burn_in_fraction < 1.0))
    throw InvalidParameter("burn_in_fraction", "must lie in [0, 1)");
  if (options.init == WalkerInit::ball &&
      (options.center.size() != dim || options.scale.size() != dim))
    throw InvalidParameter("center", "ball init needs one center and scale per parameter");

  const auto nw = static_cast<std::size_t>(options.walkers);
  const auto ns = static_cast<std::size_t>(options.steps);
  const std::size_t half = nw / 2;
#ifdef _OPENMP
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#endif

  auto log_post = [&](std::span<const double> x) {
    if (!prior.contains(x)) return kNegInf;
    const double v = log_likelihood(x);
    return std::isnan(v) ? kNegInf : v;
  };

  RandomStream rng(options.seed, 0);
  ExceptionSlot slot;
  std::vector<double> pos(nw * dim);
  std::vector<double> lp(nw, kNegInf);

  // Initial positions: retried per walker until finite, evaluated in parallel.
  std::vector<int> pending(nw, 1);
  for (int attempt = 0; attempt < kInitAttempts; ++attempt) {
    bool any = false;
    for (std::size_t w = 0; w < nw; ++w) {
      if (!pending[w]) continue;
      any = true;
      for (std::size_t d = 0; d < dim; ++d) {
        const auto& b = prior.params[d];
        double x;
        if (options.init == WalkerInit::ball) {
          x = options.center[d] + options.scale[d] * rng.normal();
          x = std::clamp(x, b.lower, b.upper);
        } else {
          x = b.lower + (b.upper - b.lower) * rng.uniform();
        }
        pos[w * dim + d] = x;
      }
    }
    if (!any) break;
    const auto n = static_cast<std::int64_t>(nw);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
      const auto w = static_cast<std::size_t>(i);
      if (pending[w]) slot.run([&] { lp[w] = log_post(std::span<const double>(&pos[w * dim], dim)); });
    }
    slot.rethrow();
    for (std::size_t w = 0; w < nw; ++w)
      if (pending[w] && lp[w] > kNegInf) pending[w] = 0;
  }
  if (std::any_of(pending.begin(), pending.end(), [](int p) { return p != 0; }))
    throw InitializationError("ensemble_mcmc: no finite log probability for initial walkers");

  PosteriorSamples out;
  out.names = prior.names();
  out.walkers = nw;
  out.steps = ns;
  out.burn_in = static_cast<std::size_t>(std::floor(options.burn_in_fraction * static_cast<double>(ns)));
  out.seed = options.seed;
  out.chain.resize(ns * nw * dim);
  out.log_prob.resize(ns * nw);

  const double a = options.stretch;
  std::vector<Proposal> props(half);
  std::vector<double> trial(half * dim);
  std::vector<double> trial_lp(half);
  std::uint64_t accepted = 0;

  for (std::size_t step = 0; step < ns; ++step) {
    for (std::size_t set = 0; set < 2; ++set) {
      const std::size_t self0 = set * half;
      const std::size_t other0 = (1 - set) * half;
      for (std::size_t k = 0; k < half; ++k) {
        auto& p = props[k];
        p.partner = other0 + std::min(half - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(half)));
        const double u = (a - 1.0) * rng.uniform() + 1.0;
        p.z = u * u / a;
        p.log_u = std::log(rng.uniform());
        const double* xk = &pos[(self0 + k) * dim];
        const double* xj = &pos[p.partner * dim];
        for (std::size_t d = 0; d < dim; ++d) trial[k * dim + d] = xj[d] + p.z * (xk[d] - xj[d]);
      }
      const auto n = static_cast<std::int64_t>(half);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic)
#endif
      for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        slot.run([&] { trial_lp[k] = log_post(std::span<const double>(&trial[k * dim], dim)); });
      }
      slot.rethrow();
      for (std::size_t k = 0; k < half; ++k) {
        const std::size_t w = self0 + k;
        const double log_ratio =
            static_cast<double>(dim - 1) * std::log(props[k].z) + trial_lp[k] - lp[w];
        if (trial_lp[k] > kNegInf && props[k].log_u < log_ratio) {
          std::copy_n(&trial[k * dim], dim, &pos[w * dim]);
          lp[w] = trial_lp[k];
          ++accepted;
        }
      }
    }
    std::copy(pos.begin(), pos.end(), out.chain.begin() + static_cast<std::ptrdiff_t>(step * nw * dim));
    std::copy(lp.begin(), lp.end(), out.log_prob.begin() + static_cast<std::ptrdiff_t>(step * nw));
  }
  out.acceptance_fraction = static_cast<double>(accepted) / static_cast<double>(ns * nw);
  return out;
}

}  // namespace omtherm
