#include "omtherm/pulse_fit.hpp"

#include <algorithm>
#include <cmath>

#include "omtherm/errors.hpp"
#include "omtherm/likelihood.hpp"
#include "omtherm/units.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omtherm {

PulseForwardModel::PulseForwardModel(PulseModelSpec spec) : spec_(std::move(spec)) {
  spec_.stack.validate();
  spec_.nc_envelope.validate_nonnegative();
  if (std::abs(spec_.nc_envelope.max() - 1.0) > 1e-6)
    throw InvalidParameter("nc_envelope", "must be normalized to a peak of 1");
  if (!(spec_.gamma_cal > 0.0)) throw InvalidParameter("gamma_cal", "must be > 0");
  if (!(spec_.nc_peak > 0.0)) throw InvalidParameter("nc_peak", "must be > 0");
  t_start_ = spec_.t_start;
  if (std::isnan(t_start_)) {
    const auto& v = spec_.nc_envelope.values;
    const auto it = std::find_if(v.begin(), v.end(), [](double x) { return x >= 0.5; });
    t_start_ = spec_.nc_envelope.time(static_cast<std::size_t>(it - v.begin()));
  }
}

PulseFilter PulseForwardModel::make_filter() const {
  return PulseFilter(spec_.stack, spec_.nc_envelope.dt, spec_.nc_envelope.size());
}

void PulseForwardModel::rate(const PulseParameters& p, PulseFilter& filter,
                             std::span<double> out) const {
  const auto& env = spec_.nc_envelope;
  const std::size_t n = env.size();
  const double vac = vacuum_term(spec_.sideband);
  const double gamma = angular(p.gamma_m_hz);
  std::vector<double> drive(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = env.time(i);
    double gate = 1.0;
    if (t >= p.t_stop) gate = 0.0;
    else if (t + env.dt > p.t_stop) gate = (p.t_stop - t) / env.dt;
    const double elapsed = std::max(0.0, t - t_start_);
    const double n_m = p.n_i - (p.n_f - p.n_i) * std::expm1(-gamma * elapsed);
    drive[i] = std::max(0.0, n_m + vac) * env.values[i] * gate;
  }
  filter.transmit(drive, out);
  const double scale = spec_.gamma_cal * spec_.nc_peak;
  // Vacuum leaves the filtered signal on the detected side: n_m* + vac + n_NEP.
  for (double& v : out) v = scale * (v + p.n_nep);
}

std::vector<double> PulseForwardModel::rate(const PulseParameters& p) const {
  PulseFilter filter = make_filter();
  std::vector<double> out(size());
  rate(p, filter, out);
  return out;
}

PriorSpec default_pulse_prior(const PulseFitConfig& config) {
  const double tau = config.model.stack.response_time();
  PriorSpec prior;
  prior.params = {{"n_i", 0.0, 10.0},
                  {"n_f", 0.0, 10.0},
                  {"t_stop", config.nominal_t_stop - 3.0 * tau, config.nominal_t_stop + 3.0 * tau},
                  {"n_nep", 0.0, 1.0}};
  if (!config.gamma_m_hz) prior.params.push_back({"gamma_m_hz", 1e4, 1e7});
  return prior;
}

namespace {

void check_grid(const ClickHistogram& data, const SampledWaveform& env) {
  data.validate();
  if (data.size() != env.size() || data.size() == 0 ||
      std::abs(data.bin_width - env.dt) > 1e-9 * env.dt ||
      std::abs(data.bin_start.front() - env.t0) > 1e-6 * env.dt)
    throw GridMismatch("fit_pulse_occupancy: histogram bins and envelope grid differ");
}

PulseParameters unpack(std::span<const double> x, const std::optional<double>& gamma_m) {
  return {x[0], x[1], x[2], x[3], gamma_m ? *gamma_m : x[4]};
}

}  // namespace

PulseFitResult fit_pulse_occupancy(const ClickHistogram& data, const PulseFitConfig& config) {
  check_grid(data, config.model.nc_envelope);
  if (config.gamma_m_hz && !(*config.gamma_m_hz > 0.0))
    throw InvalidParameter("gamma_m_hz", "must be > 0");
  const PulseForwardModel model(config.model);
  const PriorSpec prior = config.prior.params.empty() ? default_pulse_prior(config) : config.prior;
  prior.validate();
  const std::size_t expected_dim = config.gamma_m_hz ? 4 : 5;
  if (prior.size() != expected_dim)
    throw InvalidParameter("prior", "needs " + std::to_string(expected_dim) + " parameters");

#ifdef _OPENMP
  const int threads = config.mcmc.threads > 0 ? config.mcmc.threads : omp_get_max_threads();
#else
  const int threads = 1;
#endif
  std::vector<PulseFilter> filters;
  filters.reserve(static_cast<std::size_t>(threads));
  for (int i = 0; i < threads; ++i) filters.push_back(model.make_filter());

  const double exposure = data.exposure();
  auto log_likelihood = [&](std::span<const double> x) {
#ifdef _OPENMP
    const auto slot = static_cast<std::size_t>(omp_get_thread_num());
#else
    const std::size_t slot = 0;
#endif
    std::vector<double> lambda(model.size());
    model.rate(unpack(x, config.gamma_m_hz), filters[slot], lambda);
    for (double& v : lambda) v = std::max(0.0, v) * exposure;
    return poisson_log_likelihood(lambda, data);
  };

  McmcOptions mcmc = config.mcmc;
  mcmc.threads = threads;
  if (mcmc.init == WalkerInit::uniform && config.pilot_steps != 0) {
    // Walkers started across the whole prior can strand in far, flat regions
    // that stretch moves never leave. A pilot locates the mode; the main run
    // starts from a tight ball there.
    McmcOptions pilot = mcmc;
    pilot.steps = config.pilot_steps > 0 ? config.pilot_steps : std::max(100, mcmc.steps / 4);
    pilot.burn_in_fraction = 0.0;
    const PosteriorSamples pre = ensemble_mcmc(log_likelihood, prior, pilot);
    const auto best = std::max_element(pre.log_prob.begin(), pre.log_prob.end()) - pre.log_prob.begin();
    mcmc.init = WalkerInit::ball;
    mcmc.center.assign(pre.chain.begin() + best * static_cast<std::ptrdiff_t>(pre.dim()),
                       pre.chain.begin() + (best + 1) * static_cast<std::ptrdiff_t>(pre.dim()));
    mcmc.scale.clear();
    for (std::size_t d = 0; d < prior.size(); ++d) mcmc.scale.push_back(1e-3 * prior.width(d));
    mcmc.seed = config.mcmc.seed + 1;
  }
  PulseFitResult result;
  result.posterior = ensemble_mcmc(log_likelihood, prior, mcmc);
  const auto& post = result.posterior;

  FitResult& fit = result.fit;
  fit.names = post.names;
  fit.level = config.level;
  fit.seed = config.mcmc.seed;
  const double tail = 0.5 * (1.0 - config.level);
  for (std::size_t d = 0; d < post.dim(); ++d) {
    fit.params.push_back(post.quantile(d, 0.5));
    fit.sigma.push_back(post.stddev(d));
    fit.ci_low.push_back(post.quantile(d, tail));
    fit.ci_high.push_back(post.quantile(d, 1.0 - tail));
    if (fit.ci_high.back() - fit.ci_low.back() > config.unidentifiable_fraction * prior.width(d)) {
      result.unidentifiable.push_back(post.names[d]);
      fit.flags.push_back("unidentifiable:" + post.names[d]);
    }
    result.autocorrelation_steps = std::max(result.autocorrelation_steps, post.autocorrelation_time(d));
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t s = post.burn_in; s < post.steps; ++s)
    for (std::size_t w = 0; w < post.walkers; ++w)
      best = std::max(best, post.log_prob[s * post.walkers + w]);
  fit.logp = best;
  fit.dof = data.size() > post.dim() ? data.size() - post.dim() : 0;

  const auto& env = config.model.nc_envelope;
  result.best_fit_rate = SampledWaveform(env.t0, env.dt, model.rate(unpack(fit.params, config.gamma_m_hz)));
  return result;
}

}  // namespace omtherm
