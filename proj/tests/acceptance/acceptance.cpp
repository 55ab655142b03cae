// Acceptance runner: one line per criterion, exit status nonzero when any
// selected criterion fails. `acceptance` runs all; `acceptance 3 5` runs a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "omtherm/calibration.hpp"
#include "omtherm/detection.hpp"
#include "omtherm/filter.hpp"
#include "omtherm/fitting.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/model.hpp"
#include "omtherm/pulse_fit.hpp"
#include "omtherm/random.hpp"
#include "oracles.hpp"

using namespace omtherm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// --- pulse round trip shared by criteria 5 and 6 ---------------------------

struct PulseScenario {
  double n_i = 0.42;
  double n_f = 1.25;
  double n_c = 128.0;
  double gamma_cal = 21.1;
  double duration = 100e-9;
  double dt = 2e-9;
  double t0 = -50e-9;
  double window = 350e-9;
  double repetition_rate_hz = 33e3;
};

struct RoundTrip {
  PulseFitResult result;
  PulseParameters truth;
};

RoundTrip pulse_round_trip(const PulseScenario& sc, std::uint64_t reps, std::uint64_t seed,
                           int steps) {
  const FilterStack stack = FilterStack::narrowband_pair();
  const auto bins = static_cast<std::size_t>(std::llround(sc.window / sc.dt));
  PulseModelSpec spec;
  spec.stack = stack;
  spec.sideband = Sideband::anti_stokes;
  spec.gamma_cal = sc.gamma_cal;
  spec.nc_peak = sc.n_c;
  spec.nc_envelope = SampledWaveform::sample(sc.t0, sc.dt, bins, [](double t) { return t >= 0.0 ? 1.0 : 0.0; });
  spec.t_start = 0.0;

  const DetectionConfig det = fixtures::release_free_detection();
  PulseParameters truth;
  truth.n_i = sc.n_i;
  truth.n_f = sc.n_f;
  truth.t_stop = sc.duration;
  truth.n_nep = det.noise_rate() / (sc.gamma_cal * sc.n_c);
  truth.gamma_m_hz = gamma_m_of_nc(fixtures::release_free_bath(), sc.n_c);

  const PulseForwardModel model(spec);
  const auto rates = model.rate(truth);
  SimulationOptions so;
  so.seed = seed;
  const ClickHistogram data = simulate_clicks(rates, sc.t0, sc.dt, reps, so);

  PulseFitConfig cfg;
  cfg.model = spec;
  cfg.gamma_m_hz = truth.gamma_m_hz;
  cfg.nominal_t_stop = sc.duration;
  cfg.mcmc.walkers = 32;
  cfg.mcmc.steps = steps;
  cfg.mcmc.seed = seed + 1000003;
  return {fit_pulse_occupancy(data, cfg), truth};
}

// --- criteria ---------------------------------------------------------------

Outcome c1() {
  const double db = suppression_db(FilterStack::narrowband_pair(), 5e9);
  return {std::abs(db - 114.0) <= 2.0, fmt("suppression %.2f dB (target 114 +- 2)", db)};
}

Outcome c2() {
  FilterStack one = FilterStack::narrowband_pair();
  one.count = 1;
  const double dt = 0.25e-9;
  const auto n = static_cast<std::size_t>(1e-6 / dt);
  const auto step = SampledWaveform::sample(0.0, dt, n, [](double) { return 1.0; });
  const auto out = transmit_pulse(one, step);
  double worst_abs = 0.0, worst_rel = 0.0;
  for (std::size_t i = 2; i < n; ++i) {
    const double ref = oracle::single_pole_step(one.fwhm_hz, out.time(i));
    const double err = std::abs(out.values[i] - ref);
    worst_abs = std::max(worst_abs, err);
    worst_rel = std::max(worst_rel, err / ref);
  }
  return {worst_abs <= 0.01,
          fmt("max |error| %.2e of step amplitude (limit 1e-2); max relative %.2e", worst_abs,
              worst_rel)};
}

Outcome c3() {
  const double s = resonant_suppression(fixtures::release_free_device());
  return {std::abs(s - 0.0231) <= 1e-4, fmt("(kappa/2 omega_m)^2 = %.6f (target 0.0231 +- 1e-4)", s)};
}

Outcome c4() {
  const double p = scattering_probability(fixtures::release_free_device(), 128.0, 100e-9);
  return {p >= 0.04 && p <= 0.06, fmt("p_as = %.4f (target [0.04, 0.06])", p)};
}

Outcome c5() {
  const auto rt = pulse_round_trip(PulseScenario{}, 100'000'000, 5, 3000);
  const auto& fit = rt.result.fit;
  const bool ok = fit.contains("n_i", rt.truth.n_i) && fit.contains("n_f", rt.truth.n_f);
  return {ok, fmt("n_i %.4f [%.4f, %.4f] truth %.2f; n_f %.4f [%.4f, %.4f] truth %.2f; acc %.2f tau %.0f",
                  fit.value("n_i"), fit.ci_low[0], fit.ci_high[0], rt.truth.n_i, fit.value("n_f"),
                  fit.ci_low[1], fit.ci_high[1], rt.truth.n_f, rt.result.posterior.acceptance_fraction,
                  rt.result.autocorrelation_steps)};
}

Outcome c6() {
  int inside_i = 0, inside_f = 0, inside_both = 0;
  constexpr int kRuns = 50;
  for (int s = 0; s < kRuns; ++s) {
    const auto rt = pulse_round_trip(PulseScenario{}, 10'000'000, 100 + static_cast<std::uint64_t>(s), 2000);
    const bool a = rt.result.fit.contains("n_i", rt.truth.n_i);
    const bool b = rt.result.fit.contains("n_f", rt.truth.n_f);
    inside_i += a;
    inside_f += b;
    inside_both += a && b;
  }
  return {inside_i >= 43 && inside_f >= 43,
          fmt("truth inside 95%% CI: n_i %d/50, n_f %d/50 (need >= 43 each); jointly %d/50",
              inside_i, inside_f, inside_both)};
}

Outcome c7() {
  const double g0 = 510e3, b = 170.0, a = 0.98;
  std::vector<DataPoint> exact, noisy;
  RandomStream rng(7, 0);
  for (int i = 0; i < 25; ++i) {
    const double x = 10.0 * std::pow(3000.0, i / 24.0);
    const double y = g0 + b * std::pow(x, a);
    exact.push_back({x, y, 0.01 * y});
    noisy.push_back({x, y * (1.0 + 0.05 * rng.normal()), 0.05 * y});
  }
  const auto fe = fit_power_law(exact, true);
  const double rel = std::max({std::abs(fe.value("offset") / g0 - 1.0), std::abs(fe.value("prefactor") / b - 1.0),
                               std::abs(fe.value("exponent") / a - 1.0)});
  const auto fn = fit_power_law(noisy, true);
  double worst_z = 0.0;
  const double truth[] = {g0, b, a};
  for (int i = 0; i < 3; ++i) worst_z = std::max(worst_z, std::abs(fn.params[i] - truth[i]) / fn.sigma[i]);
  return {rel <= 1e-6 && worst_z <= 3.0,
          fmt("noiseless max relative error %.2e (limit 1e-6); 5%% noise worst |z| %.2f (limit 3)", rel,
              worst_z)};
}

Outcome c8() {
  CalibrationStudyOptions opt;
  opt.direct_sigmas = fixtures::release_free_direct_sigmas();
  opt.coherent_sigmas = fixtures::release_free_coherent().sigmas;
  opt.seed = 8;
  const auto st = synthetic_calibration_study(fixtures::release_free_device(), fixtures::release_free_detection(),
                                              fixtures::release_free_bath(), opt);
  return {st.consistent(2.0),
          fmt("truth %.2f; direct %.2f+-%.2f, asym %.2f+-%.2f, coh %.2f+-%.2f; pairwise z %.2f %.2f %.2f",
              st.truth, st.direct.gamma_cal, st.direct.sigma, st.asymmetry.gamma_cal, st.asymmetry.sigma,
              st.coherent.gamma_cal, st.coherent.sigma, st.pairwise_z[0], st.pairwise_z[1], st.pairwise_z[2])};
}

Outcome c9() {
  const DeviceParams dev = fixtures::release_free_device();
  const DetectionConfig det = fixtures::release_free_detection();
  const double n_c = 100.0;
  const double expected = scattering_event_rate(dev, n_c) * det.eta_tot();
  const double live = 100.0;
  bool ok = true;
  std::string detail = fmt("expected %.3f cps;", expected);
  std::uint64_t seed = 90;
  for (double n_m : {0.0, 1.0, 10.0}) {
    SimulationOptions so;
    so.seed = seed++;
    const double plus = sideband_rate(dev, det, Detuning::blue, n_c, n_m);
    const double minus = sideband_rate(dev, det, Detuning::red, n_c, n_m);
    const auto hp = simulate_clicks([&](double) { return plus; }, 0.0, 1.0, 1.0, 100, so);
    so.seed = seed++;
    const auto hm = simulate_clicks([&](double) { return minus; }, 0.0, 1.0, 1.0, 100, so);
    const auto kp = static_cast<double>(hp.total_counts());
    const auto km = static_cast<double>(hm.total_counts());
    const double diff = (kp - km) / live;
    const double sigma = std::sqrt(kp + km) / live;
    const double z = std::abs(diff - expected) / sigma;
    ok = ok && z <= 3.0;
    detail += fmt(" n_m=%g: %.3f (z %.2f)", n_m, diff, z);
  }
  return {ok, detail};
}

Outcome c10() {
  RandomStream rng(10, 0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    BathModel bath;
    bath.gamma_0_hz = std::pow(10.0, 3.0 + 3.0 * rng.uniform());
    bath.n_0 = 2.0 * rng.uniform();
    bath.hot_prefactor_hz = 1000.0 * rng.uniform();
    bath.hot_exponent = 0.2 + 1.3 * rng.uniform();
    bath.n_p = 50.0 * rng.uniform();
    const double n_c = std::pow(10.0, 4.0 * rng.uniform());
    const double analytic = steady_state_occupancy(bath, n_c);
    const double numeric =
        oracle::two_bath_fixed_point(bath.gamma_0_hz, bath.n_0, hot_bath_rate(bath, n_c), bath.n_p);
    worst = std::max(worst, std::abs(analytic - numeric));
  }
  return {worst <= 1e-6, fmt("max |analytic - integrated| %.2e over 100 sets (limit 1e-6)", worst)};
}

Outcome c11() {
  const double mu[] = {1.0, -2.0};
  const double sd[] = {1.0, 2.0};
  const double rho = 0.9;
  auto logp = [&](std::span<const double> x) {
    const double u = (x[0] - mu[0]) / sd[0];
    const double v = (x[1] - mu[1]) / sd[1];
    return -0.5 * (u * u - 2.0 * rho * u * v + v * v) / (1.0 - rho * rho);
  };
  PriorSpec prior;
  prior.params = {{"x", -50.0, 50.0}, {"y", -50.0, 50.0}};
  McmcOptions opt;
  opt.walkers = 32;
  opt.steps = 5000;
  opt.seed = 11;
  opt.threads = 1;
  const auto a = ensemble_mcmc(logp, prior, opt);
  opt.threads = 4;
  const auto b = ensemble_mcmc(logp, prior, opt);
  const bool same = a.chain == b.chain && a.log_prob == b.log_prob;
  const double m0 = a.mean(0), m1 = a.mean(1), s0 = a.stddev(0), s1 = a.stddev(1), r = a.correlation(0, 1);
  const bool ok = std::abs(m0 - mu[0]) < 0.05 * sd[0] && std::abs(m1 - mu[1]) < 0.05 * sd[1] &&
                  std::abs(s0 / sd[0] - 1.0) < 0.05 && std::abs(s1 / sd[1] - 1.0) < 0.05 &&
                  std::abs(r - rho) < 0.03 && same;
  return {ok, fmt("mean (%.3f, %.3f) std (%.3f, %.3f) rho %.3f; 1 vs 4 threads identical: %s", m0, m1, s0, s1,
                  r, same ? "yes" : "no")};
}

Outcome c12() {
  const auto terms = nnep_terms(fixtures::release_free_device(), fixtures::release_free_detection(),
                                Detuning::red, 1000.0, 21.1);
  return {std::abs(terms.dark - 3.32e-4) <= 1e-6, fmt("dark-count term %.4e (target 3.32e-4 +- 1e-6)", terms.dark)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "filter suppression at 5 GHz", 1.0, c1},
      {2, "single-filter step response", 1.0, c2},
      {3, "resonant suppression factor", 1.0, c3},
      {4, "scattering probability per pulse", 1.0, c4},
      {5, "pulse occupancy round trip", 300.0, c5},
      {6, "credible interval coverage", 3600.0, c6},
      {7, "power-law recovery", 10.0, c7},
      {8, "three-way calibration consistency", 300.0, c8},
      {9, "sideband asymmetry identity", 60.0, c9},
      {10, "two-bath steady state", 10.0, c10},
      {11, "ensemble sampler sanity", 60.0, c11},
      {12, "noise-equivalent phonons", 1.0, c12},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %s: %s (%.2f s, budget %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
