#include <cmath>
#include <limits>

#include <doctest.h>

#include "oracles.hpp"
#include "omtherm/errors.hpp"
#include "omtherm/fitting.hpp"
#include "omtherm/likelihood.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/pulse_fit.hpp"
#include "omtherm/units.hpp"

using namespace omtherm;
using doctest::Approx;

namespace {

std::vector<double> thinned(const PosteriorSamples& s, std::size_t param, std::size_t every) {
  std::vector<double> out;
  for (std::size_t step = s.burn_in; step < s.steps; step += every)
    for (std::size_t w = 0; w < s.walkers; ++w) out.push_back(s.draw(step, w, param));
  return out;
}

double gaussian2(std::span<const double> x, double rho) {
  const double q = (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / (1.0 - rho * rho);
  return -0.5 * q;
}

}  // namespace

TEST_CASE("Poisson log likelihood") {
  const std::vector<double> lam{2.0};
  const std::vector<std::uint64_t> k{2};
  CHECK(poisson_log_likelihood(lam, k) == Approx(std::log(2.0 * std::exp(-2.0))).epsilon(1e-12));
  CHECK(poisson_log_likelihood(lam, k) == Approx(-1.3069).epsilon(1e-4));

  const std::vector<double> many{0.5, 1.5, 3.0};
  const std::vector<std::uint64_t> none{0, 0, 0};
  CHECK(poisson_log_likelihood(many, none) == Approx(-5.0));

  CHECK(poisson_log_likelihood(std::vector<double>{0.0}, std::vector<std::uint64_t>{0}) == 0.0);
  CHECK(poisson_log_likelihood(std::vector<double>{0.0}, std::vector<std::uint64_t>{3}) ==
        -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(poisson_log_likelihood(std::vector<double>{-1.0}, std::vector<std::uint64_t>{0}), InvalidParameter);
  CHECK_THROWS_AS(poisson_log_likelihood(many, k), InvalidParameter);

  SUBCASE("concave with maximum at lambda = k") {
    for (std::uint64_t kk : {1u, 4u, 30u}) {
      auto f = [&](double l) { return poisson_log_likelihood(std::vector<double>{l}, std::vector<std::uint64_t>{kk}); };
      const double h = 1e-3;
      for (double l = 0.3; l < 60.0; l *= 1.4) CHECK(f(l + h) - 2.0 * f(l) + f(l - h) < 0.0);
      const double at = static_cast<double>(kk);
      CHECK(f(at) > f(at * 1.01));
      CHECK(f(at) > f(at * 0.99));
      CHECK(std::abs(f(at + h) - f(at - h)) / (2.0 * h) < 1e-6);
    }
  }
}

TEST_CASE("ensemble sampler") {
  McmcOptions opt;
  opt.seed = 17;

  SUBCASE("standard normal") {
    PriorSpec prior{{{"x", -20.0, 20.0}}};
    opt.walkers = 32;
    opt.steps = 5000;
    const auto s = ensemble_mcmc([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, prior, opt);
    CHECK(std::abs(s.mean(0)) < 0.05);
    CHECK(s.stddev(0) > 0.95);
    CHECK(s.stddev(0) < 1.05);
    CHECK(s.retained() >= 10 * s.dim());
    CHECK(s.burn_in == 1250);
  }
  SUBCASE("uniform target stays in bounds") {
    PriorSpec prior{{{"a", 1.0, 2.0}, {"b", -3.0, 5.0}}};
    opt.steps = 1000;
    const auto s = ensemble_mcmc([](std::span<const double>) { return 0.0; }, prior, opt);
    for (double v : s.chain) CHECK(std::isfinite(v));
    for (std::size_t step = 0; step < s.steps; ++step)
      for (std::size_t w = 0; w < s.walkers; ++w) {
        CHECK(s.draw(step, w, 0) >= 1.0);
        CHECK(s.draw(step, w, 0) <= 2.0);
        CHECK(s.draw(step, w, 1) >= -3.0);
        CHECK(s.draw(step, w, 1) <= 5.0);
      }
    CHECK(s.acceptance_fraction > 0.4);
    CHECK(s.acceptance_fraction < 0.9);
  }
  SUBCASE("correlated normal") {
    PriorSpec prior{{{"x", -10.0, 10.0}, {"y", -10.0, 10.0}}};
    opt.steps = 5000;
    const auto s = ensemble_mcmc([](std::span<const double> x) { return gaussian2(x, 0.9); }, prior, opt);
    CHECK(s.correlation(0, 1) == Approx(0.9).epsilon(0.03 / 0.9));
  }
  SUBCASE("deterministic and thread independent") {
    PriorSpec prior{{{"x", -10.0, 10.0}, {"y", -10.0, 10.0}}};
    opt.steps = 300;
    opt.threads = 1;
    auto target = [](std::span<const double> x) { return gaussian2(x, 0.5); };
    const auto a = ensemble_mcmc(target, prior, opt);
    opt.threads = 3;
    const auto b = ensemble_mcmc(target, prior, opt);
    CHECK(a.chain == b.chain);
    opt.seed = 18;
    CHECK(ensemble_mcmc(target, prior, opt).chain != a.chain);
  }
  SUBCASE("affine equivariance") {
    // x = A y + b with A = diag(3, 0.2), b = (1, -4). Sample the target in
    // both coordinates and compare the mapped marginals.
    PriorSpec px{{{"x0", -40.0, 40.0}, {"x1", -40.0, 40.0}}};
    PriorSpec py{{{"y0", -41.0 / 3.0, 39.0 / 3.0}, {"y1", (-40.0 + 4.0) / 0.2, (40.0 + 4.0) / 0.2}}};
    auto fx = [](std::span<const double> x) { return gaussian2(x, 0.7); };
    auto fy = [&](std::span<const double> y) {
      const double x[2] = {3.0 * y[0] + 1.0, 0.2 * y[1] - 4.0};
      return fx(x);
    };
    opt.steps = 6000;
    const auto sx = ensemble_mcmc(fx, px, opt);
    opt.seed = 99;
    const auto sy = ensemble_mcmc(fy, py, opt);
    for (std::size_t d = 0; d < 2; ++d) {
      auto a = thinned(sx, d, 100);
      auto b = thinned(sy, d, 100);
      for (double& v : b) v = d == 0 ? 3.0 * v + 1.0 : 0.2 * v - 4.0;
      CHECK(oracle::ks_p_value(oracle::ks_statistic(a, b), a.size(), b.size()) > 0.01);
    }
  }
  SUBCASE("errors") {
    PriorSpec prior{{{"x", 0.0, 1.0}}};
    CHECK_THROWS_AS(ensemble_mcmc([](std::span<const double>) { return -std::numeric_limits<double>::infinity(); }, prior, opt),
                    InitializationError);
    opt.walkers = 3;
    CHECK_THROWS_AS(ensemble_mcmc([](std::span<const double>) { return 0.0; }, prior, opt), InvalidParameter);
    PriorSpec bad{{{"x", 1.0, 1.0}}};
    CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  }
  SUBCASE("nested quantiles") {
    PriorSpec prior{{{"x", -20.0, 20.0}}};
    opt.steps = 2000;
    const auto s = ensemble_mcmc([](std::span<const double> x) { return -0.5 * x[0] * x[0]; }, prior, opt);
    CHECK(s.quantile(0, 0.025) <= s.quantile(0, 0.05));
    CHECK(s.quantile(0, 0.05) <= s.quantile(0, 0.5));
    CHECK(s.quantile(0, 0.5) <= s.quantile(0, 0.95));
    CHECK(s.quantile(0, 0.95) <= s.quantile(0, 0.975));
    CHECK(sample_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == Approx(2.5));
  }
}

TEST_CASE("EIT fit") {
  const double gm = 600e3;
  const std::complex<double> amp(2e5, 0.0);
  CHECK(std::abs(eit_response(amp, gm, 1e12) - 1.0) < 1e-6);
  CHECK(std::abs(eit_response(amp, gm, 0.0) - (1.0 + 2.0 * amp / gm)) < 1e-12);
  std::vector<ComplexPoint> sweep;
  for (int i = -30; i <= 30; ++i) sweep.push_back({i * 100e3, eit_response(amp, gm, i * 100e3), 1e-3});
  const auto f = fit_eit(sweep);
  CHECK(f.value("gamma_m_hz") == Approx(gm).epsilon(1e-8));
  CHECK(f.value("amplitude_re") == Approx(amp.real()).epsilon(1e-8));
  CHECK(std::abs(f.value("amplitude_im")) < 1e-8 * amp.real());
  CHECK(f.chi2 < 1e-8);
  CHECK_THROWS_AS(fit_eit({sweep.begin(), sweep.begin() + 3}), FitError);
  std::vector<ComplexPoint> narrow;
  for (int i = -3; i <= 3; ++i) narrow.push_back({i * 20e3, eit_response(amp, gm, i * 20e3), 1e-3});
  const auto fn = fit_eit(narrow);
  CHECK(std::find(fn.flags.begin(), fn.flags.end(), "span_below_2_gamma_m") != fn.flags.end());
}

TEST_CASE("power-law fits") {
  std::vector<DataPoint> exact, bare;
  for (int i = 0; i < 25; ++i) {
    const double x = 10.0 * std::pow(3000.0, i / 24.0);
    exact.push_back({x, 510e3 + 170.0 * std::pow(x, 0.98), 1.0});
    bare.push_back({x, 0.35 * std::pow(x, 0.29), 1e-3});
  }
  const auto f = fit_power_law(exact, true);
  CHECK(f.value("offset") == Approx(510e3).epsilon(1e-6));
  CHECK(f.value("prefactor") == Approx(170.0).epsilon(1e-6));
  CHECK(f.value("exponent") == Approx(0.98).epsilon(1e-6));
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    CHECK(f.ci_low[i] <= f.params[i]);
    CHECK(f.params[i] <= f.ci_high[i]);
  }

  const auto [pre, ex] = power_law_initial_guess(bare);
  const auto fb = fit_power_law(bare, false);
  CHECK(pre == Approx(fb.value("prefactor")).epsilon(0.1));
  CHECK(ex == Approx(fb.value("exponent")).epsilon(0.1));
  CHECK(fb.chi2 < 1e-8);

  std::vector<DataPoint> flat;
  for (int i = 1; i <= 6; ++i) flat.push_back({i * 10.0, 4.0, 0.01});
  const auto ff = fit_power_law(flat, false);
  CHECK(ff.value("prefactor") == Approx(4.0).epsilon(1e-9));
  CHECK(std::abs(ff.value("exponent")) < 1e-9);

  CHECK_THROWS_AS(fit_power_law({exact.begin(), exact.begin() + 3}, true), FitError);
  std::vector<DataPoint> neg = exact;
  neg[2].x = -1.0;
  CHECK_THROWS(fit_power_law(neg, true));

  const auto [lo, hi] = fit_power_law_split(bare, 500.0, false);
  CHECK(lo.value("exponent") == Approx(0.29).epsilon(1e-6));
  CHECK(hi.value("exponent") == Approx(0.29).epsilon(1e-6));
}

TEST_CASE("exponential decay fits") {
  std::vector<DataPoint> ring;
  for (int i = 0; i < 40; ++i) {
    const double t = i * 25e-9;
    ring.push_back({t, 100.0 * std::exp(-kTwoPi * 660e3 * t), 0.1});
  }
  const auto f = fit_exponential_decay(ring, false);
  CHECK(f.value("tau_s") == Approx(241.1e-9).epsilon(1e-3));
  CHECK(f.value("rate_hz") == Approx(660e3).epsilon(1e-8));
  CHECK(f.chi2 < 1e-8);

  std::vector<DataPoint> flat;
  for (int i = 0; i < 12; ++i) flat.push_back({i * 1e-7, 3.0 + ((i % 2) ? 0.01 : -0.01), 0.01});
  const auto fc = fit_exponential_decay(flat, true);
  CHECK(std::abs(fc.value("amplitude")) < 0.05);
  CHECK(fc.value("floor") == Approx(3.0).epsilon(0.01));

  std::vector<DataPoint> pp;
  for (int i = 0; i < 30; ++i) {
    const double td = i * 0.2e-6;
    pp.push_back({td, 64.0 * std::exp(-kTwoPi * 607e3 * td) + 0.81, 0.01});
  }
  const auto fp = fit_exponential_decay(pp, true);
  CHECK(fp.value("amplitude") == Approx(64.0).epsilon(0.02));
  CHECK(fp.value("rate_hz") == Approx(607e3).epsilon(0.02));
  CHECK(fp.value("floor") == Approx(0.81).epsilon(0.02));
  CHECK_THROWS_AS(fit_exponential_decay({ring.begin(), ring.begin() + 2}, false), FitError);
}

namespace {

struct PulseCase {
  PulseModelSpec spec;
  PulseParameters truth;
};

PulseCase pulse_case(double n_i, double n_f) {
  PulseCase c;
  c.spec.stack = FilterStack::narrowband_pair();
  c.spec.gamma_cal = 21.1;
  c.spec.nc_peak = 128.0;
  c.spec.nc_envelope = SampledWaveform::sample(-50e-9, 2e-9, 175, [](double t) { return t >= 0.0 ? 1.0 : 0.0; });
  c.spec.t_start = 0.0;
  c.truth = {n_i, n_f, 100e-9, 7.0 / (21.1 * 128.0), 529.7e3};
  return c;
}

PulseFitConfig pulse_config(const PulseCase& c, bool fix_gamma, std::uint64_t seed) {
  PulseFitConfig cfg;
  cfg.model = c.spec;
  if (fix_gamma) cfg.gamma_m_hz = c.truth.gamma_m_hz;
  cfg.nominal_t_stop = 100e-9;
  cfg.mcmc.steps = 1500;
  cfg.mcmc.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("pulse occupancy fit") {
  SUBCASE("noiseless refit recovers the trajectory") {
    const auto c = pulse_case(0.42, 1.25);
    const auto rates = PulseForwardModel(c.spec).rate(c.truth);
    auto h = ClickHistogram::uniform(-50e-9, 2e-9, 175, 10'000'000'000ULL);
    for (std::size_t i = 0; i < h.size(); ++i) h.counts[i] = static_cast<std::uint64_t>(std::llround(rates[i] * h.exposure()));
    const auto r = fit_pulse_occupancy(h, pulse_config(c, true, 1));
    CHECK(r.fit.value("n_i") == Approx(0.42).epsilon(0.05));
    CHECK(r.fit.value("n_f") == Approx(1.25).epsilon(0.05));
    CHECK(r.best_fit_rate.size() == h.size());
    CHECK(r.unidentifiable.empty());
  }
  SUBCASE("flat occupancy leaves gamma_m unidentified") {
    const auto c = pulse_case(1.0, 1.0);
    SimulationOptions so;
    so.seed = 4;
    const auto h = simulate_clicks(PulseForwardModel(c.spec).rate(c.truth), -50e-9, 2e-9, 10'000'000, so);
    const auto r = fit_pulse_occupancy(h, pulse_config(c, false, 5));
    CHECK(std::find(r.unidentifiable.begin(), r.unidentifiable.end(), "gamma_m_hz") != r.unidentifiable.end());
    CHECK(r.fit.names.size() == 5);
  }
  SUBCASE("posterior width scales as 1/sqrt(repetitions)") {
    const auto c = pulse_case(0.42, 1.25);
    const auto rates = PulseForwardModel(c.spec).rate(c.truth);
    double w_small = 0.0, w_large = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      SimulationOptions so;
      so.seed = 40 + s;
      const auto a = simulate_clicks(rates, -50e-9, 2e-9, 10'000'000, so);
      const auto b = simulate_clicks(rates, -50e-9, 2e-9, 100'000'000, so);
      w_small += fit_pulse_occupancy(a, pulse_config(c, true, 60 + s)).fit.error("n_i");
      w_large += fit_pulse_occupancy(b, pulse_config(c, true, 60 + s)).fit.error("n_i");
    }
    CHECK(w_large / w_small == Approx(1.0 / std::sqrt(10.0)).epsilon(0.2));
  }
  SUBCASE("credible intervals are nested") {
    const auto c = pulse_case(0.42, 1.25);
    SimulationOptions so;
    so.seed = 8;
    const auto h = simulate_clicks(PulseForwardModel(c.spec).rate(c.truth), -50e-9, 2e-9, 10'000'000, so);
    auto cfg = pulse_config(c, true, 9);
    cfg.level = 0.9;
    const auto r90 = fit_pulse_occupancy(h, cfg);
    cfg.level = 0.95;
    const auto r95 = fit_pulse_occupancy(h, cfg);
    for (std::size_t d = 0; d < r90.fit.params.size(); ++d) {
      CHECK(r95.fit.ci_low[d] <= r90.fit.ci_low[d]);
      CHECK(r90.fit.ci_high[d] <= r95.fit.ci_high[d]);
      CHECK(r90.fit.ci_low[d] <= r90.fit.params[d]);
      CHECK(r90.fit.params[d] <= r90.fit.ci_high[d]);
    }
    for (double v : r95.posterior.chain) CHECK(std::isfinite(v));
  }
  SUBCASE("grid mismatch") {
    const auto c = pulse_case(0.42, 1.25);
    const auto h = ClickHistogram::uniform(-50e-9, 4e-9, 175, 100);
    CHECK_THROWS_AS(fit_pulse_occupancy(h, pulse_config(c, true, 1)), GridMismatch);
  }
}
