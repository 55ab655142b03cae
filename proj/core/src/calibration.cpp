#include "omtherm/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "omtherm/errors.hpp"
#include "omtherm/log.hpp"
#include "omtherm/random.hpp"
#include "omtherm/units.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omtherm {

namespace {

double rel_sq(double sigma, double value) {
  const double r = sigma / value;
  return r * r;
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter(field, "must be > 0");
}

double direct_value(double g_hz, double kappa_hz, double eta_tot) {
  return kTwoPi * 4.0 * g_hz * g_hz * eta_tot / kappa_hz;
}

}  // namespace

std::string to_string(CalibrationMethod method) {
  switch (method) {
    case CalibrationMethod::direct: return "direct";
    case CalibrationMethod::sideband_asymmetry: return "sideband_asymmetry";
    case CalibrationMethod::coherent_excitation: return "coherent_excitation";
  }
  return "unknown";
}

CalibrationResult direct_calibration(const DeviceParams& dev, const DetectionConfig& cfg,
                                     const DirectSigmas& sigmas) {
  dev.validate();
  cfg.validate();
  const std::pair<const char*, double> etas[] = {
      {"eta_o", cfg.eta_o}, {"eta_fc", cfg.eta_fc}, {"eta_loss", cfg.eta_loss}, {"eta_det", cfg.eta_det}};
  for (const auto& [name, v] : etas)
    if (!(v > 0.0)) throw InvalidParameter(name, "efficiency missing or zero; direct calibration needs all four");

  CalibrationResult res;
  res.method = CalibrationMethod::direct;
  res.gamma_cal = direct_value(dev.g_om_hz, dev.kappa_hz, cfg.eta_tot());
  const double rel2 = 4.0 * rel_sq(sigmas.g_om_hz, dev.g_om_hz) + rel_sq(sigmas.kappa_hz, dev.kappa_hz) +
                      rel_sq(sigmas.eta_o, cfg.eta_o) + rel_sq(sigmas.eta_fc, cfg.eta_fc) +
                      rel_sq(sigmas.eta_loss, cfg.eta_loss) + rel_sq(sigmas.eta_det, cfg.eta_det);
  res.sigma = res.gamma_cal * std::sqrt(rel2);
  res.inputs = {{"g_om_hz", dev.g_om_hz},           {"kappa_hz", dev.kappa_hz},
                {"eta_o", cfg.eta_o},               {"eta_fc", cfg.eta_fc},
                {"eta_loss", cfg.eta_loss},         {"eta_det", cfg.eta_det},
                {"sigma_g_om_hz", sigmas.g_om_hz},  {"sigma_kappa_hz", sigmas.kappa_hz},
                {"sigma_eta_o", sigmas.eta_o},      {"sigma_eta_fc", sigmas.eta_fc},
                {"sigma_eta_loss", sigmas.eta_loss}, {"sigma_eta_det", sigmas.eta_det}};
  return res;
}

PropagatedValue propagate_monte_carlo(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> means,
                                      std::span<const double> sigmas, std::size_t draws,
                                      std::uint64_t seed) {
  if (means.size() != sigmas.size()) throw InvalidParameter("sigmas", "one sigma per input");
  if (draws < 2) throw InvalidParameter("draws", "must be >= 2");
  std::vector<double> values(draws);
  const auto n = static_cast<std::int64_t>(draws);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (std::int64_t i = 0; i < n; ++i) {
    RandomStream rng(seed, static_cast<std::uint64_t>(i));
    std::vector<double> x(means.size());
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = means[j] + sigmas[j] * rng.normal();
    values[static_cast<std::size_t>(i)] = f(x);
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(draws);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(draws - 1))};
}

CalibrationResult direct_calibration_monte_carlo(const DeviceParams& dev,
                                                 const DetectionConfig& cfg,
                                                 const DirectSigmas& sigmas, std::size_t draws,
                                                 std::uint64_t seed) {
  CalibrationResult res = direct_calibration(dev, cfg, sigmas);
  const double means[] = {dev.g_om_hz, dev.kappa_hz, cfg.eta_o, cfg.eta_fc, cfg.eta_loss, cfg.eta_det};
  const double sds[] = {sigmas.g_om_hz, sigmas.kappa_hz, sigmas.eta_o,
                        sigmas.eta_fc,  sigmas.eta_loss, sigmas.eta_det};
  const auto mc = propagate_monte_carlo(
      [](std::span<const double> x) { return direct_value(x[0], x[1], x[2] * x[3] * x[4] * x[5]); },
      means, sds, draws, seed);
  res.sigma = mc.sigma;
  res.inputs["mc_draws"] = static_cast<double>(draws);
  res.inputs["mc_mean"] = mc.mean;
  return res;
}

CalibrationResult asymmetry_calibration(double gamma_plus, double sigma_plus, double gamma_minus,
                                        double sigma_minus, double n_c,
                                        const AsymmetryOptions& options) {
  require_positive(n_c, "n_c");
  if (!(sigma_plus >= 0.0 && sigma_minus >= 0.0))
    throw InvalidParameter("sigma", "rate uncertainties must be >= 0");
  if (!(gamma_plus > gamma_minus))
    throw DomainError("asymmetry_calibration: Stokes rate must exceed anti-Stokes rate; "
                      "asymmetry is non-positive or the inputs are swapped");
  CalibrationResult res;
  res.method = CalibrationMethod::sideband_asymmetry;
  res.gamma_cal = (gamma_plus - gamma_minus) / n_c;
  res.sigma = std::hypot(sigma_plus, sigma_minus) / n_c;
  res.inputs = {{"gamma_plus", gamma_plus},   {"sigma_plus", sigma_plus},
                {"gamma_minus", gamma_minus}, {"sigma_minus", sigma_minus},
                {"n_c", n_c}};
  if (!std::isnan(options.backaction_ratio)) {
    res.inputs["backaction_ratio"] = options.backaction_ratio;
    if (options.backaction_ratio > options.backaction_threshold) {
      res.warnings.push_back("gamma_om / gamma_m = " + std::to_string(options.backaction_ratio) +
                             " exceeds " + std::to_string(options.backaction_threshold) +
                             "; dynamical back-action may bias the sideband rates");
      warn(res.warnings.back());
    }
  }
  return res;
}

CalibrationResult asymmetry_calibration_from_counts(std::uint64_t clicks_plus,
                                                    std::uint64_t clicks_minus,
                                                    double live_time_s, double n_c,
                                                    const AsymmetryOptions& options) {
  require_positive(live_time_s, "live_time_s");
  const auto kp = static_cast<double>(clicks_plus);
  const auto km = static_cast<double>(clicks_minus);
  CalibrationResult res = asymmetry_calibration(kp / live_time_s, std::sqrt(kp) / live_time_s,
                                                km / live_time_s, std::sqrt(km) / live_time_s,
                                                n_c, options);
  res.inputs["live_time_s"] = live_time_s;
  return res;
}

SweepFit sideband_sweep_fit(const std::vector<SweepPoint>& sweep, const FilterStack& stack,
                            double gamma_m_hz, FilterShape shape) {
  stack.validate();
  require_positive(gamma_m_hz, "gamma_m_hz");
  if (sweep.size() < 5) throw FitError("sideband_sweep_fit: needs at least 5 sweep points");
  double lo = sweep.front().delta_p_hz, hi = lo;
  for (const auto& p : sweep) {
    if (!(p.sigma > 0.0)) throw InvalidParameter("sigma", "must be > 0");
    lo = std::min(lo, p.delta_p_hz);
    hi = std::max(hi, p.delta_p_hz);
  }
  if (hi - lo < 2.0 * stack.fwhm_hz)
    throw FitError("sideband_sweep_fit: sweep must span at least twice the filter FWHM");

  double swss = 0.0, swsr = 0.0;
  std::vector<double> shape_values(sweep.size());
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double s = cw_sweep_response(stack, gamma_m_hz, sweep[i].delta_p_hz, shape);
    shape_values[i] = s;
    const double w = 1.0 / (sweep[i].sigma * sweep[i].sigma);
    swss += w * s * s;
    swsr += w * s * sweep[i].rate;
  }
  SweepFit fit;
  fit.amplitude = swsr / swss;
  fit.sigma = 1.0 / std::sqrt(swss);
  fit.peak_rate = fit.amplitude * cw_sweep_response(stack, gamma_m_hz, 0.0, shape);
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    const double r = (fit.amplitude * shape_values[i] - sweep[i].rate) / sweep[i].sigma;
    fit.chi2 += r * r;
  }
  fit.dof = sweep.size() - 1;
  return fit;
}

void CoherentDriveSpec::validate() const {
  if (!(xi_sb > 0.0 && xi_sb < 1.0)) throw InvalidParameter("xi_sb", "must lie in (0, 1)");
  require_positive(phi_pump, "phi_pump");
  require_positive(t_drive, "t_drive");
}

double coherent_occupancy(const CoherentDriveSpec& spec, double gamma_om_hz, double gamma_m_hz,
                          double eta_o) {
  spec.validate();
  require_positive(gamma_om_hz, "gamma_om_hz");
  require_positive(gamma_m_hz, "gamma_m_hz");
  if (!(eta_o > 0.0 && eta_o <= 1.0)) throw InvalidParameter("eta_o", "must lie in (0, 1]");
  const double gm = angular(gamma_m_hz);
  return 4.0 * eta_o * angular(gamma_om_hz) * spec.xi_sb * spec.phi_pump / (gm * gm);
}

CalibrationResult coherent_calibration(const CoherentDriveSpec& spec, double gamma_m_hz,
                                       double gamma_om_hz, double eta_o, double gamma_minus_coh,
                                       double n_c, const CoherentSigmas& sigmas) {
  require_positive(n_c, "n_c");
  require_positive(gamma_minus_coh, "gamma_minus_coh");
  const double n_coh = coherent_occupancy(spec, gamma_om_hz, gamma_m_hz, eta_o);

  CalibrationResult res;
  res.method = CalibrationMethod::coherent_excitation;
  res.gamma_cal = gamma_minus_coh / (n_c * n_coh);
  const double rel2 = sigmas.xi_sb * sigmas.xi_sb + sigmas.phi_pump * sigmas.phi_pump +
                      4.0 * sigmas.gamma_m * sigmas.gamma_m + sigmas.gamma_om * sigmas.gamma_om +
                      sigmas.eta_o * sigmas.eta_o + rel_sq(sigmas.gamma_minus, gamma_minus_coh);
  res.sigma = res.gamma_cal * std::sqrt(rel2);
  res.inputs = {{"xi_sb", spec.xi_sb},       {"phi_pump", spec.phi_pump},
                {"t_drive", spec.t_drive},   {"gamma_m_hz", gamma_m_hz},
                {"gamma_om_hz", gamma_om_hz}, {"eta_o", eta_o},
                {"gamma_minus_coh", gamma_minus_coh}, {"n_c", n_c},
                {"n_coh", n_coh}};
  const double decay_times = angular(gamma_m_hz) * spec.t_drive;
  if (decay_times < 5.0) {
    res.warnings.push_back("drive lasts " + std::to_string(decay_times) +
                           " mechanical decay times; the mode may not reach steady state");
    warn(res.warnings.back());
  }
  return res;
}

Extrapolation extrapolate_to_drive_end(const std::vector<DataPoint>& decay, double t_end,
                                       bool with_floor) {
  Extrapolation out;
  out.fit = fit_exponential_decay(decay, with_floor);
  const double a = out.fit.value("amplitude");
  const double k = out.fit.value("rate_hz");
  const double e = std::exp(-kTwoPi * k * t_end);
  out.value = a * e;
  // First-order propagation through amplitude and rate (covariance ignored).
  const double da = out.fit.error("amplitude") * e;
  const double dk = a * e * kTwoPi * t_end * out.fit.error("rate_hz");
  out.sigma = std::hypot(da, dk);
  out.floor = with_floor ? out.fit.value("floor") : 0.0;
  return out;
}

bool CalibrationStudy::consistent(double z_max) const {
  return std::all_of(pairwise_z.begin(), pairwise_z.end(), [&](double z) { return z <= z_max; });
}

CalibrationStudy synthetic_calibration_study(const DeviceParams& dev, const DetectionConfig& cfg,
                                             const BathModel& bath,
                                             const CalibrationStudyOptions& options) {
  dev.validate();
  cfg.validate();
  CalibrationStudy study;
  study.truth = calibration_rate(dev, cfg);

  // Direct: every input is "measured" with its stated uncertainty.
  {
    RandomStream rng(options.seed, 0);
    const auto& s = options.direct_sigmas;
    DeviceParams measured = dev;
    measured.g_om_hz = dev.g_om_hz + s.g_om_hz * rng.normal();
    measured.kappa_hz = std::max(dev.kappa_e_hz * (1.0 + 1e-9), dev.kappa_hz + s.kappa_hz * rng.normal());
    measured.kappa_i_hz = measured.kappa_hz - measured.kappa_e_hz;
    DetectionConfig m = cfg;
    m.eta_o = std::clamp(cfg.eta_o + s.eta_o * rng.normal(), 1e-6, 1.0);
    m.eta_fc = std::clamp(cfg.eta_fc + s.eta_fc * rng.normal(), 1e-6, 1.0);
    m.eta_loss = std::clamp(cfg.eta_loss + s.eta_loss * rng.normal(), 1e-6, 1.0);
    m.eta_det = std::clamp(cfg.eta_det + s.eta_det * rng.normal(), 1e-6, 1.0);
    study.direct = direct_calibration(measured, m, s);
  }

  // Sideband asymmetry: Stokes (blue) and anti-Stokes (red) click totals.
  {
    RandomStream rng(options.seed, 1);
    const double n_c = options.n_c_asym;
    const double plus = sideband_rate(dev, cfg, Detuning::blue, n_c, options.n_m_asym);
    const double minus = sideband_rate(dev, cfg, Detuning::red, n_c, options.n_m_asym);
    const double t = options.live_time_asym_s;
    AsymmetryOptions ao;
    ao.backaction_ratio = gamma_om(dev, n_c) / gamma_m_of_nc(bath, n_c);
    study.asymmetry = asymmetry_calibration_from_counts(rng.poisson(plus * t), rng.poisson(minus * t),
                                                        t, n_c, ao);
  }

  // Coherent excitation: a driven mode rings down after the drive; the
  // coherent rate at the drive end is extrapolated from the decay.
  {
    RandomStream rng(options.seed, 2);
    const double n_c = options.n_c_coh;
    const double gamma_m = gamma_m_of_nc(bath, n_c);
    const double g_om = gamma_om(dev, n_c);
    CoherentDriveSpec spec;
    spec.xi_sb = 1e-3;
    spec.t_drive = 20.0 / angular(gamma_m);
    const double gm = angular(gamma_m);
    spec.phi_pump = options.n_coh * gm * gm / (4.0 * cfg.eta_o * angular(g_om) * spec.xi_sb);

    const double n_th = steady_state_occupancy(bath, n_c);
    const double scale = study.truth * n_c;
    auto rate = [&](double t) {
      return scale * (options.n_coh * std::exp(-gm * t) + n_th) + cfg.noise_rate();
    };
    SimulationOptions so;
    so.seed = options.seed ^ 0x9e3779b97f4a7c15ULL;
    const ClickHistogram h = simulate_clicks(rate, 0.0, options.window_coh_s,
                                             options.bin_width_coh_s, options.repetitions_coh, so);
    std::vector<DataPoint> points;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const auto k = static_cast<double>(h.counts[i]);
      const double exposure = h.exposure();
      points.push_back({h.bin_start[i], k / exposure, std::sqrt(std::max(k, 1.0)) / exposure});
    }
    const Extrapolation ex = extrapolate_to_drive_end(points, 0.0, true);

    // Drive-side quantities are "measured" with their stated uncertainties.
    CoherentSigmas cs = options.coherent_sigmas;
    CoherentDriveSpec measured = spec;
    measured.xi_sb = spec.xi_sb * (1.0 + cs.xi_sb * rng.normal());
    measured.phi_pump = spec.phi_pump * (1.0 + cs.phi_pump * rng.normal());
    const double gamma_m_meas = gamma_m * (1.0 + cs.gamma_m * rng.normal());
    const double g_om_meas = g_om * (1.0 + cs.gamma_om * rng.normal());
    const double eta_o_meas = std::clamp(cfg.eta_o * (1.0 + cs.eta_o * rng.normal()), 1e-6, 1.0);
    cs.gamma_minus = ex.sigma;
    study.coherent = coherent_calibration(measured, gamma_m_meas, g_om_meas, eta_o_meas, ex.value,
                                          n_c, cs);
  }

  const CalibrationResult* r[] = {&study.direct, &study.asymmetry, &study.coherent};
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      study.pairwise_z.push_back(std::abs(r[i]->gamma_cal - r[j]->gamma_cal) /
                                 std::hypot(r[i]->sigma, r[j]->sigma));
  return study;
}

namespace fixtures {

DirectSigmas release_free_direct_sigmas() {
  const DetectionConfig cfg = release_free_detection();
  DirectSigmas s;
  s.g_om_hz = 20e3;
  s.kappa_hz = 30e6;
  s.eta_o = 0.02;
  s.eta_fc = 0.009;
  s.eta_loss = 0.0325 * cfg.eta_loss;
  s.eta_det = 0.0325 * cfg.eta_det;
  return s;
}

AsymmetryFixture release_free_asymmetry() {
  const double sigma = 700.0 / std::sqrt(2.0);
  return {6330.0, sigma, 4220.0, sigma, 100.0};
}

CoherentFixture release_free_coherent() {
  const DeviceParams dev = release_free_device();
  const BathModel bath = release_free_bath();
  CoherentFixture f;
  f.n_c = 50.0;
  f.gamma_m_hz = gamma_m_of_nc(bath, f.n_c);
  f.gamma_om_hz = gamma_om(dev, f.n_c);
  f.eta_o = dev.kappa_e_hz / dev.kappa_hz;
  f.spec.xi_sb = 1e-3;
  f.spec.t_drive = 10e-6;
  const double n_coh = 100.0;
  const double gm = angular(f.gamma_m_hz);
  f.spec.phi_pump = n_coh * gm * gm / (4.0 * f.eta_o * angular(f.gamma_om_hz) * f.spec.xi_sb);
  f.gamma_minus_coh = 20.8 * f.n_c * n_coh;
  f.sigmas.xi_sb = 0.045;
  f.sigmas.phi_pump = 0.045;
  f.sigmas.gamma_m = 0.03;
  f.sigmas.gamma_om = 0.0;
  f.sigmas.eta_o = 0.048;
  f.sigmas.gamma_minus = 0.02 * f.gamma_minus_coh;
  return f;
}

}  // namespace fixtures

}  // namespace omtherm
