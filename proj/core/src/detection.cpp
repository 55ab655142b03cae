#include "omtherm/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "omtherm/errors.hpp"
#include "omtherm/random.hpp"
#include "omtherm/units.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace omtherm {

namespace {

void require_fraction(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameter(field, "must lie in [0, 1]");
}

}  // namespace

void DetectionConfig::validate() const {
  require_fraction(eta_o, "eta_o");
  require_fraction(eta_fc, "eta_fc");
  require_fraction(eta_loss, "eta_loss");
  require_fraction(eta_det, "eta_det");
  require_fraction(pump_suppression, "pump_suppression");
  if (!(dark_rate_hz >= 0.0) || !std::isfinite(dark_rate_hz))
    throw InvalidParameter("dark_rate_hz", "must be >= 0");
  if (!(laser_noise_rate_hz >= 0.0) || !std::isfinite(laser_noise_rate_hz))
    throw InvalidParameter("laser_noise_rate_hz", "must be >= 0");
}

void ClickHistogram::validate() const {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw InvalidParameter("bin_width", "must be > 0");
  if (repetitions < 1) throw InvalidParameter("repetitions", "must be >= 1");
  if (bin_start.size() != counts.size())
    throw InvalidParameter("counts", "one count per bin is required");
  for (std::size_t i = 1; i < bin_start.size(); ++i) {
    const double expected = bin_start.front() + static_cast<double>(i) * bin_width;
    if (std::abs(bin_start[i] - expected) > 1e-6 * bin_width)
      throw InvalidParameter("bin_start", "bins must be contiguous with uniform width");
  }
}

std::uint64_t ClickHistogram::total_counts() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ClickHistogram ClickHistogram::uniform(double t0, double bin_width, std::size_t bins,
                                       std::uint64_t repetitions) {
  ClickHistogram h;
  h.bin_width = bin_width;
  h.repetitions = repetitions;
  h.bin_start.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) h.bin_start[i] = t0 + static_cast<double>(i) * bin_width;
  h.counts.assign(bins, 0);
  return h;
}

double sideband_rate(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     Sideband sideband, double n_c, double n_m) {
  if (!(n_m >= 0.0)) throw InvalidParameter("n_m", "must be >= 0");
  double scattering = scattering_event_rate(dev, n_c) * cfg.eta_tot();
  if (det == Detuning::resonant) scattering *= resonant_suppression(dev);
  return scattering * (n_m + vacuum_term(sideband)) + cfg.noise_rate();
}

double sideband_rate(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     double n_c, double n_m) {
  return sideband_rate(dev, cfg, det, detected_sideband(det), n_c, n_m);
}

double calibration_rate(const DeviceParams& dev, const DetectionConfig& cfg) {
  return scattering_event_rate(dev, 1.0) * cfg.eta_tot();
}

NnepTerms nnep_terms(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     double n_c, double gamma_cal) {
  if (!(n_c > 0.0)) throw InvalidParameter("n_c", "must be > 0");
  if (!(gamma_cal > 0.0)) throw InvalidParameter("gamma_cal", "must be > 0");
  NnepTerms terms;
  terms.dark = cfg.dark_rate_hz / (gamma_cal * n_c);
  if (det == Detuning::resonant) {
    const double enhancement = 2.0 * dev.omega_m_hz / dev.kappa_hz;
    terms.dark *= enhancement * enhancement;
    const double leak = dev.kappa_hz * dev.omega_m_hz * (1.0 - 2.0 * cfg.eta_o) /
                        (dev.kappa_e_hz * dev.g_om_hz);
    terms.pump = cfg.pump_suppression * leak * leak;
  } else {
    const double leak = dev.kappa_hz * dev.omega_m_hz / (2.0 * dev.kappa_e_hz * dev.g_om_hz);
    terms.pump = cfg.pump_suppression * leak * leak;
  }
  return terms;
}

double nnep(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det, double n_c,
            double gamma_cal) {
  return nnep_terms(dev, cfg, det, n_c, gamma_cal).total();
}

ClickHistogram simulate_clicks(std::span<const double> bin_rates, double t_start,
                               double bin_width, std::uint64_t repetitions,
                               const SimulationOptions& options) {
  if (!(bin_width > 0.0) || !std::isfinite(bin_width))
    throw InvalidParameter("bin_width", "must be > 0");
  if (repetitions < 1) throw InvalidParameter("repetitions", "must be >= 1");
  for (double r : bin_rates)
    if (!(r >= 0.0) || !std::isfinite(r))
      throw DomainError("simulate_clicks: rate must be finite and >= 0");

  ClickHistogram h = ClickHistogram::uniform(t_start, bin_width, bin_rates.size(), repetitions);
  const std::size_t bins = bin_rates.size();
  const std::uint64_t blocks = (repetitions + kRepetitionBlock - 1) / kRepetitionBlock;
  const auto block_count = static_cast<std::int64_t>(blocks);

#ifdef _OPENMP
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
#endif
  {
    std::vector<std::uint64_t> local(bins, 0);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t b = 0; b < block_count; ++b) {
      const auto block = static_cast<std::uint64_t>(b);
      const std::uint64_t first = block * kRepetitionBlock;
      const std::uint64_t reps = std::min(kRepetitionBlock, repetitions - first);
      RandomStream rng(options.seed, block);
      // A sum of per-repetition Poisson counts is Poisson in the summed mean.
      const double scale = static_cast<double>(reps) * bin_width;
      for (std::size_t i = 0; i < bins; ++i) local[i] += rng.poisson(bin_rates[i] * scale);
    }
#ifdef _OPENMP
#pragma omp critical
#endif
    for (std::size_t i = 0; i < bins; ++i) h.counts[i] += local[i];
  }
  return h;
}

ClickHistogram simulate_clicks(const std::function<double(double)>& rate_fn, double t_start,
                               double window, double bin_width, std::uint64_t repetitions,
                               const SimulationOptions& options) {
  if (!(bin_width > 0.0)) throw InvalidParameter("bin_width", "must be > 0");
  if (!(window > 0.0)) throw InvalidParameter("window", "must be > 0");
  const double ratio = window / bin_width;
  const double bins = std::round(ratio);
  if (bins < 1.0 || std::abs(ratio - bins) > 1e-6 * ratio)
    throw InvalidParameter("bin_width", "must divide the window into whole bins");
  std::vector<double> rates(static_cast<std::size_t>(bins));
  for (std::size_t i = 0; i < rates.size(); ++i)
    rates[i] = rate_fn(t_start + static_cast<double>(i) * bin_width);
  return simulate_clicks(rates, t_start, bin_width, repetitions, options);
}

OccupancySeries histogram_to_occupancy(const ClickHistogram& h, double gamma_cal, double nc_peak,
                                       Sideband sideband) {
  h.validate();
  if (!(gamma_cal * nc_peak > 0.0))
    throw InvalidParameter("gamma_cal", "gamma_cal * nc_peak must be > 0");
  const double exposure = h.exposure();
  if (!(exposure > 0.0)) throw DomainError("histogram_to_occupancy: zero exposure");

  const double scale = 1.0 / (exposure * gamma_cal * nc_peak);
  const double vac = vacuum_term(sideband);
  OccupancySeries out;
  out.time = h.bin_start;
  out.value.resize(h.size());
  out.sigma.resize(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto k = static_cast<double>(h.counts[i]);
    out.value[i] = k * scale - vac;
    out.sigma[i] = std::sqrt(k) * scale;
  }
  return out;
}

SampledWaveform detected_pulse_rate(const PulseRateModel& model, const SampledWaveform& occupancy,
                                    const SampledWaveform& nc_envelope) {
  SampledWaveform rate =
      filtered_occupancy_signal(model.stack, occupancy, nc_envelope, model.sideband);
  const double vac = vacuum_term(model.sideband);
  for (double& v : rate.values)
    v = std::max(0.0, model.gamma_cal * model.nc_peak * (v + vac)) + model.noise_rate_hz;
  return rate;
}

namespace fixtures {

DetectionConfig release_free_detection() {
  DetectionConfig cfg;
  cfg.eta_o = 680.0 / 1630.0;
  cfg.eta_fc = 0.1;
  cfg.eta_loss = 0.2173;
  cfg.eta_det = 0.8;
  cfg.dark_rate_hz = 7.0;
  cfg.pump_suppression = std::pow(10.0, -11.36);
  cfg.laser_noise_rate_hz = 0.0;
  return cfg;
}

}  // namespace fixtures

}  // namespace omtherm
