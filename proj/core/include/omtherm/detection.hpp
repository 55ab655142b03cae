#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "omtherm/filter.hpp"
#include "omtherm/model.hpp"
#include "omtherm/waveform.hpp"

namespace omtherm {

/// Pump placement relative to the optical resonance.
enum class Detuning { red, blue, resonant };

/// The sideband that falls on the cavity: anti-Stokes for red and resonant
/// pumping, Stokes for blue.
constexpr Sideband detected_sideband(Detuning det) noexcept {
  return det == Detuning::blue ? Sideband::stokes : Sideband::anti_stokes;
}

struct DetectionConfig {
  double eta_o = 0.0;     ///< cavity coupling kappa_e / kappa
  double eta_fc = 0.0;    ///< fiber-chip coupling
  double eta_loss = 0.0;  ///< chip-to-detector transmission
  double eta_det = 0.0;   ///< detector efficiency
  double dark_rate_hz = 0.0;
  double pump_suppression = 0.0;  ///< residual pump power ratio A
  double laser_noise_rate_hz = 0.0;

  void validate() const;
  double eta_tot() const noexcept { return eta_o * eta_fc * eta_loss * eta_det; }
  double noise_rate() const noexcept { return dark_rate_hz + laser_noise_rate_hz; }
};

/// Clicks accumulated over `repetitions` pulse cycles in uniform bins.
struct ClickHistogram {
  std::vector<double> bin_start;
  double bin_width = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t repetitions = 1;

  void validate() const;
  std::size_t size() const noexcept { return counts.size(); }
  /// Integrated live time of one bin across all repetitions.
  double exposure() const noexcept { return static_cast<double>(repetitions) * bin_width; }
  std::uint64_t total_counts() const noexcept;

  static ClickHistogram uniform(double t0, double bin_width, std::size_t bins,
                                std::uint64_t repetitions);
};

// Gamma_+- = 2 pi gamma_om eta_tot (n_m + vacuum) + Gamma_noise; on resonance
// the optomechanical term carries (kappa / 2 omega_m)^2.
double sideband_rate(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     Sideband sideband, double n_c, double n_m);
double sideband_rate(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     double n_c, double n_m);

// Ground-truth Gamma_cal of a synthetic device: detected counts per second at
// unit intracavity photon number and unit occupancy.
double calibration_rate(const DeviceParams& dev, const DetectionConfig& cfg);

struct NnepTerms {
  double dark = 0.0;
  double pump = 0.0;
  double total() const noexcept { return dark + pump; }
};

// Noise-equivalent phonon occupation split into dark-count and pump-leak parts.
NnepTerms nnep_terms(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det,
                     double n_c, double gamma_cal);
double nnep(const DeviceParams& dev, const DetectionConfig& cfg, Detuning det, double n_c,
            double gamma_cal);

/// Repetitions that share one random substream. A fixed algorithm constant:
/// results depend on (seed, repetitions, grid) and never on threading.
inline constexpr std::uint64_t kRepetitionBlock = 4096;

struct SimulationOptions {
  std::uint64_t seed = 0;
  int threads = 0;  ///< 0 = runtime default
};

/// Poisson clicks for per-bin rates (counts/s) held constant over each bin.
ClickHistogram simulate_clicks(std::span<const double> bin_rates, double t_start,
                               double bin_width, std::uint64_t repetitions,
                               const SimulationOptions& options);

/// Samples rate_fn at each bin's left edge over [t_start, t_start + window).
/// bin_width must divide window. Throws DomainError on negative or
/// non-finite rates.
ClickHistogram simulate_clicks(const std::function<double(double)>& rate_fn, double t_start,
                               double window, double bin_width, std::uint64_t repetitions,
                               const SimulationOptions& options);

/// Per-bin calibrated occupancy estimate with one-sigma Poisson errors.
struct OccupancySeries {
  std::vector<double> time;
  std::vector<double> value;
  std::vector<double> sigma;
};

OccupancySeries histogram_to_occupancy(const ClickHistogram& h, double gamma_cal, double nc_peak,
                                       Sideband sideband);

/// Forward model of the detected rate during a pulse:
/// Gamma_cal n_c_peak (n_m* + vacuum) + noise, with n_m* from
/// filtered_occupancy_signal.
struct PulseRateModel {
  FilterStack stack;
  Sideband sideband = Sideband::anti_stokes;
  double gamma_cal = 0.0;
  double nc_peak = 0.0;
  double noise_rate_hz = 0.0;
};

SampledWaveform detected_pulse_rate(const PulseRateModel& model, const SampledWaveform& occupancy,
                                    const SampledWaveform& nc_envelope);

namespace fixtures {

// Efficiencies consistent with a 24.7 cps direct calibration of the
// release-free device: eta_o = kappa_e / kappa, eta_fc = 0.1, eta_det = 0.8,
// eta_loss chosen to close the budget. Dark rate 7 Hz, pump suppression
// -113.6 dB, no laser noise.
DetectionConfig release_free_detection();

}  // namespace fixtures

}  // namespace omtherm
