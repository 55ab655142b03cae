#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "omtherm/detection.hpp"
#include "omtherm/filter.hpp"
#include "omtherm/fit.hpp"
#include "omtherm/mcmc.hpp"
#include "omtherm/waveform.hpp"

namespace omtherm {

/// Fixed ingredients of the pulsed detection forward model.
struct PulseModelSpec {
  FilterStack stack;
  Sideband sideband = Sideband::anti_stokes;
  double gamma_cal = 0.0;  ///< counts/s at unit n_c and unit n_m
  double nc_peak = 0.0;
  /// Pulse shape on the histogram grid, peak 1. Its support should reach past
  /// the latest admissible t_stop; the model truncates it at t_stop.
  SampledWaveform nc_envelope;
  /// Origin of the occupancy dynamics; NaN picks the first sample where the
  /// envelope reaches 1/2.
  double t_start = std::numeric_limits<double>::quiet_NaN();
};

struct PulseParameters {
  double n_i = 0.0;
  double n_f = 0.0;
  double t_stop = 0.0;
  double n_nep = 0.0;
  double gamma_m_hz = 0.0;
};

/// Per-bin detected rate Gamma_cal n_c (n_m*(t_i) + vacuum + n_NEP), with
/// n_m* the filtered, gated Eq. (1) trajectory. Rates are evaluated at bin
/// left edges, the same convention simulate_clicks uses.
class PulseForwardModel {
public:
  explicit PulseForwardModel(PulseModelSpec spec);

  const PulseModelSpec& spec() const noexcept { return spec_; }
  double t_start() const noexcept { return t_start_; }
  std::size_t size() const noexcept { return spec_.nc_envelope.size(); }

  /// Rate in counts/s, using the caller's filter (one per thread).
  void rate(const PulseParameters& p, PulseFilter& filter, std::span<double> out) const;
  std::vector<double> rate(const PulseParameters& p) const;

  PulseFilter make_filter() const;

private:
  PulseModelSpec spec_;
  double t_start_ = 0.0;
};

struct PulseFitConfig {
  PulseModelSpec model;
  std::optional<double> gamma_m_hz;  ///< fixed; when empty gamma_m is sampled
  double nominal_t_stop = 0.0;
  PriorSpec prior;                   ///< empty: default_pulse_prior
  McmcOptions mcmc;
  double level = 0.95;
  /// Credible interval wider than this fraction of the prior width marks a
  /// parameter as unidentifiable.
  double unidentifiable_fraction = 0.75;
  /// Steps of the locating run that precedes a uniform-init chain; -1 picks
  /// a quarter of mcmc.steps (at least 100), 0 disables it.
  int pilot_steps = -1;
};

/// n_i, n_f in [0, 10]; t_stop within 3 filter response times of the nominal
/// end; n_nep in [0, 1]; gamma_m (when free) in [10 kHz, 10 MHz].
PriorSpec default_pulse_prior(const PulseFitConfig& config);

struct PulseFitResult {
  FitResult fit;  ///< posterior medians, quantile intervals at `level`
  PosteriorSamples posterior;
  SampledWaveform best_fit_rate;  ///< counts/s at the posterior median
  std::vector<std::string> unidentifiable;
  double autocorrelation_steps = 0.0;  ///< max over parameters
};

/// Poisson-likelihood MCMC over {n_i, n_f, t_stop, n_nep[, gamma_m_hz]}.
/// Throws GridMismatch when the histogram and envelope grids differ.
PulseFitResult fit_pulse_occupancy(const ClickHistogram& data, const PulseFitConfig& config);

}  // namespace omtherm
