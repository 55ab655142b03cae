#pragma once

#include <string>
#include <utility>

namespace omtherm {

/// Optomechanical constants of one device. All frequencies and rates are
/// ordinary frequencies (omega / 2 pi) in Hz.
struct DeviceParams {
  double omega_o_hz = 0.0;  ///< optical resonance
  double omega_m_hz = 0.0;  ///< mechanical frequency
  double kappa_hz = 0.0;    ///< total optical linewidth
  double kappa_e_hz = 0.0;  ///< external coupling
  double kappa_i_hz = 0.0;  ///< internal loss
  double gamma_0_hz = 0.0;  ///< intrinsic mechanical decay
  double g_om_hz = 0.0;     ///< zero-point optomechanical coupling

  /// Throws InvalidParameter naming the first field that breaks the
  /// positivity or kappa = kappa_i + kappa_e invariants.
  void validate() const;

  bool resolved_sideband() const noexcept { return kappa_hz < 2.0 * omega_m_hz; }

  /// Cavity coupling efficiency kappa_e / kappa.
  double coupling_efficiency() const noexcept { return kappa_e_hz / kappa_hz; }

  /// Builds a device with kappa_i derived from kappa - kappa_e.
  static DeviceParams from_linewidths(double omega_o_hz, double omega_m_hz, double kappa_hz,
                                      double kappa_e_hz, double gamma_0_hz, double g_om_hz);
};

/// Two-bath phenomenological model. gamma_p(n_c) = hot_prefactor * n_c^hot_exponent.
struct BathModel {
  double gamma_0_hz = 0.0;
  double n_0 = 0.0;
  double hot_prefactor_hz = 0.0;
  double hot_exponent = 1.0;
  double n_p = 0.0;

  void validate() const;
};

/// Exponential relaxation from n_i toward n_f during one optical pulse.
struct OccupancyDynamics {
  double n_i = 0.0;
  double n_f = 0.0;
  double gamma_m_hz = 0.0;
  double t_start = 0.0;
  double duration = 0.0;

  void validate() const;
  double t_end() const noexcept { return t_start + duration; }
};

/// Phenomenological repetition-rate and pump-probe curves.
struct RepetitionModel {
  double r0_hz = 0.0;
  double theta = 0.0;
  double n_res = 0.0;
  double n_coh = 0.0;
  double gamma_coh_hz = 0.0;

  void validate() const;
};

struct RepetitionNoise {
  double n_f = 0.0;
  double n_i = 0.0;
  double delay = 0.0;  ///< T_d = 1/R - T_0
};

// Parametrically enhanced scattering rate 4 g^2 n_c / kappa, in Hz (omega / 2 pi).
double gamma_om(const DeviceParams& dev, double n_c);

// Scattering events per second: the angular value of gamma_om.
double scattering_event_rate(const DeviceParams& dev, double n_c);

// Probability of one anti-Stokes scattering event during a pulse of length
// duration: 2 pi gamma_om T_0.
double scattering_probability(const DeviceParams& dev, double n_c, double duration);

// Resonant-pump reduction of the detected sideband rate, (kappa / 2 omega_m)^2.
double resonant_suppression(const DeviceParams& dev);

// n_i + (n_f - n_i)(1 - exp(-2 pi gamma_m (t - t_start))). Throws DomainError
// outside [t_start, t_start + duration].
double occupancy_at(const OccupancyDynamics& dyn, double t);

// Time average over the pulse window, in closed form.
double average_occupancy(const OccupancyDynamics& dyn);

double hot_bath_rate(const BathModel& bath, double n_c);
double gamma_m_of_nc(const BathModel& bath, double n_c);

// Detailed-balance steady state (gamma_p n_p + gamma_0 n_0) / (gamma_0 + gamma_p).
// Throws DomainError when both coupling rates vanish.
double steady_state_occupancy(const BathModel& bath, double n_c);

double cw_noise_power_law(double prefactor, double exponent, double n_c);

// n_f = (R/R_0)^theta, T_d = 1/R - T_0, n_i = n_f exp(-2 pi gamma_decay T_d) + n_dilution.
// Throws DomainError when R T_0 >= 1.
RepetitionNoise repetition_noise(const RepetitionModel& model, double rate_hz, double duration,
                                 double n_dilution, double gamma_decay_hz);

// n_coh exp(-2 pi gamma_coh T_d) + n_res.
double pump_probe_decay(const RepetitionModel& model, double delay);

// Bose-Einstein occupation of a mode at omega_m_hz in a bath at temperature_k.
double occupancy_from_temperature(double omega_m_hz, double temperature_k);
double temperature_from_occupancy(double omega_m_hz, double occupancy);

namespace fixtures {

// Release-free device at 10 mK (gamma_0 = 500 kHz).
DeviceParams release_free_device();
// Suspended device B (noise thermometry).
DeviceParams suspended_device();

// Labeled intrinsic-decay values for the release-free device; the three
// measurements disagree and none is preferred.
struct DecayRateFixture {
  const char* provenance;
  double gamma_0_hz;
};
inline constexpr DecayRateFixture kReleaseFreeDecayRates[] = {
    {"device table", 500e3},
    {"linewidth power-law fit", 510e3},
    {"light-off ringdown", 660e3},
};

// Hot-bath power law of the release-free linewidth data: gamma_0 = 510 kHz,
// prefactor 170 Hz, exponent 0.98.
BathModel release_free_bath();

// R_0 = 52 kHz, theta = 0.114, n_coh = 64, gamma_coh = 607 kHz, n_res = 0.81.
RepetitionModel release_free_repetition();

}  // namespace fixtures

}  // namespace omtherm
