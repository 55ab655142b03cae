#include "omtherm/model.hpp"

#include <cmath>

#include "omtherm/errors.hpp"
#include "omtherm/units.hpp"

namespace omtherm {

namespace {

void require_positive(double value, const char* field) {
  if (!(value > 0.0) || !std::isfinite(value)) throw InvalidParameter(field, "must be > 0");
}

void require_nonnegative(double value, const char* field) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw InvalidParameter(field, "must be >= 0");
}

}  // namespace

void DeviceParams::validate() const {
  require_positive(omega_o_hz, "omega_o_hz");
  require_positive(omega_m_hz, "omega_m_hz");
  require_positive(kappa_hz, "kappa_hz");
  require_positive(kappa_e_hz, "kappa_e_hz");
  require_positive(kappa_i_hz, "kappa_i_hz");
  require_positive(gamma_0_hz, "gamma_0_hz");
  require_positive(g_om_hz, "g_om_hz");
  if (kappa_e_hz > kappa_hz) throw InvalidParameter("kappa_e_hz", "must not exceed kappa_hz");
  if (std::abs(kappa_i_hz + kappa_e_hz - kappa_hz) > 1e-9 * kappa_hz)
    throw InvalidParameter("kappa_i_hz", "kappa_i + kappa_e must equal kappa");
}

DeviceParams DeviceParams::from_linewidths(double omega_o_hz, double omega_m_hz, double kappa_hz,
                                           double kappa_e_hz, double gamma_0_hz,
                                           double g_om_hz) {
  DeviceParams dev{omega_o_hz, omega_m_hz,  kappa_hz, kappa_e_hz,
                   kappa_hz - kappa_e_hz, gamma_0_hz, g_om_hz};
  dev.validate();
  return dev;
}

void BathModel::validate() const {
  require_nonnegative(gamma_0_hz, "gamma_0_hz");
  require_nonnegative(n_0, "n_0");
  require_nonnegative(hot_prefactor_hz, "hot_prefactor_hz");
  require_nonnegative(n_p, "n_p");
  if (!std::isfinite(hot_exponent)) throw InvalidParameter("hot_exponent", "must be finite");
}

void OccupancyDynamics::validate() const {
  require_nonnegative(n_i, "n_i");
  require_nonnegative(n_f, "n_f");
  require_positive(gamma_m_hz, "gamma_m_hz");
  require_positive(duration, "duration");
  if (!std::isfinite(t_start)) throw InvalidParameter("t_start", "must be finite");
}

void RepetitionModel::validate() const {
  require_positive(r0_hz, "r0_hz");
  require_nonnegative(n_res, "n_res");
  require_nonnegative(n_coh, "n_coh");
  require_nonnegative(gamma_coh_hz, "gamma_coh_hz");
  if (!std::isfinite(theta)) throw InvalidParameter("theta", "must be finite");
}

double gamma_om(const DeviceParams& dev, double n_c) {
  if (!(n_c >= 0.0)) throw InvalidParameter("n_c", "must be >= 0");
  return 4.0 * dev.g_om_hz * dev.g_om_hz * n_c / dev.kappa_hz;
}

double scattering_event_rate(const DeviceParams& dev, double n_c) {
  return angular(gamma_om(dev, n_c));
}

double scattering_probability(const DeviceParams& dev, double n_c, double duration) {
  return scattering_event_rate(dev, n_c) * duration;
}

double resonant_suppression(const DeviceParams& dev) {
  const double ratio = dev.kappa_hz / (2.0 * dev.omega_m_hz);
  return ratio * ratio;
}

double occupancy_at(const OccupancyDynamics& dyn, double t) {
  if (t < dyn.t_start || t > dyn.t_end())
    throw DomainError("occupancy_at: t outside the pulse window");
  const double elapsed = t - dyn.t_start;
  return dyn.n_i - (dyn.n_f - dyn.n_i) * std::expm1(-angular(dyn.gamma_m_hz) * elapsed);
}

double average_occupancy(const OccupancyDynamics& dyn) {
  if (!(dyn.duration > 0.0)) throw InvalidParameter("duration", "must be > 0");
  const double x = angular(dyn.gamma_m_hz) * dyn.duration;
  // (1 - e^{-x}) / x, evaluated without cancellation for small x.
  const double relaxed = x < 1e-8 ? 1.0 - 0.5 * x : -std::expm1(-x) / x;
  return dyn.n_f + (dyn.n_i - dyn.n_f) * relaxed;
}

double hot_bath_rate(const BathModel& bath, double n_c) {
  if (!(n_c >= 0.0)) throw InvalidParameter("n_c", "must be >= 0");
  if (n_c == 0.0) return 0.0;
  return bath.hot_prefactor_hz * std::pow(n_c, bath.hot_exponent);
}

double gamma_m_of_nc(const BathModel& bath, double n_c) {
  return bath.gamma_0_hz + hot_bath_rate(bath, n_c);
}

double steady_state_occupancy(const BathModel& bath, double n_c) {
  const double hot = hot_bath_rate(bath, n_c);
  const double total = bath.gamma_0_hz + hot;
  if (!(total > 0.0)) throw DomainError("steady_state_occupancy: both bath couplings are zero");
  return (hot * bath.n_p + bath.gamma_0_hz * bath.n_0) / total;
}

double cw_noise_power_law(double prefactor, double exponent, double n_c) {
  if (!(n_c > 0.0)) throw InvalidParameter("n_c", "must be > 0");
  return prefactor * std::pow(n_c, exponent);
}

RepetitionNoise repetition_noise(const RepetitionModel& model, double rate_hz, double duration,
                                 double n_dilution, double gamma_decay_hz) {
  if (!(rate_hz > 0.0)) throw InvalidParameter("repetition_rate_hz", "must be > 0");
  if (!(duration > 0.0)) throw InvalidParameter("duration", "must be > 0");
  if (rate_hz * duration >= 1.0)
    throw DomainError("repetition_noise: invalid duty cycle, R * T_0 >= 1");
  RepetitionNoise out;
  out.n_f = std::pow(rate_hz / model.r0_hz, model.theta);
  out.delay = 1.0 / rate_hz - duration;
  out.n_i = out.n_f * std::exp(-angular(gamma_decay_hz) * out.delay) + n_dilution;
  return out;
}

double pump_probe_decay(const RepetitionModel& model, double delay) {
  if (!(delay >= 0.0)) throw InvalidParameter("delay", "must be >= 0");
  return model.n_coh * std::exp(-angular(model.gamma_coh_hz) * delay) + model.n_res;
}

double occupancy_from_temperature(double omega_m_hz, double temperature_k) {
  if (!(temperature_k > 0.0)) throw DomainError("temperature must be > 0");
  const double x = kPlanck * omega_m_hz / (kBoltzmann * temperature_k);
  return 1.0 / std::expm1(x);
}

double temperature_from_occupancy(double omega_m_hz, double occupancy) {
  if (!(occupancy > 0.0)) throw DomainError("occupancy must be > 0");
  return kPlanck * omega_m_hz / (kBoltzmann * std::log1p(1.0 / occupancy));
}

namespace fixtures {

DeviceParams release_free_device() {
  return DeviceParams::from_linewidths(194.5867e12, 5.358e9, 1.63e9, 680e6, 500e3, 470e3);
}

DeviceParams suspended_device() {
  return DeviceParams::from_linewidths(195.7751e12, 5.983e9, 1.70e9, 1030e6, 0.5e3, 1069e3);
}

BathModel release_free_bath() {
  BathModel bath;
  bath.gamma_0_hz = 510e3;
  bath.hot_prefactor_hz = 170.0;
  bath.hot_exponent = 0.98;
  return bath;
}

RepetitionModel release_free_repetition() {
  RepetitionModel model;
  model.r0_hz = 52e3;
  model.theta = 0.114;
  model.n_res = 0.81;
  model.n_coh = 64.0;
  model.gamma_coh_hz = 607e3;
  return model;
}

}  // namespace fixtures

}  // namespace omtherm
