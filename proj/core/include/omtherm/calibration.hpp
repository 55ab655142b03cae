#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "omtherm/detection.hpp"
#include "omtherm/filter.hpp"
#include "omtherm/fit.hpp"
#include "omtherm/fitting.hpp"
#include "omtherm/model.hpp"

namespace omtherm {

enum class CalibrationMethod { direct, sideband_asymmetry, coherent_excitation };

std::string to_string(CalibrationMethod method);

struct CalibrationResult {
  double gamma_cal = 0.0;  ///< counts/s at unit n_c and unit n_m
  double sigma = 0.0;
  CalibrationMethod method = CalibrationMethod::direct;
  std::map<std::string, double> inputs;  ///< every value the result depends on
  std::vector<std::string> warnings;
};

/// One-sigma input uncertainties for the direct method; zero means exact.
struct DirectSigmas {
  double g_om_hz = 0.0;
  double kappa_hz = 0.0;
  double eta_o = 0.0;
  double eta_fc = 0.0;
  double eta_loss = 0.0;
  double eta_det = 0.0;
};

/// 2 pi 4 g^2 eta_tot / kappa with first-order propagated sigma. Throws
/// InvalidParameter naming the first efficiency that is zero.
CalibrationResult direct_calibration(const DeviceParams& dev, const DetectionConfig& cfg,
                                     const DirectSigmas& sigmas = {});

/// Same quantity, sigma from `draws` Gaussian input samples (seeded
/// substreams, parallel over draws).
CalibrationResult direct_calibration_monte_carlo(const DeviceParams& dev,
                                                 const DetectionConfig& cfg,
                                                 const DirectSigmas& sigmas, std::size_t draws,
                                                 std::uint64_t seed);

/// Generic Monte-Carlo propagation: mean and sample standard deviation of
/// f(x) for independent Gaussian inputs.
struct PropagatedValue {
  double mean = 0.0;
  double sigma = 0.0;
};
PropagatedValue propagate_monte_carlo(const std::function<double(std::span<const double>)>& f,
                                      std::span<const double> means,
                                      std::span<const double> sigmas, std::size_t draws,
                                      std::uint64_t seed);

struct AsymmetryOptions {
  /// gamma_om / gamma_m; above `backaction_threshold` a warning is attached.
  /// NaN skips the check.
  double backaction_ratio = std::numeric_limits<double>::quiet_NaN();
  double backaction_threshold = 0.1;
};

/// (Gamma_+ - Gamma_-) / n_c with sigma sqrt(s+^2 + s-^2) / n_c. Both rates
/// must have been measured at the same n_c. Throws DomainError when
/// Gamma_+ <= Gamma_-.
CalibrationResult asymmetry_calibration(double gamma_plus, double sigma_plus, double gamma_minus,
                                        double sigma_minus, double n_c,
                                        const AsymmetryOptions& options = {});

/// Rates and Poisson sigmas from raw click totals over a live time.
CalibrationResult asymmetry_calibration_from_counts(std::uint64_t clicks_plus,
                                                    std::uint64_t clicks_minus,
                                                    double live_time_s, double n_c,
                                                    const AsymmetryOptions& options = {});

struct SweepPoint {
  double delta_p_hz = 0.0;
  double rate = 0.0;
  double sigma = 1.0;
};

struct SweepFit {
  double amplitude = 0.0;  ///< unfiltered sideband rate Gamma_+-
  double sigma = 0.0;
  double peak_rate = 0.0;  ///< filtered rate at delta_p = 0
  double chi2 = 0.0;
  std::size_t dof = 0;
};

/// Weighted linear amplitude fit of rate(delta_p) = Gamma cw_sweep_response.
/// Needs >= 5 points spanning >= 2 fwhm; throws FitError otherwise.
SweepFit sideband_sweep_fit(const std::vector<SweepPoint>& sweep, const FilterStack& stack,
                            double gamma_m_hz, FilterShape shape = FilterShape::airy);

struct CoherentDriveSpec {
  double xi_sb = 0.0;     ///< sideband power over pump power
  double phi_pump = 0.0;  ///< pump photon flux in the bus, photons/s
  double t_drive = 0.0;   ///< drive duration, s

  void validate() const;
};

/// 4 eta_o (2 pi gamma_om) xi Phi / (2 pi gamma_m)^2.
double coherent_occupancy(const CoherentDriveSpec& spec, double gamma_om_hz, double gamma_m_hz,
                          double eta_o);

/// Relative one-sigma uncertainties of the coherent-method inputs.
struct CoherentSigmas {
  double xi_sb = 0.0;
  double phi_pump = 0.0;
  double gamma_m = 0.0;
  double gamma_om = 0.0;
  double eta_o = 0.0;
  double gamma_minus = 0.0;  ///< absolute, counts/s
};

/// Gamma_-^coh / (n_c n_coh). Warns when the drive is shorter than five
/// mechanical decay times.
CalibrationResult coherent_calibration(const CoherentDriveSpec& spec, double gamma_m_hz,
                                       double gamma_om_hz, double eta_o, double gamma_minus_coh,
                                       double n_c, const CoherentSigmas& sigmas = {});

struct Extrapolation {
  double value = 0.0;  ///< coherent part of the rate at the drive end
  double sigma = 0.0;
  double floor = 0.0;
  FitResult fit;
};

/// Fits amplitude exp(-2 pi rate t) + floor to a decay measured after the
/// drive and evaluates the decaying part at t_end.
Extrapolation extrapolate_to_drive_end(const std::vector<DataPoint>& decay, double t_end,
                                       bool with_floor = true);

struct CalibrationStudyOptions {
  double n_c_asym = 50.0;
  double n_m_asym = 0.2;
  double live_time_asym_s = 3600.0;
  double n_c_coh = 50.0;
  double n_coh = 100.0;
  double bin_width_coh_s = 20e-9;
  double window_coh_s = 2e-6;
  std::uint64_t repetitions_coh = 200000;
  DirectSigmas direct_sigmas;
  CoherentSigmas coherent_sigmas;
  std::uint64_t seed = 0;
};

struct CalibrationStudy {
  double truth = 0.0;
  CalibrationResult direct;
  CalibrationResult asymmetry;
  CalibrationResult coherent;
  /// |a - b| / sqrt(sa^2 + sb^2) for (direct, asym), (direct, coh), (asym, coh).
  std::vector<double> pairwise_z;
  bool consistent(double z_max = 2.0) const;
};

/// Three calibrations of one synthetic device: direct from perturbed
/// measured inputs, asymmetry from simulated Stokes and anti-Stokes clicks,
/// coherent from a simulated ring-down extrapolated to the drive end.
CalibrationStudy synthetic_calibration_study(const DeviceParams& dev, const DetectionConfig& cfg,
                                             const BathModel& bath,
                                             const CalibrationStudyOptions& options);

namespace fixtures {

/// Input sigmas that reproduce a 3.5 cps direct uncertainty at 24.7 cps.
DirectSigmas release_free_direct_sigmas();

struct AsymmetryFixture {
  double gamma_plus, sigma_plus, gamma_minus, sigma_minus, n_c;
};
/// Rates giving 21.1 +- 7.0 cps.
AsymmetryFixture release_free_asymmetry();

struct CoherentFixture {
  CoherentDriveSpec spec;
  double gamma_m_hz, gamma_om_hz, eta_o, gamma_minus_coh, n_c;
  CoherentSigmas sigmas;
};
/// Drive parameters giving 20.8 +- 2.1 cps.
CoherentFixture release_free_coherent();

}  // namespace fixtures

}  // namespace omtherm
