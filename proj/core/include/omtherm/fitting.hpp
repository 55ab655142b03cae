#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "omtherm/fit.hpp"

namespace omtherm {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 1.0;
};

struct ComplexPoint {
  double delta_hz = 0.0;          ///< probe detuning from the two-photon resonance
  std::complex<double> s{1.0, 0.0};  ///< normalized cavity response
  double sigma = 1.0;             ///< per-quadrature noise
};

/// Normalized transparency-window response 1 - A / (i delta - gamma_m / 2),
/// with delta, gamma_m and A in Hz.
std::complex<double> eit_response(std::complex<double> amplitude, double gamma_m_hz,
                                  double delta_hz);

/// Complex least squares over {amplitude_re, amplitude_im, gamma_m_hz}.
/// Needs >= 5 points spanning >= 2 gamma_m (checked after the fit).
FitResult fit_eit(const std::vector<ComplexPoint>& sweep, double level = 0.95);

/// y = prefactor x^exponent (+ offset). Parameters {offset, prefactor,
/// exponent} or {prefactor, exponent}. Needs >= 4 points with x, y > 0.
FitResult fit_power_law(const std::vector<DataPoint>& points, bool with_offset,
                        double level = 0.95);

/// Weighted log-log regression start for the offset-free power law:
/// {prefactor, exponent}.
std::pair<double, double> power_law_initial_guess(const std::vector<DataPoint>& points);

/// Independent fits below and at/above `breakpoint` in x.
std::pair<FitResult, FitResult> fit_power_law_split(const std::vector<DataPoint>& points,
                                                    double breakpoint, bool with_offset,
                                                    double level = 0.95);

/// y = amplitude exp(-2 pi rate_hz x) (+ floor). Parameters {amplitude,
/// rate_hz[, floor]}; a derived "tau_s" (1/e time) entry is appended.
FitResult fit_exponential_decay(const std::vector<DataPoint>& points, bool with_floor,
                                double level = 0.95);

}  // namespace omtherm
