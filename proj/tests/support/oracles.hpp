#pragma once

// Independent reference computations for tests. Nothing here calls into the
// library under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

/// Classic fourth-order Runge-Kutta for a scalar ODE y' = f(t, y).
inline double rk4(const std::function<double(double, double)>& f, double y0, double t_end,
                  std::size_t steps) {
  const double h = t_end / static_cast<double>(steps);
  double y = y0;
  double t = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double k1 = f(t, y);
    const double k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const double k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const double k4 = f(t + h, y + h * k3);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  return y;
}

/// Fixed point of n' = 2 pi g0 (n0 - n) + 2 pi gp (np - n) reached by
/// integrating from n = 0 for 40 relaxation times.
inline double two_bath_fixed_point(double g0_hz, double n0, double gp_hz, double np) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double rate = two_pi * (g0_hz + gp_hz);
  auto f = [&](double, double n) { return two_pi * g0_hz * (n0 - n) + two_pi * gp_hz * (np - n); };
  return rk4(f, 0.0, 40.0 / rate, 4000);
}

/// Single-pole intensity step response of one Lorentzian filter.
inline double single_pole_step(double fwhm_hz, double t) {
  if (t < 0.0) return 0.0;
  const double field = 1.0 - std::exp(-std::numbers::pi * fwhm_hz * t);
  return field * field;
}

/// Simpson's rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n) {
  if (n % 2) ++n;
  const double h = (b - a) / static_cast<double>(n);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Bisection root of g on [lo, hi] with a sign change.
inline double bisect(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
  double glo = g(lo);
  for (int i = 0; i < iters; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid);
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic Kolmogorov p-value for a two-sample statistic.
inline double ks_p_value(double d, std::size_t na, std::size_t nb) {
  const double ne = static_cast<double>(na) * static_cast<double>(nb) / static_cast<double>(na + nb);
  const double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace oracle
