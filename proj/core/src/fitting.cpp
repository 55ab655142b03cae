#include "omtherm/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "omtherm/errors.hpp"
#include "omtherm/units.hpp"

namespace omtherm {

namespace {

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
};

// Weighted least-squares line through (x_i, y_i).
Line weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& w) {
  double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += w[i];
    sx += w[i] * x[i];
    sy += w[i] * y[i];
    sxx += w[i] * x[i] * x[i];
    sxy += w[i] * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) return {sy / sw, 0.0};
  return {(sxx * sy - sx * sxy) / det, (sw * sxy - sx * sy) / det};
}

void check_points(const std::vector<DataPoint>& points, std::size_t needed, const char* who) {
  if (points.size() < needed)
    throw FitError(std::string(who) + ": needs at least " + std::to_string(needed) + " points");
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw InvalidParameter("points", "non-finite value");
    if (!(p.sigma > 0.0)) throw InvalidParameter("sigma", "must be > 0");
  }
}

double chi2_power_law(const std::vector<DataPoint>& pts, double c, double b, double a) {
  double chi2 = 0.0;
  for (const auto& p : pts) {
    const double r = (c + b * std::pow(p.x, a) - p.y) / p.sigma;
    chi2 += r * r;
  }
  return chi2;
}

// Internal parameters use log(prefactor) / log(rate); map the covariance back.
void unlog_parameter(LsqSolution& sol, Eigen::Index i) {
  const double v = std::exp(sol.params[i]);
  sol.params[i] = v;
  sol.covariance.row(i) *= v;
  sol.covariance.col(i) *= v;
}

}  // namespace

std::complex<double> eit_response(std::complex<double> amplitude, double gamma_m_hz,
                                  double delta_hz) {
  return 1.0 - amplitude / std::complex<double>(-0.5 * gamma_m_hz, delta_hz);
}

FitResult fit_eit(const std::vector<ComplexPoint>& sweep, double level) {
  if (sweep.size() < 5) throw FitError("fit_eit: needs at least 5 points");
  for (const auto& p : sweep)
    if (!(p.sigma > 0.0)) throw InvalidParameter("sigma", "must be > 0");

  // Start: gamma from the FWHM of |S - 1|^2 = |A|^2 / (delta^2 + gamma^2 / 4).
  std::vector<ComplexPoint> sorted = sweep;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.delta_hz < b.delta_hz; });
  double peak = 0.0;
  for (const auto& p : sorted) peak = std::max(peak, std::norm(p.s - 1.0));
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : sorted) {
    if (std::norm(p.s - 1.0) >= 0.5 * peak) {
      lo = std::min(lo, p.delta_hz);
      hi = std::max(hi, p.delta_hz);
    }
  }
  const double span = sorted.back().delta_hz - sorted.front().delta_hz;
  double gamma0 = hi - lo;
  if (!(gamma0 > 0.0)) gamma0 = span / static_cast<double>(sorted.size());
  std::complex<double> a0 = 0.0;
  double wsum = 0.0;
  for (const auto& p : sorted) {
    const double w = std::norm(p.s - 1.0);
    a0 += w * (1.0 - p.s) * std::complex<double>(-0.5 * gamma0, p.delta_hz);
    wsum += w;
  }
  if (wsum > 0.0) a0 /= wsum;

  const ResidualFn residual = [&](std::span<const double> q, std::span<double> r) {
    const std::complex<double> amp(q[0], q[1]);
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      const auto d = (eit_response(amp, q[2], sweep[i].delta_hz) - sweep[i].s) / sweep[i].sigma;
      r[2 * i] = d.real();
      r[2 * i + 1] = d.imag();
    }
  };
  Eigen::VectorXd start(3);
  start << a0.real(), a0.imag(), gamma0;
  const auto sol = least_squares(residual, 2 * sweep.size(), start);
  FitResult fit = to_fit_result(sol, {"amplitude_re", "amplitude_im", "gamma_m_hz"},
                                2 * sweep.size(), level);
  if (span < 2.0 * std::abs(fit.value("gamma_m_hz"))) fit.flags.push_back("span_below_2_gamma_m");
  return fit;
}

std::pair<double, double> power_law_initial_guess(const std::vector<DataPoint>& points) {
  std::vector<double> lx, ly, w;
  for (const auto& p : points) {
    if (!(p.x > 0.0 && p.y > 0.0)) continue;
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
    const double rel = p.sigma / p.y;
    w.push_back(1.0 / (rel * rel));
  }
  if (lx.size() < 2) throw FitError("power_law_initial_guess: needs two positive points");
  const Line line = weighted_line(lx, ly, w);
  return {std::exp(line.intercept), line.slope};
}

FitResult fit_power_law(const std::vector<DataPoint>& points, bool with_offset, double level) {
  check_points(points, 4, "fit_power_law");
  for (const auto& p : points)
    if (!(p.x > 0.0 && p.y > 0.0)) throw InvalidParameter("points", "x and y must be > 0");

  double c0 = 0.0;
  auto [b0, a0] = power_law_initial_guess(points);
  if (with_offset) {
    // Profile the offset below min(y); each candidate gets a log-log start.
    double ymin = std::numeric_limits<double>::infinity();
    for (const auto& p : points) ymin = std::min(ymin, p.y);
    double best = chi2_power_law(points, 0.0, b0, a0);
    constexpr int kGrid = 400;
    for (int j = 1; j < kGrid; ++j) {
      const double c = ymin * static_cast<double>(j) / kGrid;
      std::vector<DataPoint> shifted = points;
      for (auto& p : shifted) p.y -= c;
      const auto [b, a] = power_law_initial_guess(shifted);
      const double chi2 = chi2_power_law(points, c, b, a);
      if (chi2 < best) {
        best = chi2;
        c0 = c;
        b0 = b;
        a0 = a;
      }
    }
  }

  const std::size_t off = with_offset ? 1 : 0;
  const ResidualFn residual = [&](std::span<const double> q, std::span<double> r) {
    const double c = with_offset ? q[0] : 0.0;
    const double b = std::exp(q[off]);
    const double a = q[off + 1];
    for (std::size_t i = 0; i < points.size(); ++i)
      r[i] = (c + b * std::pow(points[i].x, a) - points[i].y) / points[i].sigma;
  };
  Eigen::VectorXd start(2 + off);
  if (with_offset) start[0] = c0;
  start[off] = std::log(b0);
  start[off + 1] = a0;
  auto sol = least_squares(residual, points.size(), start);
  unlog_parameter(sol, static_cast<Eigen::Index>(off));
  std::vector<std::string> names{"prefactor", "exponent"};
  if (with_offset) names.insert(names.begin(), "offset");
  return to_fit_result(sol, std::move(names), points.size(), level);
}

std::pair<FitResult, FitResult> fit_power_law_split(const std::vector<DataPoint>& points,
                                                    double breakpoint, bool with_offset,
                                                    double level) {
  std::vector<DataPoint> low, high;
  for (const auto& p : points) (p.x < breakpoint ? low : high).push_back(p);
  return {fit_power_law(low, with_offset, level), fit_power_law(high, with_offset, level)};
}

FitResult fit_exponential_decay(const std::vector<DataPoint>& points, bool with_floor,
                                double level) {
  check_points(points, with_floor ? 4 : 3, "fit_exponential_decay");
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin, ysum = 0.0;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
    ysum += p.y;
  }
  const double span = xmax - xmin;
  if (!(span > 0.0)) throw FitError("fit_exponential_decay: all points share one abscissa");

  // Log-linear start on y - floor guess.
  double floor0 = 0.0;
  double amp0 = 0.0;
  double rate0 = 1.0 / (kTwoPi * span);
  const double range = ymax - ymin;
  if (with_floor) floor0 = range > 0.0 ? ymin - 0.1 * range : ysum / static_cast<double>(points.size());
  std::vector<double> x, ly, w;
  for (const auto& p : points) {
    const double v = p.y - floor0;
    if (v <= 0.0) continue;
    x.push_back(p.x - xmin);
    ly.push_back(std::log(v));
    w.push_back(v * v / (p.sigma * p.sigma));
  }
  if (x.size() >= 2 && range > 0.0) {
    const Line line = weighted_line(x, ly, w);
    if (line.slope < 0.0) {
      rate0 = -line.slope / kTwoPi;
      amp0 = std::exp(line.intercept) * std::exp(kTwoPi * rate0 * xmin);
    } else {
      amp0 = std::exp(line.intercept);
    }
  }

  const ResidualFn residual = [&](std::span<const double> q, std::span<double> r) {
    const double rate = std::exp(q[1]);
    const double floor = with_floor ? q[2] : 0.0;
    for (std::size_t i = 0; i < points.size(); ++i)
      r[i] = (q[0] * std::exp(-kTwoPi * rate * points[i].x) + floor - points[i].y) / points[i].sigma;
  };
  Eigen::VectorXd start(with_floor ? 3 : 2);
  start[0] = amp0;
  start[1] = std::log(rate0);
  if (with_floor) start[2] = floor0;
  auto sol = least_squares(residual, points.size(), start);
  unlog_parameter(sol, 1);

  std::vector<std::string> names{"amplitude", "rate_hz"};
  if (with_floor) names.emplace_back("floor");
  FitResult fit = to_fit_result(sol, std::move(names), points.size(), level);

  const double rate = fit.value("rate_hz");
  const double tau = 1.0 / (kTwoPi * rate);
  const double tau_sigma = tau * fit.error("rate_hz") / rate;
  const double k = normal_interval_factor(level);
  fit.names.emplace_back("tau_s");
  fit.params.push_back(tau);
  fit.sigma.push_back(tau_sigma);
  fit.ci_low.push_back(tau - k * tau_sigma);
  fit.ci_high.push_back(tau + k * tau_sigma);
  return fit;
}

}  // namespace omtherm
