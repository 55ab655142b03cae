#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace omtherm {

/// Point estimates with two-sided intervals at `level`.
struct FitResult {
  std::vector<std::string> names;
  std::vector<double> params;
  std::vector<double> sigma;  ///< one-sigma; NaN when not defined
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  double level = 0.95;
  double logp = 0.0;          ///< log-likelihood, or -chi2/2 for least squares
  double chi2 = 0.0;
  std::size_t dof = 0;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> flags;

  std::size_t index_of(const std::string& name) const;
  double value(const std::string& name) const { return params[index_of(name)]; }
  double error(const std::string& name) const { return sigma[index_of(name)]; }
  double reduced_chi2() const noexcept { return dof > 0 ? chi2 / static_cast<double>(dof) : 0.0; }
  bool contains(const std::string& name, double truth) const;
};

/// Residual vector r(p), already divided by the data sigmas.
using ResidualFn = std::function<void(std::span<const double> p, std::span<double> r)>;

struct LsqOptions {
  int max_evaluations = 20000;
  double tolerance = 1e-15;
  double level = 0.95;
};

struct LsqSolution {
  Eigen::VectorXd params;
  Eigen::MatrixXd covariance;  ///< (J^T J)^-1 at the optimum, not rescaled by chi2
  double chi2 = 0.0;
  int evaluations = 0;
  bool converged = false;
  bool singular = false;
};

/// Levenberg-Marquardt on a weighted residual with central-difference
/// Jacobian.
LsqSolution least_squares(const ResidualFn& residual, std::size_t residual_count,
                          const Eigen::VectorXd& start, const LsqOptions& options = {});

/// Packs an LsqSolution into a FitResult with normal intervals at `level`.
FitResult to_fit_result(const LsqSolution& sol, std::vector<std::string> names,
                        std::size_t data_points, double level);

/// Two-sided standard normal quantile for a central interval at `level`.
double normal_interval_factor(double level);

}  // namespace omtherm
