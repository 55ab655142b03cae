#include "omtherm/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <unsupported/Eigen/LevenbergMarquardt>

#include "omtherm/errors.hpp"

namespace omtherm {

namespace {

struct Functor : Eigen::DenseFunctor<double> {
  Functor(const ResidualFn& fn, int inputs, int values)
      : Eigen::DenseFunctor<double>(inputs, values), fn_(fn) {}

  int operator()(const InputType& x, ValueType& r) const {
    fn_(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
        std::span<double>(r.data(), static_cast<std::size_t>(r.size())));
    for (Eigen::Index i = 0; i < r.size(); ++i)
      if (!std::isfinite(r[i])) r[i] = 1e150;
    return 0;
  }

  int df(const InputType& x, JacobianType& jac) const {
    InputType xp = x;
    ValueType rp(values()), rm(values());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double h = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(std::abs(x[j]), 1e-8);
      xp[j] = x[j] + h;
      (*this)(xp, rp);
      xp[j] = x[j] - h;
      (*this)(xp, rm);
      xp[j] = x[j];
      jac.col(j) = (rp - rm) / (2.0 * h);
    }
    return 0;
  }

  const ResidualFn& fn_;
};

}  // namespace

std::size_t FitResult::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidParameter(name, "no such fit parameter");
  return static_cast<std::size_t>(it - names.begin());
}

bool FitResult::contains(const std::string& name, double truth) const {
  const std::size_t i = index_of(name);
  return truth >= ci_low[i] && truth <= ci_high[i];
}

double normal_interval_factor(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidParameter("level", "must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + 0.5 * level);
}

LsqSolution least_squares(const ResidualFn& residual, std::size_t residual_count,
                          const Eigen::VectorXd& start, const LsqOptions& options) {
  const auto n = static_cast<int>(start.size());
  const auto m = static_cast<int>(residual_count);
  if (m < n) throw FitError("least_squares: fewer data points than parameters");

  Functor f(residual, n, m);
  Eigen::LevenbergMarquardt<Functor> lm(f);
  lm.setMaxfev(options.max_evaluations);
  lm.setXtol(options.tolerance);
  lm.setFtol(options.tolerance);
  lm.setGtol(0.0);

  LsqSolution sol;
  sol.params = start;
  const auto status = lm.minimize(sol.params);
  sol.evaluations = static_cast<int>(lm.nfev());
  sol.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                  status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;

  Eigen::VectorXd r(m);
  f(sol.params, r);
  sol.chi2 = r.squaredNorm();

  Eigen::MatrixXd jac(m, n);
  f.df(sol.params, jac);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  lu.setThreshold(1e-12);
  if (lu.isInvertible()) {
    sol.covariance = lu.inverse();
  } else {
    sol.singular = true;
    sol.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse();
  }
  return sol;
}

FitResult to_fit_result(const LsqSolution& sol, std::vector<std::string> names,
                        std::size_t data_points, double level) {
  FitResult fit;
  const double k = normal_interval_factor(level);
  fit.names = std::move(names);
  fit.level = level;
  fit.chi2 = sol.chi2;
  fit.logp = -0.5 * sol.chi2;
  fit.dof = data_points > static_cast<std::size_t>(sol.params.size())
                ? data_points - static_cast<std::size_t>(sol.params.size())
                : 0;
  for (Eigen::Index i = 0; i < sol.params.size(); ++i) {
    const double v = sol.params[i];
    const double var = sol.covariance(i, i);
    const double s = var >= 0.0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    fit.params.push_back(v);
    fit.sigma.push_back(s);
    fit.ci_low.push_back(v - k * s);
    fit.ci_high.push_back(v + k * s);
  }
  if (!sol.converged) fit.flags.push_back("not_converged");
  if (sol.singular) fit.flags.push_back("singular_covariance");
  return fit;
}

}  // namespace omtherm
