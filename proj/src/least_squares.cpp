#include "sqz/least_squares.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "sqz/errors.hpp"

namespace sqz {

std::size_t FitResult::index_of(const std::string& name) const {
  const auto it = std::find(parameter_names.begin(), parameter_names.end(), name);
  if (it == parameter_names.end()) throw InvalidArgument("fit has no parameter '" + name + "'");
  return static_cast<std::size_t>(it - parameter_names.begin());
}

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

void check_finite(const std::vector<double>& r, std::span<const double> params) {
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!std::isfinite(r[i])) {
      std::ostringstream msg;
      msg << "residual " << i << " is not finite at parameters [";
      for (std::size_t k = 0; k < params.size(); ++k) msg << (k ? ", " : "") << params[k];
      msg << "]";
      throw NumericalError(msg.str());
    }
  }
}

double half_sum_squares(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

void project(std::vector<double>& p, std::span<const Bounds> bounds) {
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::clamp(p[i], bounds[i].lower, bounds[i].upper);
}

// Gradient with components that would push a pinned parameter through its
// bound removed.
Vector projected_gradient(const Vector& g, const std::vector<double>& p, std::span<const Bounds> bounds) {
  Vector out = g;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (p[i] <= bounds[i].lower && g[k] > 0.0) out[k] = 0.0;
    if (p[i] >= bounds[i].upper && g[k] < 0.0) out[k] = 0.0;
  }
  return out;
}

}  // namespace

std::vector<double> numeric_jacobian(const ResidualFunction& fn, std::span<const double> params,
                                     std::span<const Bounds> bounds, std::size_t num_residuals) {
  const std::size_t n = params.size();
  std::vector<double> jac(num_residuals * n);
  std::vector<double> probe(params.begin(), params.end());
  std::vector<double> r_hi(num_residuals), r_lo(num_residuals);
  for (std::size_t j = 0; j < n; ++j) {
    const double theta = params[j];
    const double h = std::max(1e-8, 1e-8 * std::abs(theta));
    double hi = theta + h;
    double lo = theta - h;
    const Bounds b = bounds.empty() ? Bounds{} : bounds[j];
    if (hi > b.upper) hi = theta;
    if (lo < b.lower) lo = theta;
    if (hi == lo) {
      // Interval narrower than the stencil; use whatever room is left.
      hi = std::min(theta + h, b.upper);
      lo = std::max(theta - h, b.lower);
    }
    probe[j] = hi;
    fn(probe, r_hi);
    probe[j] = lo;
    fn(probe, r_lo);
    probe[j] = theta;
    if (r_hi.size() != num_residuals || r_lo.size() != num_residuals)
      throw InvalidArgument("residual function changed its output length");
    check_finite(r_hi, probe);
    check_finite(r_lo, probe);
    const double step = hi - lo;
    for (std::size_t i = 0; i < num_residuals; ++i) jac[i * n + j] = step > 0.0 ? (r_hi[i] - r_lo[i]) / step : 0.0;
  }
  return jac;
}

FitResult least_squares(const ResidualFunction& fn, std::vector<double> initial_guess,
                        std::span<const Bounds> bounds, std::vector<std::string> names,
                        const LeastSquaresOptions& options) {
  const std::size_t n = initial_guess.size();
  if (n == 0) throw InvalidArgument("least squares needs at least one parameter");
  std::vector<Bounds> bnds(bounds.begin(), bounds.end());
  if (bnds.empty()) bnds.assign(n, Bounds{});
  if (bnds.size() != n) throw InvalidArgument("bounds and initial guess differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(bnds[i].lower <= bnds[i].upper)) throw InvalidArgument("parameter bounds are inverted");
    if (!(initial_guess[i] >= bnds[i].lower && initial_guess[i] <= bnds[i].upper))
      throw InvalidArgument("initial guess lies outside the bounds");
  }
  if (names.empty())
    for (std::size_t i = 0; i < n; ++i) names.push_back("p" + std::to_string(i));
  if (names.size() != n) throw InvalidArgument("parameter names and initial guess differ in length");

  std::vector<double> p = std::move(initial_guess);
  std::vector<double> r;
  fn(p, r);
  check_finite(r, p);
  const std::size_t m = r.size();
  if (m == 0) throw InvalidArgument("residual function returned no residuals");
  double cost = half_sum_squares(r);

  auto jacobian = [&](const std::vector<double>& at) {
    auto raw = numeric_jacobian(fn, at, bnds, m);
    return Matrix(Eigen::Map<Matrix>(raw.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)));
  };
  auto as_vector = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };

  Matrix J = jacobian(p);
  Matrix A = J.transpose() * J;
  Vector g = J.transpose() * as_vector(r);

  FitResult out;
  out.parameter_names = std::move(names);
  double lambda = 1e-3 * std::max(A.diagonal().maxCoeff(), 1e-300);
  double nu = 2.0;
  int iter = 0;
  bool converged = false;
  std::string message = "maximum iterations reached";

  std::vector<double> trial(n);
  std::vector<double> r_trial;
  while (iter < options.max_iterations) {
    const Vector pg = projected_gradient(g, p, bnds);
    if (pg.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) {
      converged = true;
      message = "gradient below tolerance";
      break;
    }
    if (cost == 0.0) {
      converged = true;
      message = "zero residual";
      break;
    }
    ++iter;

    // Marquardt scaling with a floor so a flat column still gets damping.
    const double diag_floor = 1e-12 * std::max(A.diagonal().maxCoeff(), 1e-300);
    Vector d = A.diagonal().cwiseMax(diag_floor);
    Matrix damped = A;
    damped.diagonal() += lambda * d;
    const Vector delta = damped.ldlt().solve(-g);

    for (std::size_t i = 0; i < n; ++i) trial[i] = p[i] + delta[static_cast<Eigen::Index>(i)];
    project(trial, bnds);
    fn(trial, r_trial);
    if (r_trial.size() != m) throw InvalidArgument("residual function changed its output length");
    check_finite(r_trial, trial);
    const double cost_trial = half_sum_squares(r_trial);

    Vector step(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) step[static_cast<Eigen::Index>(i)] = trial[i] - p[i];
    const double predicted = -(g.dot(step) + 0.5 * step.dot(A * step));

    if (cost_trial < cost) {
      const double rho = predicted > 0.0 ? (cost - cost_trial) / predicted : 0.0;
      const double rel_decrease = (cost - cost_trial) / cost;
      p = trial;
      r = r_trial;
      cost = cost_trial;
      J = jacobian(p);
      A = J.transpose() * J;
      g = J.transpose() * as_vector(r);
      lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (rel_decrease < options.cost_relative_tolerance) {
        converged = true;
        message = "relative cost decrease below tolerance";
        break;
      }
    } else {
      lambda *= nu;
      nu *= 2.0;
      if (!std::isfinite(lambda) || lambda > 1e30) {
        converged = true;
        message = "cost cannot be decreased further";
        break;
      }
    }
  }

  out.values = p;
  out.iterations = iter;
  out.num_residuals = m;
  out.residual_sum_of_squares = 2.0 * cost;
  out.degrees_of_freedom = static_cast<long>(m) - static_cast<long>(n);
  out.gradient_norm = projected_gradient(g, p, bnds).lpNorm<Eigen::Infinity>();
  out.covariance.assign(n * n, 0.0);
  out.standard_errors.assign(n, 0.0);

  // Parameters pinned at a bound with the gradient pushing outward carry no
  // curvature information; they are excluded from the covariance.
  std::vector<std::size_t> free_idx;
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    const bool at_lower = p[i] <= bnds[i].lower && g[k] >= 0.0;
    const bool at_upper = p[i] >= bnds[i].upper && g[k] <= 0.0;
    if (at_lower || at_upper)
      out.warnings.push_back("parameter '" + out.parameter_names[i] + "' is pinned at its " +
                             (at_lower ? "lower" : "upper") + " bound");
    else
      free_idx.push_back(i);
  }

  if (out.degrees_of_freedom <= 0)
    out.warnings.push_back("no residual degrees of freedom; covariance scaled with dof = 1");

  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  if (nf > 0) {
    Matrix Af(nf, nf);
    for (Eigen::Index a = 0; a < nf; ++a)
      for (Eigen::Index b = 0; b < nf; ++b)
        Af(a, b) = A(static_cast<Eigen::Index>(free_idx[static_cast<std::size_t>(a)]),
                     static_cast<Eigen::Index>(free_idx[static_cast<std::size_t>(b)]));
    Vector scale = Af.diagonal().cwiseSqrt();
    bool singular = (scale.array() <= 0.0).any();
    Matrix inv_f;
    if (!singular) {
      const Matrix corr = scale.cwiseInverse().asDiagonal() * Af * scale.cwiseInverse().asDiagonal();
      Eigen::SelfAdjointEigenSolver<Matrix> eig(corr);
      const double emax = eig.eigenvalues().maxCoeff();
      const double emin = eig.eigenvalues().minCoeff();
      out.condition_number = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
      singular = !(emin > options.singular_rcond * emax);
      if (!singular) {
        const Vector inv_vals = eig.eigenvalues().cwiseInverse();
        const Matrix corr_inv = eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().transpose();
        inv_f = scale.cwiseInverse().asDiagonal() * corr_inv * scale.cwiseInverse().asDiagonal();
      }
    } else {
      out.condition_number = std::numeric_limits<double>::infinity();
    }

    if (singular) {
      converged = false;
      std::string flat;
      for (Eigen::Index a = 0; a < nf; ++a)
        if (!(scale[a] > 0.0)) flat += (flat.empty() ? "" : ", ") + out.parameter_names[free_idx[a]];
      message = "singular normal matrix J^T J; parameters are not identifiable from the data" +
                (flat.empty() ? std::string() : " (no sensitivity to: " + flat + ")");
    } else {
      const double sigma2 = out.residual_sum_of_squares / static_cast<double>(std::max(out.degrees_of_freedom, 1L));
      for (Eigen::Index a = 0; a < nf; ++a) {
        for (Eigen::Index b = 0; b < nf; ++b) {
          // Symmetrize explicitly so the reported matrix is exactly symmetric.
          const double v = 0.5 * sigma2 * (inv_f(a, b) + inv_f(b, a));
          out.covariance[free_idx[a] * n + free_idx[b]] = v;
        }
      }
      for (std::size_t i = 0; i < n; ++i) out.standard_errors[i] = std::sqrt(std::max(out.covariance[i * n + i], 0.0));
      if (out.condition_number > options.flat_direction_condition) {
        std::ostringstream w;
        w << "near-flat direction in parameter space (condition number " << out.condition_number
          << "); correlated parameters are weakly identifiable";
        out.warnings.push_back(w.str());
      }
    }
  }

  out.converged = converged;
  out.message = message;
  return out;
}

}  // namespace sqz
