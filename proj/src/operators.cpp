#include "difopt/operators.hpp"

#include <iostream>
#include <sstream>
#include <stdexcept>

namespace difopt {

void validate_gradient_descent_spec(const GradientDescentSpec& spec) {
  const int n = static_cast<int>(spec.costs.size());
  if (n == 0) throw std::invalid_argument("spec: no costs");
  if (spec.c.rows() != n || spec.c.cols() != n)
    throw std::invalid_argument("spec: c must be N x N");
  if (spec.mu.mu.size() != n)
    throw std::invalid_argument("spec: step-size profile must have N entries");
  const int m = spec.costs[0]->dim();
  for (const auto& cost : spec.costs)
    if (!cost || cost->dim() != m)
      throw std::invalid_argument("spec: all costs must share one dimension");
  for (int k = 0; k < n; ++k) {
    double floor = 0.0;
    for (int l = 0; l < n; ++l)
      floor += spec.c(l, k) * spec.costs[l]->hessian_bounds().first;
    if (floor <= 0.0) {
      std::ostringstream msg;
      msg << "spec: aggregate curvature floor sum_l c(l,k)*lambda_min is "
          << floor << " at node " << k << "; must be positive";
      throw std::invalid_argument(msg.str());
    }
  }
}

BlockVector combine(const Eigen::MatrixXd& a, const BlockVector& x) {
  if (a.rows() != x.n_blocks() || a.cols() != x.n_blocks())
    throw std::invalid_argument("combine: matrix does not match block count");
  return BlockVector(x.data * a);
}

BlockVector gradient_descent(const GradientDescentSpec& spec, const BlockVector& x) {
  const int n = x.n_blocks();
  if (static_cast<int>(spec.costs.size()) != n)
    throw std::invalid_argument("gradient_descent: cost count mismatch");
  BlockVector out = x;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(x.block_dim());
    for (int l = 0; l < n; ++l) {
      const double c = spec.c(l, k);
      if (c != 0.0) g += c * spec.costs[l]->gradient(x.block(k));
    }
    out.data.col(k) -= spec.mu.mu[k] * g;
  }
  return out;
}

BlockVector diffuse(const Eigen::MatrixXd& a1, const GradientDescentSpec& spec,
                    const Eigen::MatrixXd& a2, const BlockVector& x) {
  return combine(a2, gradient_descent(spec, combine(a1, x)));
}

ContractionData contraction_factor(const GradientDescentSpec& spec) {
  const int n = static_cast<int>(spec.costs.size());
  ContractionData d;
  d.sigma_min.resize(n);
  d.sigma_max.resize(n);
  d.gamma.resize(n);
  for (int k = 0; k < n; ++k) {
    double lo = 0.0, hi = 0.0;
    for (int l = 0; l < n; ++l) {
      const auto [lmin, lmax] = spec.costs[l]->hessian_bounds();
      lo += spec.c(l, k) * lmin;
      hi += spec.c(l, k) * lmax;
    }
    d.sigma_min[k] = lo;
    d.sigma_max[k] = hi;
    const double mu = spec.mu.mu[k];
    d.gamma[k] = std::max(std::abs(1.0 - mu * hi), std::abs(1.0 - mu * lo));
  }
  d.gamma_inf = d.gamma.maxCoeff();
  return d;
}

FixedPointResult find_fixed_point(const Eigen::MatrixXd& a1,
                                  const GradientDescentSpec& spec,
                                  const Eigen::MatrixXd& a2, const BlockVector& x0,
                                  const FixedPointOptions& opts) {
  const ContractionData cd = contraction_factor(spec);
  for (int k = 0; k < cd.gamma.size(); ++k) {
    if (spec.mu.mu[k] >= 2.0 / cd.sigma_max[k]) {
      std::ostringstream msg;
      msg << "find_fixed_point: mu_" << k << " = " << spec.mu.mu[k]
          << " violates 0 < mu < " << 2.0 / cd.sigma_max[k]
          << "; the map need not contract (gamma_inf = " << cd.gamma_inf << ")";
      if (!opts.warn_and_proceed) throw std::invalid_argument(msg.str());
      std::cerr << "warning: " << msg.str() << "\n";
      break;
    }
  }
  FixedPointResult res;
  res.gamma_inf = cd.gamma_inf;
  BlockVector x = x0;
  for (long it = 1; it <= opts.max_iters; ++it) {
    BlockVector next = diffuse(a1, spec, a2, x);
    const double step = block_max_norm(BlockVector(next.data - x.data));
    x = std::move(next);
    if (step < opts.tol) {
      res.w_inf = std::move(x);
      res.iterations = it;
      res.final_step = step;
      return res;
    }
  }
  throw std::runtime_error(
      "find_fixed_point: no convergence within max_iters; contraction violated or tol too tight");
}

}  // namespace difopt
