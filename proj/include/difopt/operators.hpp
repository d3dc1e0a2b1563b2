#pragma once

#include "difopt/block_vector.hpp"
#include "difopt/costs.hpp"
#include "difopt/topology.hpp"

namespace difopt {

// Per-node gradient descent data: costs, the gradient-sharing matrix c
// (right-stochastic), and step-sizes. Requires the aggregate curvature
// floor sum_l c(l,k)*lambda_{l,min} > 0 at every node.
struct GradientDescentSpec {
  CostList costs;
  Eigen::MatrixXd c;
  StepSizeProfile mu;
};

void validate_gradient_descent_spec(const GradientDescentSpec& spec);

// Output block k = sum_l a(l,k) * x_l, i.e. (A^T kron I_M) x. Linear in x.
BlockVector combine(const Eigen::MatrixXd& a, const BlockVector& x);

// Output block k = x_k - mu_k * sum_l c(l,k) * grad J_l(x_k), true gradients.
BlockVector gradient_descent(const GradientDescentSpec& spec, const BlockVector& x);

// combine(a2, gradient_descent(spec, combine(a1, x))) in exactly that order.
BlockVector diffuse(const Eigen::MatrixXd& a1, const GradientDescentSpec& spec,
                    const Eigen::MatrixXd& a2, const BlockVector& x);

// Per-node aggregate curvature interval and the contraction factors
//   sigma_{k,min/max} = sum_l c(l,k) * lambda_{l,min/max},
//   gamma_k = max{|1 - mu_k sigma_{k,max}|, |1 - mu_k sigma_{k,min}|};
// gamma_inf = max_k gamma_k is the Lipschitz constant of the noise-free
// diffusion map in the block maximum norm.
struct ContractionData {
  Eigen::VectorXd sigma_min, sigma_max, gamma;
  double gamma_inf = 0.0;
};

ContractionData contraction_factor(const GradientDescentSpec& spec);

struct FixedPointOptions {
  double tol = 1e-12;        // block-max norm of the iteration step
  long max_iters = 1000000;
  // The map is a contraction only when mu_k < 2/sigma_{k,max} at every node.
  // By default a violation throws; warn_and_proceed runs anyway (divergence
  // experiments), reporting gamma via contraction_factor.
  bool warn_and_proceed = false;
};

struct FixedPointResult {
  BlockVector w_inf;
  long iterations = 0;
  double final_step = 0.0;
  double gamma_inf = 0.0;
};

// Iterates x <- diffuse(a1, spec, a2, x) from x0 until the step drops below
// tol in block-max norm. The returned point satisfies
// block_max_norm(T_d(w_inf) - w_inf) < tol * (1 + gamma_inf).
// Throws on non-convergence within max_iters.
FixedPointResult find_fixed_point(const Eigen::MatrixXd& a1,
                                  const GradientDescentSpec& spec,
                                  const Eigen::MatrixXd& a2, const BlockVector& x0,
                                  const FixedPointOptions& opts = {});

}  // namespace difopt
