#pragma once

#include <cstdint>

#include "difopt/block_vector.hpp"
#include "difopt/costs.hpp"
#include "difopt/operators.hpp"
#include "difopt/topology.hpp"

namespace difopt {

// Dominant-eigenvalue magnitude by power iteration (two-step geometric-mean
// estimator, robust to complex conjugate dominant pairs).
double spectral_radius(const Eigen::MatrixXd& m, double tol = 1e-10,
                       long max_iters = 100000);

// Network-aggregate envelope constants: the per-node declared (alpha,
// sigma_v2) enter the bounds through their maxima over nodes.
struct AggregateNoise {
  double alpha = 0.0;
  double sigma_v2 = 0.0;
};
AggregateNoise aggregate_noise(const CostList& costs);

// max_k lambda_{k,max} over the declared Hessian bounds.
double lambda_max_over_nodes(const CostList& costs);

// Maximum absolute column sum of C.
double one_norm(const Eigen::MatrixXd& c);

// Everything the mean-square-perturbation bounds consume.
//   gamma_d,k = gamma_k^2 + 4 alpha lambda_max^2 ||C||_1^2 mu_k^2
//   b_v = 4 alpha lambda_max^2 A1^T P[bias] + max_k{2 alpha ||grad J_k(w_o)||^2 + sigma_v2} 1
struct SpectralData {
  Eigen::VectorXd gamma;
  Eigen::VectorXd gamma_d;
  double lambda_max = 0.0;
  double c_one_norm = 0.0;
  Eigen::VectorXd b_v;
  double alpha = 0.0;
  double sigma_v2 = 0.0;
  Eigen::VectorXd sigma_min, sigma_max;
  Eigen::VectorXd mu;
};

// bias = 1 (x) w_o - w_inf as a BlockVector (from bias_fixed_point, which
// does not depend on b_v, breaking the circular dependence).
SpectralData build_spectral_data(const CostList& costs, const Eigen::MatrixXd& c,
                                 const StepSizeProfile& mu, const Eigen::MatrixXd& a1,
                                 const BlockVector& bias, const Eigen::VectorXd& w_o);

// limit_k = 2 / sigma_{k,max}: the step-size range with a unique fixed point.
Eigen::VectorXd step_size_limit_contraction(const CostList& costs,
                                            const Eigen::MatrixXd& c);

// Sufficient mean-square-stability limit:
// min{sigma_max/(sigma_max^2 + 4 alpha lambda_max^2 ||C||_1^2),
//     sigma_min/(sigma_min^2 + 4 alpha lambda_max^2 ||C||_1^2)} per node.
Eigen::VectorXd step_size_limit_mss(const CostList& costs, const Eigen::MatrixXd& c,
                                    double alpha);

struct MspBound {
  // Row i = entrywise bound on E P[w_i - w_inf], i = 0..horizon.
  Eigen::MatrixXd trajectory;
  Eigen::VectorXd msp_inf_ub;
  double rho = 0.0;  // spectral radius of A2^T Gamma_d A1^T
};

// bound_i = (A2^T Gamma_d A1^T)^i [msp0 - MSP_inf_ub] + MSP_inf_ub with
// MSP_inf_ub = ||C||_1^2 (I - A2^T Gamma_d A1^T)^{-1} A2^T Omega^2 b_v.
// Throws if the recursion matrix has spectral radius >= 1.
MspBound msp_bound_trajectory(const SpectralData& spectral, const Eigen::MatrixXd& a1,
                              const Eigen::MatrixXd& a2, const Eigen::VectorXd& msp0,
                              long horizon);

// Small-step asymptotic bound ||C||_1^2 ||b_v||_inf mu_max /
// (2 beta sigma_min - mu_max (sigma_max^2 + 4 alpha lambda_max ||C||_1^2)).
// Throws when the denominator is not positive (step-size outside the bound's
// validity range).
double msp_o_mu_bound(const SpectralData& spectral, double beta, double sigma_min,
                      double sigma_max);

// Dense steady-state operators at the reference point w_o. All matrices are
// MN x MN Kronecker lifts; the (MN)^2-dimensional variance recursion is only
// ever applied matrix-free.
//   r_inf: block-diagonal, block k = sum_l c(l,k) hessian_l(w_o)
//   g_o:   stacked true gradients at w_o
//   d   :  A1_lift (I - M r_inf) A2_lift      (rho(F) = rho(d)^2)
//   b_tilde = d^T; bvec = A2_lift^T M C_lift^T g_o
//   e_w_inf: (I - b_tilde)^{-1} bvec — both the noise-free fixed-point error
//            1 (x) w_o - w_inf and the mean steady error E w~_inf (one code path).
struct SteadyStateOperators {
  int m = 0, n = 0;
  Eigen::MatrixXd r_inf;
  Eigen::VectorXd g_o;
  Eigen::MatrixXd r_v;
  Eigen::MatrixXd weighted_noise;  // A2_lift^T M r_v M A2_lift
  Eigen::MatrixXd d;
  Eigen::MatrixXd b_tilde;
  Eigen::VectorXd bvec;
  Eigen::VectorXd e_w_inf;
};

struct NoiseCovOptions {
  bool monte_carlo = false;
  long samples = 1000000;
  std::uint64_t seed = 1;
};

// R_v block (k,k') = sum_l c(l,k) c(l,k') R_{v,l}(w_o): one shared noise draw
// per cost, weighted into every receiving node. monte_carlo estimates it by
// sampling stochastic gradients at w_o with exactly that sharing.
Eigen::MatrixXd gradient_noise_covariance(const CostList& costs,
                                          const Eigen::VectorXd& w_o,
                                          const Eigen::MatrixXd& c,
                                          const NoiseCovOptions& opts = {});

SteadyStateOperators build_steady_state_operators(
    const CostList& costs, const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
    const Eigen::MatrixXd& c, const StepSizeProfile& mu, const Eigen::VectorXd& w_o,
    const NoiseCovOptions& noise_opts = {});

// The boxed closed form [I - A2^T(I - M R_inf)A1^T]^{-1} A2^T M C^T g_o,
// solved as one linear system. Equals E w~_inf (same code path).
Eigen::VectorXd bias_fixed_point(const CostList& costs, const Eigen::MatrixXd& a1,
                                 const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                 const StepSizeProfile& mu, const Eigen::VectorXd& w_o);

// Same steady-state machinery for the consensus recursion
// w_k' = sum_l a(l,k) w_l - mu_k grad_k(w_k): the error transition is
// A_lift^T - M R_inf (combination and gradient act on different iterates, so
// the two factors add instead of composing).
SteadyStateOperators build_consensus_operators(const CostList& costs,
                                               const Eigen::MatrixXd& a,
                                               const StepSizeProfile& mu,
                                               const Eigen::VectorXd& w_o,
                                               const NoiseCovOptions& noise_opts = {});

// Single-estimate machinery for w' = w - mu (1/N) sum_k grad_k(w): transition
// I - mu H_bar with H_bar the averaged Hessian at w_o; the mean gradient
// vanishes at w_o, so the bias term is exactly zero.
SteadyStateOperators build_centralized_operators(const CostList& costs, double mu,
                                                 const Eigen::VectorXd& w_o);

struct ZeroBiasCheck {
  bool holds = false;
  double c0 = 0.0;
};

// Evaluates theta^T A2^T Omega C^T; holds iff all entries agree to 1e-10
// relative, in which case the bias is O(mu_max^2).
ZeroBiasCheck check_zero_bias_condition(const Eigen::VectorXd& theta,
                                        const Eigen::MatrixXd& a2,
                                        const Eigen::MatrixXd& omega,
                                        const Eigen::MatrixXd& c);

// rho(F) = rho(d)^2 without forming the (MN)^2 x (MN)^2 matrix F.
double spectral_radius_f(const SteadyStateOperators& ops);

// Per-node steady-state MSE via the weighted-variance machinery: solves the
// adjoint system (I - F)^T y = r + Q E w~_inf matrix-free (doubling on the
// equivalent Lyapunov-type series) and reads node k's value off the block
// diagonal. Throws if rho(F) >= 1.
Eigen::VectorXd steady_state_mse_per_node(const SteadyStateOperators& ops);
double steady_state_mse_network(const SteadyStateOperators& ops);

// One-stop theory bundle for a strategy at one step-size.
struct TheoryPrediction {
  Eigen::VectorXd e_w_inf;          // MN bias vector
  Eigen::VectorXd bias_power;       // per-node ||bias_k||^2
  double bias_power_per_node = 0.0; // (1/N)||bias||^2
  Eigen::VectorXd mse_per_node;
  double mse_network = 0.0;
  double rho_f = 0.0;
};

TheoryPrediction predict_steady_state(const CostList& costs, const Eigen::MatrixXd& a1,
                                      const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                      const StepSizeProfile& mu,
                                      const Eigen::VectorXd& w_o);

}  // namespace difopt
