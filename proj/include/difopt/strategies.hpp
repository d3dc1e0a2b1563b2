#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "difopt/block_vector.hpp"
#include "difopt/costs.hpp"
#include "difopt/operators.hpp"
#include "difopt/topology.hpp"

namespace difopt {

enum class Variant { General, Atc, Cta, Consensus, Centralized };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

// A runnable strategy: the combination triple is bound per variant
//   atc(A):        a1 = I, c = I, a2 = A
//   cta(A):        a1 = A, c = I, a2 = I
//   consensus(A):  combine previous iterates with A, gradient at own iterate
//   centralized:   single estimate, 1/N-averaged gradients
// general keeps (a1, c, a2) as given.
struct StrategyConfig {
  Variant variant = Variant::Atc;
  Eigen::MatrixXd a1, a2, c;
  StepSizeProfile mu;
  long horizon = 10000;
  int runs = 200;
  std::uint64_t seed = 12345;
  double steady_window = 0.2;  // fraction of final iterations averaged
  bool noise = true;           // false: true gradients (noise-free trajectories)
  std::optional<BlockVector> initial_state;  // default all-zero
};

StrategyConfig make_strategy(Variant v, const Eigen::MatrixXd& a,
                             const StepSizeProfile& mu);
StrategyConfig make_general_strategy(const Eigen::MatrixXd& a1,
                                     const Eigen::MatrixXd& c,
                                     const Eigen::MatrixXd& a2,
                                     const StepSizeProfile& mu);

// One iteration of the noisy diffusion recursion:
//   phi = combine(a1, w);
//   psi_k = phi_k - mu_k sum_l c(l,k) * stochastic_gradient_l(phi_k);
//   w' = combine(a2, psi).
// rng == nullptr disables gradient noise (true gradients), making the step
// identical to operators::diffuse.
BlockVector general_diffusion_step(const BlockVector& w, const Eigen::MatrixXd& a1,
                                   const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                   const StepSizeProfile& mu, const CostList& costs,
                                   std::mt19937_64* rng);

// Direct implementations (adapt-then-combine / combine-then-adapt); these
// coincide with general_diffusion_step under the bindings above, including
// the RNG draw order.
BlockVector atc_step(const BlockVector& w, const Eigen::MatrixXd& a,
                     const StepSizeProfile& mu, const CostList& costs,
                     std::mt19937_64* rng);
BlockVector cta_step(const BlockVector& w, const Eigen::MatrixXd& a,
                     const StepSizeProfile& mu, const CostList& costs,
                     std::mt19937_64* rng);

// w'_k = sum_l a(l,k) w_l - mu_k * stochastic_gradient_k(w_k): the gradient
// is evaluated at the node's own previous iterate, not at the combined value
// (the defining difference from combine-then-adapt).
BlockVector consensus_step(const BlockVector& w, const Eigen::MatrixXd& a,
                           const StepSizeProfile& mu, const CostList& costs,
                           std::mt19937_64* rng);

// w' = w - mu * (1/N) sum_k stochastic_gradient_k(w).
Eigen::VectorXd centralized_step(const Eigen::VectorXd& w, const CostList& costs,
                                 double mu, std::mt19937_64* rng);

struct LearningCurve {
  // Per-iteration mean squared errors against the reference, averaged over
  // runs: per_node_mse is horizon x N, network_mse its row mean.
  Eigen::MatrixXd per_node_mse;
  Eigen::VectorXd network_mse;
  Eigen::VectorXd reference;  // flattened MN reference the errors refer to
  Eigen::VectorXd steady_per_node;
  double steady_network_mse = 0.0;
  double steady_network_db() const;
};

double to_db(double linear);

// Runs config.runs independent trajectories with per-run RNG streams seeded
// from (seed, run index), averages squared errors per iteration, and takes
// the steady state as the mean over the final steady_window fraction.
LearningCurve run_monte_carlo(const StrategyConfig& config, const CostList& costs,
                              const BlockVector& reference);

struct ReferenceOptions {
  double tol = 1e-12;  // gradient-norm stopping threshold
  int max_iters = 500;
};

// High-precision minimizer of sum_l J_l: direct linear solve when every cost
// is quadratic, otherwise damped Newton with backtracking line search.
Eigen::VectorXd solve_reference_optimum(const CostList& costs,
                                        const ReferenceOptions& opts = {});

// Noise-free fixed point of the consensus map (same stopping rule as
// find_fixed_point). No contraction precondition; throws on non-convergence.
FixedPointResult consensus_fixed_point(const Eigen::MatrixXd& a, const CostList& costs,
                                       const StepSizeProfile& mu, const BlockVector& x0,
                                       const FixedPointOptions& opts = {});

}  // namespace difopt
