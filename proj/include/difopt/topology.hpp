#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace difopt {

// Undirected connected graph with self-loops: node k always belongs to its
// own neighborhood N_k.
struct NetworkTopology {
  int n_nodes = 0;
  // Symmetric boolean relation with true diagonal.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adjacency;
  // Sorted neighbor lists (self included), derived from adjacency.
  std::vector<std::vector<int>> neighborhoods;

  int degree(int k) const { return static_cast<int>(neighborhoods[k].size()); }
};

NetworkTopology make_topology(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency);

bool is_connected(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency);

// Nodes placed uniformly in the unit square; edge iff Euclidean distance
// <= radius; self-loops always present. Placement is redrawn from the same
// seeded stream until the graph connects; fails after max_retries attempts
// (radius too small). Deterministic given (n, radius, seed).
NetworkTopology build_random_geometric(int n, double radius, std::uint64_t seed,
                                       int max_retries = 1000);

// Symmetric doubly-stochastic combination weights: for l != k in N_k the
// entry is 1/max(deg_k, deg_l) with degrees counting the self-loop; the
// diagonal absorbs the residual so every column sums to 1.
Eigen::MatrixXd metropolis_matrix(const NetworkTopology& topology);

Eigen::MatrixXd identity_matrix(int n);

// Column k assigns 1/|N_k| to each l in N_k (left-stochastic).
Eigen::MatrixXd uniform_neighborhood_matrix(const NetworkTopology& topology);

// The triple parameterizing a diffusion strategy: a1 and a2 left-stochastic
// (columns sum to 1), c right-stochastic (rows sum to 1), all confined to
// the graph neighborhoods.
struct CombinationSet {
  Eigen::MatrixXd a1, a2, c;
};

struct CombinationViolation {
  std::string matrix;    // "a1" | "a2" | "c"
  std::string property;  // "column sum" | "row sum" | "nonnegative" | "sparsity" | "shape"
  int index = -1;        // offending column/row, or -1
  std::string message;
};

// Empty iff all stochasticity, nonnegativity and sparsity invariants hold
// within tolerance 1e-12. Violations are data, not failures.
std::vector<CombinationViolation> validate_combination_set(
    const CombinationSet& set, const NetworkTopology& topology,
    double tol = 1e-12);

// True iff some power p^m (m <= N^2 - 2N + 2, the primitivity exponent
// bound) has all entries strictly positive.
bool is_regular(const Eigen::MatrixXd& p);

// Left eigenvector of a regular right-stochastic matrix: theta^T p = theta^T,
// theta > 0, theta^T 1 = 1. Power iteration on p^T to tolerance tol; throws
// if it does not converge within max_iters.
Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& p, double tol = 1e-13,
                                   long max_iters = 100000);

// Positive per-node step-sizes and the quantities derived from them.
struct StepSizeProfile {
  Eigen::VectorXd mu;

  StepSizeProfile() = default;
  explicit StepSizeProfile(Eigen::VectorXd m);
  static StepSizeProfile uniform(double mu_value, int n);

  double mu_max() const { return mu.maxCoeff(); }
  double mu_min() const { return mu.minCoeff(); }
  // beta_k = mu_k / mu_max, in (0, 1].
  Eigen::VectorXd beta() const { return mu / mu_max(); }
  // Omega = diag{mu_1, ..., mu_N}.
  Eigen::MatrixXd omega() const { return Eigen::MatrixXd(mu.asDiagonal()); }
};

// Structured text: node count, edge list, and any attached matrices are
// emitted by the caller via serialize_matrix.
std::string serialize_topology(const NetworkTopology& topology);
std::string serialize_matrix(const std::string& name, const Eigen::MatrixXd& m);

}  // namespace difopt
