#include "difopt/topology.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <sstream>
#include <stdexcept>

namespace difopt {

NetworkTopology make_topology(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n < 1 || adjacency.cols() != n)
    throw std::invalid_argument("topology: adjacency must be square and nonempty");
  for (int i = 0; i < n; ++i) {
    if (!adjacency(i, i)) throw std::invalid_argument("topology: missing self-loop");
    for (int j = 0; j < i; ++j)
      if (adjacency(i, j) != adjacency(j, i))
        throw std::invalid_argument("topology: adjacency not symmetric");
  }
  if (!is_connected(adjacency))
    throw std::invalid_argument("topology: graph not connected");
  NetworkTopology t;
  t.n_nodes = n;
  t.adjacency = adjacency;
  t.neighborhoods.resize(n);
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l)
      if (adjacency(l, k)) t.neighborhoods[k].push_back(l);
  return t;
}

bool is_connected(
    const Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>& adjacency) {
  const int n = static_cast<int>(adjacency.rows());
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v = 0; v < n; ++v) {
      if (adjacency(u, v) && !seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

NetworkTopology build_random_geometric(int n, double radius, std::uint64_t seed,
                                       int max_retries) {
  if (n < 1) throw std::invalid_argument("build_random_geometric: n must be >= 1");
  if (radius <= 0.0)
    throw std::invalid_argument("build_random_geometric: radius must be > 0");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    Eigen::MatrixXd pts(2, n);
    for (int k = 0; k < n; ++k) {
      pts(0, k) = unit(rng);
      pts(1, k) = unit(rng);
    }
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
    adj.setConstant(false);
    for (int i = 0; i < n; ++i) {
      adj(i, i) = true;
      for (int j = 0; j < i; ++j) {
        const bool edge = (pts.col(i) - pts.col(j)).norm() <= radius;
        adj(i, j) = adj(j, i) = edge;
      }
    }
    if (is_connected(adj)) return make_topology(adj);
  }
  throw std::runtime_error(
      "build_random_geometric: no connected draw within retry budget; radius too small");
}

Eigen::MatrixXd metropolis_matrix(const NetworkTopology& topology) {
  const int n = topology.n_nodes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    double off = 0.0;
    for (int l : topology.neighborhoods[k]) {
      if (l == k) continue;
      a(l, k) = 1.0 / std::max(topology.degree(k), topology.degree(l));
      off += a(l, k);
    }
    a(k, k) = 1.0 - off;  // residual keeps column sums at 1; symmetry by construction
  }
  return a;
}

Eigen::MatrixXd identity_matrix(int n) { return Eigen::MatrixXd::Identity(n, n); }

Eigen::MatrixXd uniform_neighborhood_matrix(const NetworkTopology& topology) {
  const int n = topology.n_nodes;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k)
    for (int l : topology.neighborhoods[k])
      a(l, k) = 1.0 / topology.degree(k);
  return a;
}

namespace {

void check_one(const Eigen::MatrixXd& m, const std::string& name, bool column_stochastic,
               const NetworkTopology& topology, double tol,
               std::vector<CombinationViolation>& out) {
  const int n = topology.n_nodes;
  if (m.rows() != n || m.cols() != n) {
    out.push_back({name, "shape", -1, name + " is not N x N"});
    return;
  }
  for (int j = 0; j < n; ++j) {
    const double sum = column_stochastic ? m.col(j).sum() : m.row(j).sum();
    if (std::abs(sum - 1.0) > tol) {
      std::ostringstream msg;
      msg << name << (column_stochastic ? " column " : " row ") << j << " sums to " << sum;
      out.push_back({name, column_stochastic ? "column sum" : "row sum", j, msg.str()});
    }
  }
  for (int k = 0; k < n; ++k)
    for (int l = 0; l < n; ++l) {
      if (m(l, k) < -tol)
        out.push_back({name, "nonnegative", k, name + " has a negative entry"});
      if (!topology.adjacency(l, k) && std::abs(m(l, k)) > tol) {
        std::ostringstream msg;
        msg << name << "(" << l << "," << k << ") nonzero outside the neighborhood";
        out.push_back({name, "sparsity", k, msg.str()});
      }
    }
}

}  // namespace

std::vector<CombinationViolation> validate_combination_set(
    const CombinationSet& set, const NetworkTopology& topology, double tol) {
  std::vector<CombinationViolation> out;
  check_one(set.a1, "a1", true, topology, tol, out);
  check_one(set.a2, "a2", true, topology, tol, out);
  // c is right-stochastic: rows sum to 1, sparsity c(l,k)=0 for l outside N_k.
  check_one(set.c, "c", false, topology, tol, out);
  return out;
}

bool is_regular(const Eigen::MatrixXd& p) {
  const int n = static_cast<int>(p.rows());
  if (n == 0 || p.cols() != n) return false;
  using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMat base(n, n), acc(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) base(i, j) = p(i, j) > 0.0;
  acc = base;
  const long m_bound = static_cast<long>(n) * n - 2L * n + 2L;
  for (long m = 1; m <= std::max<long>(m_bound, 1); ++m) {
    if (acc.all()) return true;
    // boolean matrix product acc <- acc * base
    BoolMat next(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        bool v = false;
        for (int k = 0; k < n && !v; ++k) v = acc(i, k) && base(k, j);
        next(i, j) = v;
      }
    acc = next;
  }
  return acc.all();
}

Eigen::VectorXd left_perron_vector(const Eigen::MatrixXd& p, double tol,
                                   long max_iters) {
  const int n = static_cast<int>(p.rows());
  if (n == 0 || p.cols() != n)
    throw std::invalid_argument("left_perron_vector: matrix must be square");
  Eigen::VectorXd theta = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd next = p.transpose() * theta;
    next /= next.sum();  // theta^T 1 = 1 throughout; entries stay positive for regular p
    const double diff = (next - theta).cwiseAbs().maxCoeff();
    theta = next;
    if (diff < tol) return theta;
  }
  throw std::runtime_error(
      "left_perron_vector: power iteration did not converge; input not regular?");
}

StepSizeProfile::StepSizeProfile(Eigen::VectorXd m) : mu(std::move(m)) {
  if (mu.size() == 0 || (mu.array() <= 0.0).any())
    throw std::invalid_argument("StepSizeProfile: all step-sizes must be positive");
}

StepSizeProfile StepSizeProfile::uniform(double mu_value, int n) {
  return StepSizeProfile(Eigen::VectorXd::Constant(n, mu_value));
}

std::string serialize_topology(const NetworkTopology& topology) {
  std::ostringstream os;
  os << "nodes " << topology.n_nodes << "\n";
  os << "edges";
  for (int i = 0; i < topology.n_nodes; ++i)
    for (int j = i + 1; j < topology.n_nodes; ++j)
      if (topology.adjacency(i, j)) os << " " << i << "-" << j;
  os << "\n";
  return os.str();
}

std::string serialize_matrix(const std::string& name, const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os.precision(17);
  os << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      os << (j ? " " : "") << m(i, j);
    os << "\n";
  }
  return os.str();
}

}  // namespace difopt
