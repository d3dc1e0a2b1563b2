#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace difopt {

// Network state: N blocks of dimension M, stored as the columns of an M x N
// matrix. The stacked MN-vector view (used by the dense analysis machinery)
// is column-major, so block k occupies entries [k*M, (k+1)*M).
struct BlockVector {
  Eigen::MatrixXd data;  // M x N

  BlockVector() = default;
  BlockVector(int block_dim, int n_blocks)
      : data(Eigen::MatrixXd::Zero(block_dim, n_blocks)) {
    if (block_dim < 1 || n_blocks < 1)
      throw std::invalid_argument("BlockVector: dimensions must be positive");
  }
  explicit BlockVector(Eigen::MatrixXd m) : data(std::move(m)) {}

  int block_dim() const { return static_cast<int>(data.rows()); }
  int n_blocks() const { return static_cast<int>(data.cols()); }

  Eigen::MatrixXd::ColXpr block(int k) { return data.col(k); }
  Eigen::MatrixXd::ConstColXpr block(int k) const { return data.col(k); }

  static BlockVector zero(int block_dim, int n_blocks) {
    return BlockVector(block_dim, n_blocks);
  }

  // Stacked MN-vector (block k contiguous).
  Eigen::VectorXd flatten() const {
    return Eigen::Map<const Eigen::VectorXd>(data.data(), data.size());
  }
  static BlockVector from_flat(const Eigen::VectorXd& v, int block_dim) {
    if (block_dim < 1 || v.size() % block_dim != 0)
      throw std::invalid_argument("BlockVector::from_flat: size mismatch");
    const int n = static_cast<int>(v.size()) / block_dim;
    BlockVector x(block_dim, n);
    x.data = Eigen::Map<const Eigen::MatrixXd>(v.data(), block_dim, n);
    return x;
  }
};

// Per-block squared Euclidean norms, col{||x_1||^2, ..., ||x_N||^2}.
inline Eigen::VectorXd power(const BlockVector& x) {
  return x.data.colwise().squaredNorm().transpose();
}

// max_k ||x_k||; the metric in which the noise-free recursion contracts.
// Satisfies ||power(x)||_inf == block_max_norm(x)^2.
inline double block_max_norm(const BlockVector& x) {
  if (x.data.size() == 0) return 0.0;
  return x.data.colwise().norm().maxCoeff();
}

// N rows of M decimal values, one row per block.
std::string serialize_block_vector(const BlockVector& x);

}  // namespace difopt
