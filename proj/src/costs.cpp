#include "difopt/costs.hpp"

#include <cmath>
#include <stdexcept>

namespace difopt {

QuadraticCost::QuadraticCost(Eigen::MatrixXd q, Eigen::VectorXd b, double noise_std)
    : q_(std::move(q)), b_(std::move(b)), noise_std_(noise_std) {
  if (q_.rows() != q_.cols() || q_.rows() != b_.size())
    throw std::invalid_argument("QuadraticCost: q must be M x M matching b");
  if (!q_.isApprox(q_.transpose(), 1e-12))
    throw std::invalid_argument("QuadraticCost: q must be symmetric");
  if (noise_std_ < 0.0)
    throw std::invalid_argument("QuadraticCost: noise_std must be >= 0");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q_);
  lambda_min_ = es.eigenvalues().minCoeff();
  lambda_max_ = es.eigenvalues().maxCoeff();
  if (lambda_min_ < -1e-12)
    throw std::invalid_argument("QuadraticCost: q must be positive semidefinite");
  lambda_min_ = std::max(lambda_min_, 0.0);
}

double QuadraticCost::value(const Eigen::VectorXd& w) const {
  return 0.5 * w.dot(q_ * w) - b_.dot(w);
}

Eigen::VectorXd QuadraticCost::gradient(const Eigen::VectorXd& w) const {
  return q_ * w - b_;
}

Eigen::VectorXd QuadraticCost::stochastic_gradient(const Eigen::VectorXd& w,
                                                   std::mt19937_64& rng) const {
  Eigen::VectorXd g = gradient(w);
  if (noise_std_ > 0.0) {
    std::normal_distribution<double> normal(0.0, noise_std_);
    for (Eigen::Index m = 0; m < g.size(); ++m) g[m] += normal(rng);
  }
  return g;
}

Eigen::MatrixXd QuadraticCost::hessian(const Eigen::VectorXd&) const { return q_; }

std::pair<double, double> QuadraticCost::hessian_bounds() const {
  return {lambda_min_, lambda_max_};
}

NoiseMoments QuadraticCost::noise_moments() const {
  return {0.0, static_cast<double>(dim()) * noise_std_ * noise_std_};
}

Eigen::MatrixXd QuadraticCost::noise_covariance(const Eigen::VectorXd&) const {
  return noise_std_ * noise_std_ * Eigen::MatrixXd::Identity(dim(), dim());
}

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double stable_softplus(double z) {
  // ln(1 + exp(z)) without overflow for large |z|.
  if (z > 0.0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

}  // namespace

BarrierFunction default_barrier(double t, double rho, double tau) {
  if (t <= 0.0 || rho <= 0.0 || tau < 0.0)
    throw std::invalid_argument("default_barrier: need t > 0, rho > 0, tau >= 0");
  BarrierFunction b;
  b.t = t;
  b.rho = rho;
  b.tau = tau;
  b.phi = [t, rho, tau](double x) {
    return (rho / t) * stable_softplus(t * (x + tau) / rho);
  };
  b.dphi = [t, rho, tau](double x) { return stable_sigmoid(t * (x + tau) / rho); };
  b.d2phi = [t, rho, tau](double x) {
    const double s = stable_sigmoid(t * (x + tau) / rho);
    return (t / rho) * s * (1.0 - s);
  };
  return b;
}

std::string role_name(FinanceRole role) {
  switch (role) {
    case FinanceRole::ExpectedReturn: return "expected_return";
    case FinanceRole::Variance: return "variance";
    case FinanceRole::TaxConstraint: return "tax";
    case FinanceRole::Budget: return "budget";
  }
  return "unknown";
}

FinanceCost::FinanceCost(FinanceRole role, FinanceParams params)
    : role_(role), params_(std::move(params)) {
  const int m = params_.dim;
  if (m < 1) throw std::invalid_argument("FinanceCost: dim must be >= 1");
  if (params_.p_bar.size() == 0) params_.p_bar = Eigen::VectorXd::Ones(m);
  if (params_.r_p.size() == 0) params_.r_p = Eigen::MatrixXd::Identity(m, m);
  if (params_.p_bar.size() != m || params_.r_p.rows() != m || params_.r_p.cols() != m)
    throw std::invalid_argument("FinanceCost: p_bar/r_p dimension mismatch");
  if (role_ == FinanceRole::TaxConstraint) {
    if (params_.h.size() != m)
      throw std::invalid_argument("FinanceCost: tax role needs an h vector of length dim");
  }
  const bool needs_ridge = role_ != FinanceRole::Variance;
  ridge_ = needs_ridge ? params_.ridge : 0.0;
  if (needs_ridge && ridge_ <= 0.0)
    throw std::invalid_argument(
        "FinanceCost: roles with zero raw curvature require ridge > 0");
  barrier_cap_ = params_.barrier.d2phi(-(params_.barrier.tau + params_.bound_margin));
  if (role_ == FinanceRole::Variance) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(params_.r_p);
    rp_min_ = es.eigenvalues().minCoeff();
    rp_max_ = es.eigenvalues().maxCoeff();
    if (rp_min_ <= 0.0)
      throw std::invalid_argument("FinanceCost: r_p must be positive definite");
    Eigen::LLT<Eigen::MatrixXd> llt(params_.r_p);
    rp_chol_ = llt.matrixL();
  }
}

double FinanceCost::value(const Eigen::VectorXd& w) const {
  const auto& bar = params_.barrier;
  double v = ridge_ * w.squaredNorm();
  for (Eigen::Index m = 0; m < w.size(); ++m) v += bar.phi(-w[m]);
  switch (role_) {
    case FinanceRole::ExpectedReturn: v += -params_.p_bar.dot(w); break;
    case FinanceRole::Variance: v += w.dot(params_.r_p * w); break;
    case FinanceRole::TaxConstraint: v += bar.phi(params_.h_cap - params_.h.dot(w)); break;
    case FinanceRole::Budget: v += bar.phi(w.sum() - params_.budget_cap); break;
  }
  return v;
}

Eigen::VectorXd FinanceCost::gradient(const Eigen::VectorXd& w) const {
  const auto& bar = params_.barrier;
  Eigen::VectorXd g = 2.0 * ridge_ * w;
  for (Eigen::Index m = 0; m < w.size(); ++m) g[m] -= bar.dphi(-w[m]);
  switch (role_) {
    case FinanceRole::ExpectedReturn: g -= params_.p_bar; break;
    case FinanceRole::Variance: g += 2.0 * (params_.r_p * w); break;
    case FinanceRole::TaxConstraint:
      g -= bar.dphi(params_.h_cap - params_.h.dot(w)) * params_.h;
      break;
    case FinanceRole::Budget:
      g.array() += bar.dphi(w.sum() - params_.budget_cap);
      break;
  }
  return g;
}

Eigen::VectorXd FinanceCost::stochastic_gradient(const Eigen::VectorXd& w,
                                                 std::mt19937_64& rng) const {
  if (role_ == FinanceRole::TaxConstraint || role_ == FinanceRole::Budget)
    return gradient(w);  // deterministic roles
  const auto& bar = params_.barrier;
  Eigen::VectorXd g = 2.0 * ridge_ * w;
  for (Eigen::Index m = 0; m < w.size(); ++m) g[m] -= bar.dphi(-w[m]);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(w.size());
  for (Eigen::Index m = 0; m < z.size(); ++m) z[m] = normal(rng);
  if (role_ == FinanceRole::ExpectedReturn) {
    g -= params_.p_bar + z;  // u = p_bar + z, gradient term -u
  } else {
    const Eigen::VectorXd s = rp_chol_ * z;  // s ~ N(0, r_p)
    g += 2.0 * s * s.dot(w);
  }
  return g;
}

Eigen::MatrixXd FinanceCost::hessian(const Eigen::VectorXd& w) const {
  const int m = dim();
  const auto& bar = params_.barrier;
  Eigen::MatrixXd h = 2.0 * ridge_ * Eigen::MatrixXd::Identity(m, m);
  for (int i = 0; i < m; ++i) h(i, i) += bar.d2phi(-w[i]);
  switch (role_) {
    case FinanceRole::ExpectedReturn: break;
    case FinanceRole::Variance: h += 2.0 * params_.r_p; break;
    case FinanceRole::TaxConstraint:
      h += bar.d2phi(params_.h_cap - params_.h.dot(w)) *
           (params_.h * params_.h.transpose());
      break;
    case FinanceRole::Budget:
      h.array() += bar.d2phi(w.sum() - params_.budget_cap);
      break;
  }
  return h;
}

std::pair<double, double> FinanceCost::hessian_bounds() const {
  // Valid on the region where every barrier argument is <= -(tau+margin):
  // each barrier term then contributes curvature in [0, barrier_cap_].
  const double m = static_cast<double>(dim());
  switch (role_) {
    case FinanceRole::ExpectedReturn:
      return {2.0 * ridge_, 2.0 * ridge_ + barrier_cap_};
    case FinanceRole::Variance:
      return {2.0 * rp_min_, 2.0 * rp_max_ + barrier_cap_};
    case FinanceRole::TaxConstraint:
      return {2.0 * ridge_,
              2.0 * ridge_ + barrier_cap_ * (1.0 + params_.h.squaredNorm())};
    case FinanceRole::Budget:
      return {2.0 * ridge_, 2.0 * ridge_ + barrier_cap_ * (1.0 + m)};
  }
  return {0.0, 0.0};
}

NoiseMoments FinanceCost::noise_moments() const {
  switch (role_) {
    case FinanceRole::ExpectedReturn:
      // v = -(u - p_bar) ~ N(0, I): E||v||^2 = M.
      return {0.0, static_cast<double>(dim())};
    case FinanceRole::Variance: {
      // v = 2(s s^T - r_p) w: E||v||^2 = 4 w^T (tr(r_p) r_p + r_p^2) w,
      // bounded by alpha * ||2 r_p w||^2 with alpha = tr(r_p)/lambda_min + 1.
      const double alpha = params_.r_p.trace() / rp_min_ + 1.0;
      return {alpha, 0.0};
    }
    case FinanceRole::TaxConstraint:
    case FinanceRole::Budget:
      return {0.0, 0.0};
  }
  return {};
}

Eigen::MatrixXd FinanceCost::noise_covariance(const Eigen::VectorXd& w) const {
  const int m = dim();
  switch (role_) {
    case FinanceRole::ExpectedReturn:
      return Eigen::MatrixXd::Identity(m, m);
    case FinanceRole::Variance: {
      // Cov(2(ss^T - r_p)w) = 4 (r_p w w^T r_p + (w^T r_p w) r_p).
      const Eigen::VectorXd rw = params_.r_p * w;
      return 4.0 * (rw * rw.transpose() + w.dot(rw) * params_.r_p);
    }
    case FinanceRole::TaxConstraint:
    case FinanceRole::Budget:
      return Eigen::MatrixXd::Zero(m, m);
  }
  return Eigen::MatrixXd::Zero(m, m);
}

bool FinanceCost::in_declared_region(const Eigen::VectorXd& w) const {
  const double lim = -(params_.barrier.tau + params_.bound_margin);
  for (Eigen::Index m = 0; m < w.size(); ++m)
    if (-w[m] > lim) return false;
  if (role_ == FinanceRole::TaxConstraint &&
      params_.h_cap - params_.h.dot(w) > lim)
    return false;
  if (role_ == FinanceRole::Budget && w.sum() - params_.budget_cap > lim)
    return false;
  return true;
}

HessianCheckReport hessian_check(const Cost& cost,
                                 const std::vector<Eigen::VectorXd>& points) {
  HessianCheckReport report;
  report.n_points = static_cast<int>(points.size());
  const auto [lo, hi] = cost.hessian_bounds();
  for (int i = 0; i < report.n_points; ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cost.hessian(points[i]));
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
      const double e = es.eigenvalues()[j];
      if (e < lo - 1e-9 || e > hi + 1e-9)
        report.violations.push_back({i, e, lo, hi});
    }
  }
  return report;
}

}  // namespace difopt
