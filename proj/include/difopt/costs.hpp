#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace difopt {

// Declared gradient-noise envelope: E||v(w)||^2 <= alpha*||grad J(w)||^2 + sigma_v2,
// with v conditionally zero-mean.
struct NoiseMoments {
  double alpha = 0.0;
  double sigma_v2 = 0.0;
};

// Per-agent cost contract. hessian_bounds() declares (lambda_min, lambda_max)
// such that lambda_min*I <= hessian(w) <= lambda_max*I on the cost's stated
// validity region; stochastic_gradient(w) = gradient(w) + v(w) with v
// satisfying the declared NoiseMoments envelope.
class Cost {
 public:
  virtual ~Cost() = default;
  virtual int dim() const = 0;
  virtual double value(const Eigen::VectorXd& w) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& w) const = 0;
  // Deterministic costs use their true gradient.
  virtual Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w,
                                              std::mt19937_64& rng) const {
    (void)rng;
    return gradient(w);
  }
  virtual Eigen::MatrixXd hessian(const Eigen::VectorXd& w) const = 0;
  virtual std::pair<double, double> hessian_bounds() const = 0;
  virtual NoiseMoments noise_moments() const { return {}; }
  // Covariance of the gradient noise v(w) at a fixed point w (analytic form).
  virtual Eigen::MatrixXd noise_covariance(const Eigen::VectorXd& w) const {
    (void)w;
    return Eigen::MatrixXd::Zero(dim(), dim());
  }
};

// J(w) = 1/2 w^T q w - b^T w with additive Gaussian gradient noise of
// per-entry standard deviation noise_std: alpha = 0, sigma_v2 = M*noise_std^2.
class QuadraticCost : public Cost {
 public:
  QuadraticCost(Eigen::MatrixXd q, Eigen::VectorXd b, double noise_std = 0.0);

  int dim() const override { return static_cast<int>(b_.size()); }
  double value(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w,
                                      std::mt19937_64& rng) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w) const override;
  std::pair<double, double> hessian_bounds() const override;
  NoiseMoments noise_moments() const override;
  Eigen::MatrixXd noise_covariance(const Eigen::VectorXd& w) const override;

  const Eigen::MatrixXd& q() const { return q_; }
  const Eigen::VectorXd& b() const { return b_; }
  double noise_std() const { return noise_std_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::VectorXd b_;
  double noise_std_;
  double lambda_min_, lambda_max_;
};

// Smooth convex non-decreasing penalty with phi -> 0 as x -> -inf.
// Pluggable: any triple (phi, dphi, d2phi) satisfying the contract works.
struct BarrierFunction {
  double t = 10.0, rho = 0.1, tau = 0.1;
  std::function<double(double)> phi, dphi, d2phi;
};

// Softplus penalty phi(x) = (rho/t)*ln(1 + exp(t*(x+tau)/rho)), evaluated in
// overflow-safe log-sum-exp form.
BarrierFunction default_barrier(double t = 10.0, double rho = 0.1, double tau = 0.1);

enum class FinanceRole { ExpectedReturn, Variance, TaxConstraint, Budget };

std::string role_name(FinanceRole role);

struct FinanceParams {
  int dim = 5;
  BarrierFunction barrier = default_barrier();
  // Ridge added to roles whose raw Hessian is zero (ExpectedReturn,
  // TaxConstraint, Budget) so that every node has positive curvature.
  double ridge = 0.05;
  Eigen::VectorXd p_bar;  // mean return; defaults to the all-ones vector
  Eigen::MatrixXd r_p;    // return covariance; defaults to identity
  Eigen::VectorXd h;      // tax-constraint direction (TaxConstraint role)
  double h_cap = 0.0;     // tax-constraint level b_k: h^T w >= b_k desired
  double budget_cap = 5.0;
  // The declared Hessian bounds and the Variance-role noise envelope hold on
  // the region where every barrier argument stays <= -(tau + bound_margin):
  // there each barrier term's curvature is capped by d2phi at that argument
  // and its gradient contribution is negligible against the quadratic term.
  double bound_margin = 0.1;
};

// Collaborative decision-making costs. Every role adds the nonnegativity
// penalty sum_m phi(-w_m); deterministic roles (TaxConstraint, Budget) use
// true gradients, the other two have the stochastic forms below.
//   ExpectedReturn: J = -p_bar^T w + ridge*||w||^2 + nonneg;
//                   stochastic gradient draws u ~ N(p_bar, I).
//   Variance:       J = w^T r_p w + nonneg;
//                   stochastic gradient uses 2 s s^T w with s ~ N(0, r_p).
//   TaxConstraint:  J = phi(h_cap - h^T w) + ridge*||w||^2 + nonneg.
//   Budget:         J = phi(1^T w - budget_cap) + ridge*||w||^2 + nonneg.
class FinanceCost : public Cost {
 public:
  FinanceCost(FinanceRole role, FinanceParams params);

  int dim() const override { return params_.dim; }
  double value(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const override;
  Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w,
                                      std::mt19937_64& rng) const override;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& w) const override;
  std::pair<double, double> hessian_bounds() const override;
  NoiseMoments noise_moments() const override;
  Eigen::MatrixXd noise_covariance(const Eigen::VectorXd& w) const override;

  FinanceRole role() const { return role_; }
  const FinanceParams& params() const { return params_; }
  // True iff every barrier argument at w is <= -(tau + bound_margin), i.e. w
  // lies in the region where the declared Hessian bounds are valid.
  bool in_declared_region(const Eigen::VectorXd& w) const;

 private:
  FinanceRole role_;
  FinanceParams params_;
  double ridge_ = 0.0;        // effective ridge for this role
  double barrier_cap_ = 0.0;  // curvature cap of one barrier term in-region
  double rp_min_ = 0.0, rp_max_ = 0.0;
  Eigen::MatrixXd rp_chol_;   // lower factor for sampling s ~ N(0, r_p)
};

struct HessianCheckViolation {
  int point_index;
  double eigenvalue;
  double lower, upper;
};

struct HessianCheckReport {
  int n_points = 0;
  std::vector<HessianCheckViolation> violations;
  bool pass() const { return violations.empty(); }
};

// Verifies that the eigenvalues of hessian(w) lie inside
// [lambda_min - 1e-9, lambda_max + 1e-9] at each sample point.
HessianCheckReport hessian_check(const Cost& cost,
                                 const std::vector<Eigen::VectorXd>& points);

using CostList = std::vector<std::shared_ptr<const Cost>>;

}  // namespace difopt
