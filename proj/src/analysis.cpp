#include "difopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace difopt {

double spectral_radius(const Eigen::MatrixXd& m, double tol, long max_iters) {
  const Eigen::Index n = m.rows();
  if (n == 0 || m.cols() != n)
    throw std::invalid_argument("spectral_radius: matrix must be square");
  if (n == 1) return std::abs(m(0, 0));
  // Deterministic start with all spectral components present in practice.
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] += 1e-3 * static_cast<double>(i % 7);
  x.normalize();
  double prev_growth = 0.0, est = 0.0, prev_est = -1.0;
  for (long it = 0; it < max_iters; ++it) {
    Eigen::VectorXd y = m * x;
    const double growth = y.norm();
    if (growth == 0.0) return 0.0;
    x = y / growth;
    if (it > 0) {
      // Geometric mean of consecutive growth factors converges for real and
      // complex-pair dominant eigenvalues alike.
      est = std::sqrt(growth * prev_growth);
      if (it > 2 && std::abs(est - prev_est) <= tol * std::max(1.0, est)) return est;
      prev_est = est;
    }
    prev_growth = growth;
  }
  throw std::runtime_error("spectral_radius: power iteration did not converge");
}

AggregateNoise aggregate_noise(const CostList& costs) {
  AggregateNoise agg;
  for (const auto& cost : costs) {
    const NoiseMoments nm = cost->noise_moments();
    agg.alpha = std::max(agg.alpha, nm.alpha);
    agg.sigma_v2 = std::max(agg.sigma_v2, nm.sigma_v2);
  }
  return agg;
}

double lambda_max_over_nodes(const CostList& costs) {
  double v = 0.0;
  for (const auto& cost : costs) v = std::max(v, cost->hessian_bounds().second);
  return v;
}

double one_norm(const Eigen::MatrixXd& c) {
  return c.cwiseAbs().colwise().sum().maxCoeff();
}

SpectralData build_spectral_data(const CostList& costs, const Eigen::MatrixXd& c,
                                 const StepSizeProfile& mu, const Eigen::MatrixXd& a1,
                                 const BlockVector& bias, const Eigen::VectorXd& w_o) {
  const int n = static_cast<int>(costs.size());
  GradientDescentSpec spec{costs, c, mu};
  const ContractionData cd = contraction_factor(spec);
  const AggregateNoise agg = aggregate_noise(costs);

  SpectralData s;
  s.gamma = cd.gamma;
  s.sigma_min = cd.sigma_min;
  s.sigma_max = cd.sigma_max;
  s.lambda_max = lambda_max_over_nodes(costs);
  s.c_one_norm = one_norm(c);
  s.alpha = agg.alpha;
  s.sigma_v2 = agg.sigma_v2;
  s.mu = mu.mu;
  const double noise_gain =
      4.0 * agg.alpha * s.lambda_max * s.lambda_max * s.c_one_norm * s.c_one_norm;
  s.gamma_d = cd.gamma.array().square() + noise_gain * mu.mu.array().square();

  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double g = costs[k]->gradient(w_o).squaredNorm();
    worst = std::max(worst, 2.0 * agg.alpha * g + agg.sigma_v2);
  }
  s.b_v = noise_gain / (s.c_one_norm * s.c_one_norm) * (a1.transpose() * power(bias));
  s.b_v.array() += worst;
  return s;
}

Eigen::VectorXd step_size_limit_contraction(const CostList& costs,
                                            const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(costs.size());
  Eigen::VectorXd lim(n);
  for (int k = 0; k < n; ++k) {
    double hi = 0.0;
    for (int l = 0; l < n; ++l) hi += c(l, k) * costs[l]->hessian_bounds().second;
    lim[k] = 2.0 / hi;
  }
  return lim;
}

Eigen::VectorXd step_size_limit_mss(const CostList& costs, const Eigen::MatrixXd& c,
                                    double alpha) {
  const int n = static_cast<int>(costs.size());
  const double lm = lambda_max_over_nodes(costs);
  const double gain = 4.0 * alpha * lm * lm * one_norm(c) * one_norm(c);
  Eigen::VectorXd lim(n);
  for (int k = 0; k < n; ++k) {
    double lo = 0.0, hi = 0.0;
    for (int l = 0; l < n; ++l) {
      const auto [lmin, lmax] = costs[l]->hessian_bounds();
      lo += c(l, k) * lmin;
      hi += c(l, k) * lmax;
    }
    lim[k] = std::min(hi / (hi * hi + gain), lo / (lo * lo + gain));
  }
  return lim;
}

MspBound msp_bound_trajectory(const SpectralData& spectral, const Eigen::MatrixXd& a1,
                              const Eigen::MatrixXd& a2, const Eigen::VectorXd& msp0,
                              long horizon) {
  const int n = static_cast<int>(msp0.size());
  const Eigen::MatrixXd b =
      a2.transpose() * spectral.gamma_d.asDiagonal() * a1.transpose();
  MspBound out;
  out.rho = spectral_radius(b);
  if (out.rho >= 1.0) {
    std::ostringstream msg;
    msg << "msp_bound_trajectory: recursion matrix has spectral radius " << out.rho
        << " >= 1; bound undefined";
    throw std::runtime_error(msg.str());
  }
  const double c2 = spectral.c_one_norm * spectral.c_one_norm;
  const Eigen::VectorXd forcing =
      c2 * (a2.transpose() *
            (spectral.mu.array().square() * spectral.b_v.array()).matrix());
  out.msp_inf_ub =
      (Eigen::MatrixXd::Identity(n, n) - b).partialPivLu().solve(forcing);
  out.trajectory.resize(horizon + 1, n);
  Eigen::VectorXd dev = msp0 - out.msp_inf_ub;
  out.trajectory.row(0) = msp0.transpose();
  for (long i = 1; i <= horizon; ++i) {
    dev = b * dev;
    out.trajectory.row(i) = (dev + out.msp_inf_ub).transpose();
  }
  return out;
}

double msp_o_mu_bound(const SpectralData& spectral, double beta, double sigma_min,
                      double sigma_max) {
  const double mu_max = spectral.mu.maxCoeff();
  const double c2 = spectral.c_one_norm * spectral.c_one_norm;
  const double denom =
      2.0 * beta * sigma_min -
      mu_max * (sigma_max * sigma_max + 4.0 * spectral.alpha * spectral.lambda_max * c2);
  if (denom <= 0.0)
    throw std::runtime_error(
        "msp_o_mu_bound: denominator not positive; step-size outside the small-step regime");
  return c2 * spectral.b_v.lpNorm<Eigen::Infinity>() * mu_max / denom;
}

namespace {

Eigen::MatrixXd kron_lift(const Eigen::MatrixXd& a, int m) {
  // A (x) I_M without a Kronecker helper: scalar a(l,k) scales block (l,k).
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * m, n * m);
  for (int l = 0; l < n; ++l)
    for (int k = 0; k < n; ++k)
      if (a(l, k) != 0.0)
        out.block(l * m, k * m, m, m) =
            a(l, k) * Eigen::MatrixXd::Identity(m, m);
  return out;
}

}  // namespace

Eigen::MatrixXd gradient_noise_covariance(const CostList& costs,
                                          const Eigen::VectorXd& w_o,
                                          const Eigen::MatrixXd& c,
                                          const NoiseCovOptions& opts) {
  const int n = static_cast<int>(costs.size());
  const int m = costs[0]->dim();
  Eigen::MatrixXd rv = Eigen::MatrixXd::Zero(n * m, n * m);
  if (!opts.monte_carlo) {
    for (int l = 0; l < n; ++l) {
      const Eigen::MatrixXd rl = costs[l]->noise_covariance(w_o);
      if (rl.isZero(0.0)) continue;
      for (int k = 0; k < n; ++k) {
        if (c(l, k) == 0.0) continue;
        for (int kp = 0; kp < n; ++kp) {
          const double wgt = c(l, k) * c(l, kp);
          if (wgt != 0.0) rv.block(k * m, kp * m, m, m) += wgt * rl;
        }
      }
    }
    return rv;
  }
  std::mt19937_64 rng(opts.seed);
  std::vector<Eigen::VectorXd> true_grads(n);
  for (int l = 0; l < n; ++l) true_grads[l] = costs[l]->gradient(w_o);
  Eigen::MatrixXd v(m, n);        // one shared draw per cost
  Eigen::VectorXd g(n * m);       // stacked weighted noise
  for (long s = 0; s < opts.samples; ++s) {
    for (int l = 0; l < n; ++l)
      v.col(l) = costs[l]->stochastic_gradient(w_o, rng) - true_grads[l];
    for (int k = 0; k < n; ++k) {
      Eigen::VectorXd gk = Eigen::VectorXd::Zero(m);
      for (int l = 0; l < n; ++l)
        if (c(l, k) != 0.0) gk += c(l, k) * v.col(l);
      g.segment(k * m, m) = gk;
    }
    rv.noalias() += g * g.transpose();
  }
  rv /= static_cast<double>(opts.samples);
  return rv;
}

SteadyStateOperators build_steady_state_operators(
    const CostList& costs, const Eigen::MatrixXd& a1, const Eigen::MatrixXd& a2,
    const Eigen::MatrixXd& c, const StepSizeProfile& mu, const Eigen::VectorXd& w_o,
    const NoiseCovOptions& noise_opts) {
  const int n = static_cast<int>(costs.size());
  const int m = costs[0]->dim();
  const int mn = m * n;

  SteadyStateOperators ops;
  ops.m = m;
  ops.n = n;
  ops.r_inf = Eigen::MatrixXd::Zero(mn, mn);
  ops.g_o.resize(mn);
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXd hk = Eigen::MatrixXd::Zero(m, m);
    for (int l = 0; l < n; ++l)
      if (c(l, k) != 0.0) hk += c(l, k) * costs[l]->hessian(w_o);
    ops.r_inf.block(k * m, k * m, m, m) = hk;
    ops.g_o.segment(k * m, m) = costs[k]->gradient(w_o);
  }
  ops.r_v = gradient_noise_covariance(costs, w_o, c, noise_opts);

  const Eigen::MatrixXd a1l = kron_lift(a1, m);
  const Eigen::MatrixXd a2l = kron_lift(a2, m);
  const Eigen::MatrixXd cl = kron_lift(c, m);
  Eigen::VectorXd mu_lift(mn);
  for (int k = 0; k < n; ++k) mu_lift.segment(k * m, m).setConstant(mu.mu[k]);
  const Eigen::MatrixXd i_minus_mr =
      Eigen::MatrixXd::Identity(mn, mn) - mu_lift.asDiagonal() * ops.r_inf;

  ops.d = a1l * i_minus_mr * a2l;
  ops.b_tilde = a2l.transpose() * i_minus_mr * a1l.transpose();
  ops.bvec = a2l.transpose() * (mu_lift.asDiagonal() * (cl.transpose() * ops.g_o));
  ops.weighted_noise = a2l.transpose() * mu_lift.asDiagonal() * ops.r_v *
                       mu_lift.asDiagonal() * a2l;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(mn, mn) - ops.b_tilde);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "build_steady_state_operators: I - A2^T(I - M R_inf)A1^T is singular; "
        "check step-sizes and stochasticity");
  ops.e_w_inf = lu.solve(ops.bvec);
  return ops;
}

Eigen::VectorXd bias_fixed_point(const CostList& costs, const Eigen::MatrixXd& a1,
                                 const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                 const StepSizeProfile& mu, const Eigen::VectorXd& w_o) {
  return build_steady_state_operators(costs, a1, a2, c, mu, w_o).e_w_inf;
}

SteadyStateOperators build_consensus_operators(const CostList& costs,
                                               const Eigen::MatrixXd& a,
                                               const StepSizeProfile& mu,
                                               const Eigen::VectorXd& w_o,
                                               const NoiseCovOptions& noise_opts) {
  const int n = static_cast<int>(costs.size());
  const int m = costs[0]->dim();
  const int mn = m * n;

  SteadyStateOperators ops;
  ops.m = m;
  ops.n = n;
  ops.r_inf = Eigen::MatrixXd::Zero(mn, mn);
  ops.g_o.resize(mn);
  for (int k = 0; k < n; ++k) {
    ops.r_inf.block(k * m, k * m, m, m) = costs[k]->hessian(w_o);
    ops.g_o.segment(k * m, m) = costs[k]->gradient(w_o);
  }
  ops.r_v = gradient_noise_covariance(costs, w_o,
                                      Eigen::MatrixXd::Identity(n, n), noise_opts);

  const Eigen::MatrixXd al = kron_lift(a, m);
  Eigen::VectorXd mu_lift(mn);
  for (int k = 0; k < n; ++k) mu_lift.segment(k * m, m).setConstant(mu.mu[k]);

  ops.b_tilde = al.transpose() - mu_lift.asDiagonal() * ops.r_inf;
  ops.d = ops.b_tilde.transpose();
  ops.bvec = mu_lift.asDiagonal() * ops.g_o;
  ops.weighted_noise =
      mu_lift.asDiagonal() * ops.r_v * Eigen::MatrixXd(mu_lift.asDiagonal());

  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(mn, mn) - ops.b_tilde);
  if (!lu.isInvertible())
    throw std::runtime_error(
        "build_consensus_operators: I - (A_lift^T - M R_inf) is singular");
  ops.e_w_inf = lu.solve(ops.bvec);
  return ops;
}

SteadyStateOperators build_centralized_operators(const CostList& costs, double mu,
                                                 const Eigen::VectorXd& w_o) {
  const int n = static_cast<int>(costs.size());
  const int m = costs[0]->dim();
  SteadyStateOperators ops;
  ops.m = m;
  ops.n = 1;
  Eigen::MatrixXd h_bar = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd g_bar = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd s_bar = Eigen::MatrixXd::Zero(m, m);
  for (int k = 0; k < n; ++k) {
    h_bar += costs[k]->hessian(w_o);
    g_bar += costs[k]->gradient(w_o);
    s_bar += costs[k]->noise_covariance(w_o);
  }
  h_bar /= static_cast<double>(n);
  g_bar /= static_cast<double>(n);
  s_bar /= static_cast<double>(n) * static_cast<double>(n);
  ops.r_inf = h_bar;
  ops.g_o = g_bar;
  ops.r_v = s_bar;
  ops.b_tilde = Eigen::MatrixXd::Identity(m, m) - mu * h_bar;
  ops.d = ops.b_tilde.transpose();
  ops.bvec = mu * g_bar;  // zero at the exact minimizer
  ops.weighted_noise = mu * mu * s_bar;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(mu * h_bar);
  if (!lu.isInvertible())
    throw std::runtime_error("build_centralized_operators: averaged Hessian singular");
  ops.e_w_inf = lu.solve(ops.bvec);
  return ops;
}

ZeroBiasCheck check_zero_bias_condition(const Eigen::VectorXd& theta,
                                        const Eigen::MatrixXd& a2,
                                        const Eigen::MatrixXd& omega,
                                        const Eigen::MatrixXd& c) {
  const Eigen::RowVectorXd row =
      theta.transpose() * a2.transpose() * omega * c.transpose();
  const double hi = row.maxCoeff(), lo = row.minCoeff();
  ZeroBiasCheck out;
  const double scale = std::max({std::abs(hi), std::abs(lo), 1e-300});
  out.holds = (hi - lo) <= 1e-10 * scale;
  out.c0 = row.mean();
  return out;
}

double spectral_radius_f(const SteadyStateOperators& ops) {
  const double rho_d = spectral_radius(ops.d);
  return rho_d * rho_d;
}

namespace {

// Solves (I - F)^T y = vec(RHS) with F = D (x) D, matrix-free: the solution
// viewed as an MN x MN matrix is Y = sum_j (D^T)^j RHS D^j, accumulated by
// doubling (Y <- Y + P^T Y P, P <- P^2) until the tail is below round-off.
Eigen::MatrixXd solve_adjoint_variance(const Eigen::MatrixXd& d,
                                       const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd y = rhs;
  Eigen::MatrixXd p = d;
  for (int doubling = 0; doubling < 128; ++doubling) {
    const double tail_scale = p.norm();
    if (tail_scale * tail_scale * y.norm() <= 1e-16 * std::max(1.0, y.norm()))
      return y;
    y = y + p.transpose() * y * p;
    p = p * p;
    if (!y.allFinite())
      throw std::runtime_error("steady_state_mse: variance series diverged");
  }
  throw std::runtime_error("steady_state_mse: variance series did not converge");
}

}  // namespace

Eigen::VectorXd steady_state_mse_per_node(const SteadyStateOperators& ops) {
  const double rho = spectral_radius_f(ops);
  if (rho >= 1.0) {
    std::ostringstream msg;
    msg << "steady_state_mse: rho(F) = " << rho << " >= 1; steady state undefined";
    throw std::runtime_error(msg.str());
  }
  Eigen::MatrixXd rhs = ops.weighted_noise +
                        ops.bvec * ops.bvec.transpose() +
                        2.0 * ops.bvec * (ops.b_tilde * ops.e_w_inf).transpose();
  const Eigen::MatrixXd y = solve_adjoint_variance(ops.d, rhs);
  Eigen::VectorXd mse(ops.n);
  for (int k = 0; k < ops.n; ++k)
    mse[k] = y.block(k * ops.m, k * ops.m, ops.m, ops.m).trace();
  return mse;
}

double steady_state_mse_network(const SteadyStateOperators& ops) {
  return steady_state_mse_per_node(ops).mean();
}

TheoryPrediction predict_steady_state(const CostList& costs, const Eigen::MatrixXd& a1,
                                      const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                      const StepSizeProfile& mu,
                                      const Eigen::VectorXd& w_o) {
  const SteadyStateOperators ops =
      build_steady_state_operators(costs, a1, a2, c, mu, w_o);
  TheoryPrediction p;
  p.e_w_inf = ops.e_w_inf;
  const BlockVector bias = BlockVector::from_flat(ops.e_w_inf, ops.m);
  p.bias_power = power(bias);
  p.bias_power_per_node = p.bias_power.mean();
  p.rho_f = spectral_radius_f(ops);
  p.mse_per_node = steady_state_mse_per_node(ops);
  p.mse_network = p.mse_per_node.mean();
  return p;
}

}  // namespace difopt
