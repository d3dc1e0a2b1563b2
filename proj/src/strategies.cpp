#include "difopt/strategies.hpp"

#include <cmath>
#include <stdexcept>

namespace difopt {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::General: return "general";
    case Variant::Atc: return "atc";
    case Variant::Cta: return "cta";
    case Variant::Consensus: return "consensus";
    case Variant::Centralized: return "centralized";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "general") return Variant::General;
  if (name == "atc") return Variant::Atc;
  if (name == "cta") return Variant::Cta;
  if (name == "consensus") return Variant::Consensus;
  if (name == "centralized") return Variant::Centralized;
  throw std::invalid_argument("unknown strategy variant: " + name);
}

StrategyConfig make_strategy(Variant v, const Eigen::MatrixXd& a,
                             const StepSizeProfile& mu) {
  const int n = static_cast<int>(a.rows());
  StrategyConfig cfg;
  cfg.variant = v;
  cfg.mu = mu;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  switch (v) {
    case Variant::Atc:
      cfg.a1 = eye; cfg.c = eye; cfg.a2 = a;
      break;
    case Variant::Cta:
      cfg.a1 = a; cfg.c = eye; cfg.a2 = eye;
      break;
    case Variant::Consensus:
      cfg.a1 = a; cfg.c = eye; cfg.a2 = eye;
      break;
    case Variant::Centralized:
      cfg.a1 = eye; cfg.c = eye; cfg.a2 = eye;
      break;
    case Variant::General:
      throw std::invalid_argument("make_strategy: general needs (a1, c, a2)");
  }
  return cfg;
}

StrategyConfig make_general_strategy(const Eigen::MatrixXd& a1,
                                     const Eigen::MatrixXd& c,
                                     const Eigen::MatrixXd& a2,
                                     const StepSizeProfile& mu) {
  StrategyConfig cfg;
  cfg.variant = Variant::General;
  cfg.a1 = a1;
  cfg.c = c;
  cfg.a2 = a2;
  cfg.mu = mu;
  return cfg;
}

namespace {

Eigen::VectorXd node_gradient(const Cost& cost, const Eigen::VectorXd& w,
                              std::mt19937_64* rng) {
  return rng ? cost.stochastic_gradient(w, *rng) : cost.gradient(w);
}

}  // namespace

BlockVector general_diffusion_step(const BlockVector& w, const Eigen::MatrixXd& a1,
                                   const Eigen::MatrixXd& a2, const Eigen::MatrixXd& c,
                                   const StepSizeProfile& mu, const CostList& costs,
                                   std::mt19937_64* rng) {
  const int n = w.n_blocks();
  BlockVector phi = combine(a1, w);
  BlockVector psi = phi;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(w.block_dim());
    for (int l = 0; l < n; ++l) {
      const double clk = c(l, k);
      if (clk != 0.0) g += clk * node_gradient(*costs[l], phi.block(k), rng);
    }
    psi.data.col(k) -= mu.mu[k] * g;
  }
  return combine(a2, psi);
}

BlockVector atc_step(const BlockVector& w, const Eigen::MatrixXd& a,
                     const StepSizeProfile& mu, const CostList& costs,
                     std::mt19937_64* rng) {
  BlockVector psi = w;
  for (int k = 0; k < w.n_blocks(); ++k)
    psi.data.col(k) -= mu.mu[k] * node_gradient(*costs[k], w.block(k), rng);
  return combine(a, psi);
}

BlockVector cta_step(const BlockVector& w, const Eigen::MatrixXd& a,
                     const StepSizeProfile& mu, const CostList& costs,
                     std::mt19937_64* rng) {
  BlockVector phi = combine(a, w);
  for (int k = 0; k < w.n_blocks(); ++k)
    phi.data.col(k) -= mu.mu[k] * node_gradient(*costs[k], phi.block(k), rng);
  return phi;
}

BlockVector consensus_step(const BlockVector& w, const Eigen::MatrixXd& a,
                           const StepSizeProfile& mu, const CostList& costs,
                           std::mt19937_64* rng) {
  BlockVector out = combine(a, w);
  for (int k = 0; k < w.n_blocks(); ++k)
    out.data.col(k) -= mu.mu[k] * node_gradient(*costs[k], w.block(k), rng);
  return out;
}

Eigen::VectorXd centralized_step(const Eigen::VectorXd& w, const CostList& costs,
                                 double mu, std::mt19937_64* rng) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(w.size());
  for (const auto& cost : costs) g += node_gradient(*cost, w, rng);
  return w - (mu / static_cast<double>(costs.size())) * g;
}

double to_db(double linear) { return 10.0 * std::log10(linear); }

double LearningCurve::steady_network_db() const { return to_db(steady_network_mse); }

LearningCurve run_monte_carlo(const StrategyConfig& config, const CostList& costs,
                              const BlockVector& reference) {
  const int n = static_cast<int>(costs.size());
  const int m = costs.empty() ? 0 : costs[0]->dim();
  if (reference.n_blocks() != n || reference.block_dim() != m)
    throw std::invalid_argument("run_monte_carlo: reference shape mismatch");
  if (config.horizon < 1) throw std::invalid_argument("run_monte_carlo: horizon >= 1");
  if (config.runs < 1) throw std::invalid_argument("run_monte_carlo: runs >= 1");

  LearningCurve curve;
  curve.reference = reference.flatten();
  curve.per_node_mse = Eigen::MatrixXd::Zero(config.horizon, n);

  const BlockVector x0 = config.initial_state ? *config.initial_state
                                              : BlockVector::zero(m, n);
  if (x0.n_blocks() != n || x0.block_dim() != m)
    throw std::invalid_argument("run_monte_carlo: initial state shape mismatch");

  for (int run = 0; run < config.runs; ++run) {
    // Documented splitting rule: stream r is seeded from the 32-bit words of
    // the base seed followed by the run index.
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 rng(seq);
    std::mt19937_64* rng_ptr = config.noise ? &rng : nullptr;

    if (config.variant == Variant::Centralized) {
      Eigen::VectorXd w = x0.block(0);
      const double mu = config.mu.mu[0];
      for (long i = 0; i < config.horizon; ++i) {
        w = centralized_step(w, costs, mu, rng_ptr);
        for (int k = 0; k < n; ++k)
          curve.per_node_mse(i, k) += (w - reference.block(k)).squaredNorm();
      }
      continue;
    }

    BlockVector w = x0;
    for (long i = 0; i < config.horizon; ++i) {
      switch (config.variant) {
        case Variant::Atc:
          w = atc_step(w, config.a2, config.mu, costs, rng_ptr);
          break;
        case Variant::Cta:
          w = cta_step(w, config.a1, config.mu, costs, rng_ptr);
          break;
        case Variant::Consensus:
          w = consensus_step(w, config.a1, config.mu, costs, rng_ptr);
          break;
        case Variant::General:
          w = general_diffusion_step(w, config.a1, config.a2, config.c, config.mu,
                                     costs, rng_ptr);
          break;
        case Variant::Centralized:
          break;  // handled above
      }
      for (int k = 0; k < n; ++k)
        curve.per_node_mse(i, k) +=
            (w.block(k) - reference.block(k)).squaredNorm();
    }
  }

  curve.per_node_mse /= static_cast<double>(config.runs);
  curve.network_mse = curve.per_node_mse.rowwise().mean();

  const long window = std::max<long>(
      1, static_cast<long>(std::floor(config.horizon * config.steady_window)));
  curve.steady_per_node =
      curve.per_node_mse.bottomRows(window).colwise().mean().transpose();
  curve.steady_network_mse = curve.network_mse.tail(window).mean();
  return curve;
}

Eigen::VectorXd solve_reference_optimum(const CostList& costs,
                                        const ReferenceOptions& opts) {
  if (costs.empty()) throw std::invalid_argument("solve_reference_optimum: no costs");
  const int m = costs[0]->dim();

  bool all_quadratic = true;
  Eigen::MatrixXd q_sum = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd b_sum = Eigen::VectorXd::Zero(m);
  for (const auto& cost : costs) {
    const auto* quad = dynamic_cast<const QuadraticCost*>(cost.get());
    if (!quad) {
      all_quadratic = false;
      break;
    }
    q_sum += quad->q();
    b_sum += quad->b();
  }
  if (all_quadratic) return q_sum.ldlt().solve(b_sum);

  auto total_value = [&](const Eigen::VectorXd& w) {
    double v = 0.0;
    for (const auto& cost : costs) v += cost->value(w);
    return v;
  };
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
  for (int it = 0; it < opts.max_iters; ++it) {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (const auto& cost : costs) {
      g += cost->gradient(w);
      h += cost->hessian(w);
    }
    if (g.norm() < opts.tol) return w;
    Eigen::VectorXd step = h.ldlt().solve(g);
    if (!step.allFinite()) step = g;  // fall back to plain gradient direction
    // Backtracking on the aggregate value guards the Newton step globally.
    const double v0 = total_value(w);
    double alpha = 1.0;
    while (alpha > 1e-12 && total_value(w - alpha * step) > v0 - 1e-4 * alpha * g.dot(step))
      alpha *= 0.5;
    w -= alpha * step;
  }
  throw std::runtime_error(
      "solve_reference_optimum: no convergence; aggregate cost not strongly convex?");
}

FixedPointResult consensus_fixed_point(const Eigen::MatrixXd& a, const CostList& costs,
                                       const StepSizeProfile& mu, const BlockVector& x0,
                                       const FixedPointOptions& opts) {
  FixedPointResult res;
  BlockVector x = x0;
  for (long it = 1; it <= opts.max_iters; ++it) {
    BlockVector next = consensus_step(x, a, mu, costs, nullptr);
    const double step = block_max_norm(BlockVector(next.data - x.data));
    x = std::move(next);
    if (step < opts.tol) {
      res.w_inf = std::move(x);
      res.iterations = it;
      res.final_step = step;
      return res;
    }
  }
  throw std::runtime_error("consensus_fixed_point: no convergence within max_iters");
}

}  // namespace difopt
