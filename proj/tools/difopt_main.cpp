#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "difopt/analysis.hpp"
#include "difopt/config.hpp"
#include "difopt/csv.hpp"
#include "difopt/strategies.hpp"

namespace {

using namespace difopt;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

struct CommonArgs {
  std::string config_path;
  std::string out_dir;  // empty = keep config value
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  bool quiet = false;
};

// Loads the document and applies the command-line overrides; the hash covers
// the effective configuration, so overridden runs rehash.
ExperimentConfig effective_config(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed) cfg.seed = *args.seed;
  if (args.runs) cfg.runs = *args.runs;
  return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

// The (a1, a2, c) triple a named variant feeds to the diffusion operators.
CombinationSet variant_triple(Variant v, const ExperimentSetup& setup) {
  const int n = setup.topology.n_nodes;
  const Eigen::MatrixXd eye = identity_matrix(n);
  switch (v) {
    case Variant::Atc: return {eye, setup.a, setup.c};
    case Variant::Cta: return {setup.a, eye, setup.c};
    case Variant::Consensus: return {setup.a, eye, identity_matrix(n)};
    case Variant::Centralized: return {eye, eye, eye};
    case Variant::General: return {setup.a1, setup.a2, setup.c};
  }
  throw std::logic_error("unknown variant");
}

StrategyConfig strategy_config(Variant v, const ExperimentSetup& setup,
                               const ExperimentConfig& cfg,
                               const StepSizeProfile& mu) {
  StrategyConfig sc = v == Variant::General
                          ? make_general_strategy(setup.a1, setup.c, setup.a2, mu)
                          : make_strategy(v, setup.a, mu);
  sc.horizon = cfg.horizon;
  sc.runs = cfg.runs;
  sc.seed = cfg.seed;
  sc.steady_window = cfg.steady_window;
  sc.noise = cfg.noise;
  return sc;
}

SteadyStateOperators strategy_operators(Variant v, const ExperimentSetup& setup,
                                        const StepSizeProfile& mu,
                                        const Eigen::VectorXd& w_o) {
  switch (v) {
    case Variant::Consensus:
      return build_consensus_operators(setup.costs, setup.a, mu, w_o);
    case Variant::Centralized:
      return build_centralized_operators(setup.costs, mu.mu[0], w_o);
    default: {
      const CombinationSet triple = variant_triple(v, setup);
      return build_steady_state_operators(setup.costs, triple.a1, triple.a2,
                                          triple.c, mu, w_o);
    }
  }
}

int cmd_validate(const CommonArgs& args) {
  const ExperimentConfig cfg = effective_config(args);
  bool hard_fail = false;
  std::ostringstream report;
  report << "validation report (config_hash=" << config_hash(cfg) << ")\n";

  ExperimentSetup setup;
  try {
    setup = build_setup(cfg);
    report << "[PASS] connectivity: graph is connected\n";
  } catch (const std::exception& e) {
    report << "[FAIL] connectivity: " << e.what() << "\n";
    std::cout << report.str();
    return kExitValidation;
  }

  const int n = setup.topology.n_nodes;
  for (Variant v : cfg.strategies) {
    if (v == Variant::Centralized) continue;
    const CombinationSet triple = variant_triple(v, setup);
    const auto violations = validate_combination_set(triple, setup.topology);
    if (violations.empty()) {
      report << "[PASS] combination matrices (" << variant_name(v)
             << "): left-stochastic a1/a2, right-stochastic c, neighborhood"
             << " sparsity\n";
    } else {
      hard_fail = true;
      for (const auto& viol : violations)
        report << "[FAIL] combination matrices (" << variant_name(v) << "): "
               << viol.matrix << " " << viol.property << ": " << viol.message
               << "\n";
    }
  }

  if (is_regular(setup.a)) {
    report << "[PASS] regularity: some power of A is entrywise positive\n";
  } else {
    hard_fail = true;
    report << "[FAIL] regularity: no power of A is entrywise positive\n";
  }

  const StepSizeProfile mu = make_profile(cfg, n);
  const Eigen::VectorXd limit = step_size_limit_contraction(setup.costs, setup.c);
  bool theorem_ok = true;
  for (int k = 0; k < n; ++k) {
    if (!(mu.mu[k] > 0.0 && mu.mu[k] < limit[k])) {
      theorem_ok = false;
      report << "[FAIL] step-size: node " << k << " violates 0 < mu_k < 2/sigma_{k,max}"
             << " (mu_k=" << mu.mu[k] << ", limit=" << limit[k] << ")\n";
    }
  }
  if (theorem_ok)
    report << "[PASS] step-size: 0 < mu_k < 2/sigma_{k,max} at every node (max limit "
           << limit.minCoeff() << ")\n";
  hard_fail = hard_fail || !theorem_ok;

  const double alpha = aggregate_noise(setup.costs).alpha;
  const Eigen::VectorXd mss = step_size_limit_mss(setup.costs, setup.c, alpha);
  for (int k = 0; k < n; ++k) {
    if (!(mu.mu[k] < mss[k])) {
      report << "[INFO] mean-square stability: mu_" << k << "=" << mu.mu[k]
             << " exceeds the sufficient limit " << mss[k]
             << "; the worst-case perturbation bound does not apply"
             << " (informational)\n";
    }
  }
  if ((mu.mu.array() < mss.array()).all())
    report << "[PASS] mean-square stability: mu below the sufficient limit at"
           << " every node\n";

  for (Variant v : cfg.strategies) {
    if (v == Variant::Consensus || v == Variant::Centralized) continue;
    const CombinationSet triple = variant_triple(v, setup);
    try {
      const Eigen::VectorXd theta =
          left_perron_vector((triple.a1 * triple.a2).transpose());
      const ZeroBiasCheck zb =
          check_zero_bias_condition(theta, triple.a2, mu.omega(), triple.c);
      if (zb.holds)
        report << "[PASS] zero-bias condition (" << variant_name(v)
               << "): theta^T A2^T Omega C^T is a constant row (c0=" << zb.c0
               << ")\n";
      else
        report << "[WARN] zero-bias condition (" << variant_name(v)
               << "): theta^T A2^T Omega C^T is not constant; a bias of order"
               << " O(mu_max) may persist (informational)\n";
    } catch (const std::exception& e) {
      report << "[WARN] zero-bias condition (" << variant_name(v)
             << "): not evaluated: " << e.what() << "\n";
    }
  }

  if (!args.quiet || hard_fail) std::cout << report.str();
  return hard_fail ? kExitValidation : kExitOk;
}

int cmd_simulate(const CommonArgs& args) {
  const ExperimentConfig cfg = effective_config(args);
  const ExperimentSetup setup = build_setup(cfg);
  const int n = setup.topology.n_nodes;
  const int m = cfg.costs.dim;
  const std::string hash = config_hash(cfg);
  const StepSizeProfile mu = make_profile(cfg, n);

  const Eigen::VectorXd w_o = solve_reference_optimum(setup.costs);
  BlockVector reference(m, n);
  for (int k = 0; k < n; ++k) reference.block(k) = w_o;

  CsvDocument merged;
  merged.comments.push_back("config_hash=" + hash);
  merged.columns = {"iteration"};
  std::vector<LearningCurve> curves;

  for (Variant v : cfg.strategies) {
    const StrategyConfig sc = strategy_config(v, setup, cfg, mu);
    LearningCurve curve = run_monte_carlo(sc, setup.costs, reference);
    write_csv(out_path(cfg, "learning_curve_" + variant_name(v) + ".csv"),
              learning_curve_csv(hash, curve));
    if (!args.quiet)
      std::cout << variant_name(v) << ": steady-state network MSE "
                << format_double(curve.steady_network_db()) << " dB over the final "
                << cfg.steady_window * 100 << "% window\n";
    merged.columns.push_back(variant_name(v) + "_db");
    curves.push_back(std::move(curve));
  }

  for (long i = 0; i < cfg.horizon; ++i) {
    std::vector<std::string> row{std::to_string(i)};
    for (const LearningCurve& curve : curves)
      row.push_back(format_double(to_db(curve.network_mse[i])));
    merged.rows.push_back(std::move(row));
  }
  write_csv(out_path(cfg, "learning_curves.csv"), merged);
  if (!args.quiet)
    std::cout << "wrote " << cfg.strategies.size() << " learning-curve files to "
              << cfg.out_dir << "\n";
  return kExitOk;
}

int cmd_sweep(const CommonArgs& args) {
  const ExperimentConfig cfg = effective_config(args);
  const ExperimentSetup setup = build_setup(cfg);
  const int n = setup.topology.n_nodes;
  const int m = cfg.costs.dim;
  const std::string hash = config_hash(cfg);

  const std::vector<double> grid =
      cfg.sweep.empty() ? default_sweep_grid() : cfg.sweep;

  const Eigen::VectorXd w_o = solve_reference_optimum(setup.costs);
  BlockVector reference(m, n);
  for (int k = 0; k < n; ++k) reference.block(k) = w_o;

  PerformanceReport report;
  report.config_hash = hash;

  for (double mu_value : grid) {
    const StepSizeProfile mu = make_profile(mu_value, n);
    for (Variant v : cfg.strategies) {
      SweepRow row;
      row.mu = mu_value;
      row.strategy = variant_name(v);
      try {
        const StrategyConfig sc = strategy_config(v, setup, cfg, mu);
        const LearningCurve curve = run_monte_carlo(sc, setup.costs, reference);
        row.simulated_mse_db = curve.steady_network_db();

        const SteadyStateOperators ops = strategy_operators(v, setup, mu, w_o);
        row.predicted_mse_db = to_db(steady_state_mse_network(ops));
        const BlockVector bias = BlockVector::from_flat(ops.e_w_inf, m);
        row.bias_power_db = to_db(power(bias).mean());
      } catch (const std::exception& e) {
        row.simulated_mse_db = std::numeric_limits<double>::quiet_NaN();
        row.predicted_mse_db = std::numeric_limits<double>::quiet_NaN();
        row.bias_power_db = std::numeric_limits<double>::quiet_NaN();
        row.error = e.what();
      }
      report.rows.push_back(std::move(row));
    }
    if (!args.quiet) std::cout << "mu=" << mu_value << " done\n";
  }

  write_csv(out_path(cfg, "sweep.csv"), sweep_csv(report));
  std::ofstream txt(out_path(cfg, "sweep_report.txt"));
  txt << report_text(report);
  if (!args.quiet) std::cout << report_text(report);
  return kExitOk;
}

int cmd_fixed_point(const CommonArgs& args) {
  const ExperimentConfig cfg = effective_config(args);
  const ExperimentSetup setup = build_setup(cfg);
  const int n = setup.topology.n_nodes;
  const int m = cfg.costs.dim;
  const StepSizeProfile mu = make_profile(cfg, n);

  const Eigen::VectorXd w_o = solve_reference_optimum(setup.costs);
  BlockVector reference(m, n);
  for (int k = 0; k < n; ++k) reference.block(k) = w_o;

  std::ostringstream out;
  out << "fixed-point report (config_hash=" << config_hash(cfg) << ")\n";
  out << "reference minimizer w_o:\n";
  for (int j = 0; j < m; ++j) out << (j ? " " : "  ") << w_o[j];
  out << "\n";

  bool any_failed = false;
  for (Variant v : cfg.strategies) {
    out << "\nstrategy " << variant_name(v) << "\n";
    try {
      BlockVector w_inf(m, n);
      if (v == Variant::Centralized) {
        // Noise-free centralized recursion from zero; converges to w_o.
        Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
        for (long i = 0; i < 1000000; ++i) {
          const Eigen::VectorXd next = centralized_step(w, setup.costs,
                                                        mu.mu[0], nullptr);
          const double step = (next - w).norm();
          w = next;
          if (step < 1e-12) break;
        }
        for (int k = 0; k < n; ++k) w_inf.block(k) = w;
      } else if (v == Variant::Consensus) {
        const FixedPointResult fp = consensus_fixed_point(
            setup.a, setup.costs, mu, BlockVector::zero(m, n));
        w_inf = fp.w_inf;
        out << "  converged in " << fp.iterations
            << " iterations (gamma_inf=" << fp.gamma_inf << ")\n";
      } else {
        const CombinationSet triple = variant_triple(v, setup);
        const GradientDescentSpec spec{setup.costs, triple.c, mu};
        const FixedPointResult fp = find_fixed_point(
            triple.a1, spec, triple.a2, BlockVector::zero(m, n));
        w_inf = fp.w_inf;
        out << "  converged in " << fp.iterations
            << " iterations (gamma_inf=" << fp.gamma_inf << ")\n";
      }

      out << "  per-node fixed point:\n";
      std::istringstream rows(serialize_block_vector(w_inf));
      std::string line;
      while (std::getline(rows, line)) out << "    " << line << "\n";

      BlockVector err = w_inf;
      err.data -= reference.data;
      const double err_power = power(err).mean();
      out << "  error power (1/N)||w_inf - 1(x)w_o||^2 = "
          << format_double(err_power) << "\n";

      if (v != Variant::Centralized) {
        const SteadyStateOperators ops = strategy_operators(v, setup, mu, w_o);
        const Eigen::VectorXd iter_bias = reference.flatten() - w_inf.flatten();
        const double scale = std::max(ops.e_w_inf.norm(), 1e-300);
        out << "  iteration vs. formula relative disagreement = "
            << format_double((iter_bias - ops.e_w_inf).norm() / scale) << "\n";
      }
    } catch (const std::exception& e) {
      any_failed = true;
      out << "  failed: " << e.what() << "\n";
    }
  }

  std::ofstream txt(out_path(cfg, "fixed_point.txt"));
  txt << out.str();
  if (!args.quiet) std::cout << out.str();
  return any_failed ? kExitNumerical : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diffusion strategies for networked multi-objective optimization"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "experiment document (JSON)")
        ->required();
    sub->add_option("--out", args.out_dir, "output directory (overrides config)");
    sub->add_option("--seed", args.seed, "base RNG seed (overrides config)");
    sub->add_option("--runs", args.runs, "Monte Carlo runs (overrides config)");
    sub->add_flag("--quiet", args.quiet, "suppress progress output");
  };

  CLI::App* validate =
      app.add_subcommand("validate", "check the configured network and step-sizes");
  CLI::App* simulate =
      app.add_subcommand("simulate", "Monte Carlo learning curves per strategy");
  CLI::App* sweep = app.add_subcommand(
      "sweep", "steady-state theory-vs-simulation table over step-sizes");
  CLI::App* fixed_point = app.add_subcommand(
      "fixed-point", "noise-free fixed points and their distance to w_o");
  for (CLI::App* sub : {validate, simulate, sweep, fixed_point}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(args);
    if (simulate->parsed()) return cmd_simulate(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (fixed_point->parsed()) return cmd_fixed_point(args);
  } catch (const difopt::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
