#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "difopt/costs.hpp"
#include "difopt/strategies.hpp"
#include "difopt/topology.hpp"

namespace difopt {

// Thrown for any malformed or inconsistent experiment document; the CLI maps
// it to the validation-failure exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TopologySpec {
  std::string builder = "random_geometric";  // random_geometric | complete | ring | line
  int n = 10;
  double radius = 0.65;        // random_geometric only
  std::uint64_t seed = 7;      // random_geometric only
};

struct TaxSpec {
  Eigen::VectorXd h;
  double cap = 0.0;
};

struct QuadItem {
  Eigen::MatrixXd q;
  Eigen::VectorXd b;
  double noise_std = 0.0;
};

// Cost assignment for the network. family "finance": roles are dealt to nodes
// in node order — first counts[0] nodes ExpectedReturn, then counts[1]
// Variance, counts[2] TaxConstraint, counts[3] Budget — unless an explicit
// role_list overrides the deal. Tax parameters are consumed by TaxConstraint
// nodes in order. family "quadratic": one QuadItem per node (a single item is
// replicated to all nodes).
struct CostSpec {
  std::string family = "finance";
  int dim = 5;
  std::vector<int> counts = {3, 4, 2, 1};
  std::vector<std::string> role_list;  // optional explicit per-node roles
  double ridge = 0.05;
  double barrier_t = 10.0, barrier_rho = 0.1, barrier_tau = 0.1;
  double budget_cap = 5.0;
  double bound_margin = 0.1;
  std::optional<Eigen::VectorXd> p_bar;
  std::optional<Eigen::MatrixXd> r_p;
  std::vector<TaxSpec> tax;  // defaults installed at build time
  std::vector<QuadItem> quad;
};

struct ExperimentConfig {
  TopologySpec topology;
  // Builder names: identity | metropolis | uniform. `a` is the matrix the
  // named strategies bind per variant; a1/a2 override it for a general triple.
  std::string a_builder = "metropolis";
  std::string c_builder = "identity";
  std::string a1_builder, a2_builder;  // empty = bound per variant from `a`
  CostSpec costs;
  std::vector<double> mu = {1e-2};  // size 1 = uniform, size N = per node
  std::vector<double> sweep;        // step-size grid; empty = default decade grid
  std::vector<Variant> strategies = {Variant::Atc, Variant::Cta,
                                     Variant::Consensus, Variant::Centralized};
  long horizon = 10000;
  int runs = 200;
  std::uint64_t seed = 12345;
  double steady_window = 0.2;
  bool noise = true;
  std::string out_dir = "out";
};

// Parses the JSON document, applies defaults, and enforces the structural
// invariants (counts partition the node set, sweep positive ascending,
// dimensions consistent). Throws ConfigError with the offending key named.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Normalized round-trippable document of the effective configuration
// (defaults materialized, overrides applied).
std::string dump_config(const ExperimentConfig& config);

// FNV-1a 64-bit hash of dump_config, as 16 lowercase hex digits. Recorded in
// every output header; identical effective configs hash identically.
std::string config_hash(const ExperimentConfig& config);

// Default step-size grid: 1e-3 .. 1e-1, 5 points per decade (11 values).
std::vector<double> default_sweep_grid();

// Materialized network objects shared by every subcommand.
struct ExperimentSetup {
  NetworkTopology topology;
  Eigen::MatrixXd a, c;    // strategy matrix and inclusion weights
  Eigen::MatrixXd a1, a2;  // general-triple overrides (identity if unset)
  CostList costs;
};

Eigen::MatrixXd build_combination(const std::string& builder,
                                  const NetworkTopology& topology);
NetworkTopology build_topology(const TopologySpec& spec);
CostList build_costs(const CostSpec& spec, int n_nodes);
ExperimentSetup build_setup(const ExperimentConfig& config);

// Per-node profile from the config's mu entry (or an explicit scalar for
// sweep points).
StepSizeProfile make_profile(const ExperimentConfig& config, int n_nodes);
StepSizeProfile make_profile(double mu, int n_nodes);

}  // namespace difopt
