#include "difopt/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace difopt {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& why) {
  throw ConfigError("config: '" + key + "': " + why);
}

Eigen::VectorXd to_vector(const json& j, const std::string& key) {
  if (!j.is_array()) fail(key, "expected an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(key, "expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd to_matrix(const json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) fail(key, "expected an array of equal-length rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) fail(key, "expected an array of equal-length rows");
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(key, "expected an array of equal-length rows");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          j[r][c].get<double>();
  }
  return m;
}

json from_vector(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

json from_matrix(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

FinanceRole parse_role(const std::string& name, const std::string& key) {
  if (name == "expected_return") return FinanceRole::ExpectedReturn;
  if (name == "variance") return FinanceRole::Variance;
  if (name == "tax_constraint") return FinanceRole::TaxConstraint;
  if (name == "budget") return FinanceRole::Budget;
  fail(key, "unknown role '" + name +
                "' (expected_return | variance | tax_constraint | budget)");
}

void parse_topology(const json& j, TopologySpec& spec) {
  if (j.contains("builder")) spec.builder = j.at("builder").get<std::string>();
  if (spec.builder != "random_geometric" && spec.builder != "complete" &&
      spec.builder != "ring" && spec.builder != "line")
    fail("topology.builder",
         "unknown builder '" + spec.builder +
             "' (random_geometric | complete | ring | line)");
  if (j.contains("n")) spec.n = j.at("n").get<int>();
  if (spec.n < 1) fail("topology.n", "node count must be positive");
  if (j.contains("radius")) spec.radius = j.at("radius").get<double>();
  if (spec.radius <= 0.0) fail("topology.radius", "must be positive");
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
}

void parse_costs(const json& j, CostSpec& spec) {
  if (j.contains("family")) spec.family = j.at("family").get<std::string>();
  if (spec.family != "finance" && spec.family != "quadratic")
    fail("costs.family", "unknown family '" + spec.family + "' (finance | quadratic)");
  if (j.contains("dim")) spec.dim = j.at("dim").get<int>();
  if (spec.dim < 1) fail("costs.dim", "dimension must be positive");
  if (j.contains("counts")) spec.counts = j.at("counts").get<std::vector<int>>();
  if (j.contains("roles")) spec.role_list = j.at("roles").get<std::vector<std::string>>();
  if (j.contains("ridge")) spec.ridge = j.at("ridge").get<double>();
  if (j.contains("barrier")) {
    const json& b = j.at("barrier");
    if (b.contains("t")) spec.barrier_t = b.at("t").get<double>();
    if (b.contains("rho")) spec.barrier_rho = b.at("rho").get<double>();
    if (b.contains("tau")) spec.barrier_tau = b.at("tau").get<double>();
  }
  if (j.contains("budget_cap")) spec.budget_cap = j.at("budget_cap").get<double>();
  if (j.contains("bound_margin")) spec.bound_margin = j.at("bound_margin").get<double>();
  if (j.contains("p_bar")) spec.p_bar = to_vector(j.at("p_bar"), "costs.p_bar");
  if (j.contains("r_p")) spec.r_p = to_matrix(j.at("r_p"), "costs.r_p");
  if (j.contains("tax")) {
    for (const json& t : j.at("tax")) {
      TaxSpec tax;
      tax.h = to_vector(t.at("h"), "costs.tax.h");
      tax.cap = t.at("cap").get<double>();
      spec.tax.push_back(std::move(tax));
    }
  }
  if (j.contains("items")) {
    for (const json& q : j.at("items")) {
      QuadItem item;
      item.q = to_matrix(q.at("q"), "costs.items.q");
      item.b = to_vector(q.at("b"), "costs.items.b");
      if (q.contains("noise_std")) item.noise_std = q.at("noise_std").get<double>();
      spec.quad.push_back(std::move(item));
    }
  }
}

void check_builder_name(const std::string& name, const std::string& key) {
  if (name != "identity" && name != "metropolis" && name != "uniform")
    fail(key, "unknown builder '" + name + "' (identity | metropolis | uniform)");
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("topology")) parse_topology(j.at("topology"), cfg.topology);
    if (j.contains("combination")) {
      const json& c = j.at("combination");
      if (c.contains("a")) cfg.a_builder = c.at("a").get<std::string>();
      if (c.contains("c")) cfg.c_builder = c.at("c").get<std::string>();
      if (c.contains("a1")) cfg.a1_builder = c.at("a1").get<std::string>();
      if (c.contains("a2")) cfg.a2_builder = c.at("a2").get<std::string>();
    }
    check_builder_name(cfg.a_builder, "combination.a");
    check_builder_name(cfg.c_builder, "combination.c");
    if (!cfg.a1_builder.empty()) check_builder_name(cfg.a1_builder, "combination.a1");
    if (!cfg.a2_builder.empty()) check_builder_name(cfg.a2_builder, "combination.a2");
    if (j.contains("costs")) parse_costs(j.at("costs"), cfg.costs);
    if (j.contains("step_size")) {
      const json& s = j.at("step_size");
      if (s.contains("mu")) {
        if (s.at("mu").is_array())
          cfg.mu = s.at("mu").get<std::vector<double>>();
        else
          cfg.mu = {s.at("mu").get<double>()};
      }
      if (s.contains("sweep")) cfg.sweep = s.at("sweep").get<std::vector<double>>();
    }
    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const json& s : j.at("strategies"))
        cfg.strategies.push_back(parse_variant(s.get<std::string>()));
    }
    if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<long>();
    if (j.contains("runs")) cfg.runs = j.at("runs").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("steady_window"))
      cfg.steady_window = j.at("steady_window").get<double>();
    if (j.contains("noise")) cfg.noise = j.at("noise").get<bool>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  const int n = cfg.topology.n;
  if (cfg.costs.family == "finance") {
    if (!cfg.costs.role_list.empty()) {
      if (static_cast<int>(cfg.costs.role_list.size()) != n)
        fail("costs.roles", "explicit role list must name all " + std::to_string(n) +
                                " nodes");
      for (const std::string& r : cfg.costs.role_list) parse_role(r, "costs.roles");
    } else {
      long total = 0;
      for (int c : cfg.costs.counts) {
        if (c < 0) fail("costs.counts", "counts must be nonnegative");
        total += c;
      }
      if (cfg.costs.counts.size() != 4)
        fail("costs.counts", "expected four role counts");
      if (total != n)
        fail("costs.counts", "role counts sum to " + std::to_string(total) +
                                 " but the network has " + std::to_string(n) +
                                 " nodes (must partition the node set)");
    }
  } else {
    if (cfg.costs.quad.empty())
      fail("costs.items", "quadratic family requires at least one item");
    if (cfg.costs.quad.size() != 1 &&
        static_cast<int>(cfg.costs.quad.size()) != n)
      fail("costs.items", "expected 1 or " + std::to_string(n) + " items");
    for (const QuadItem& item : cfg.costs.quad) {
      if (item.q.rows() != cfg.costs.dim || item.q.cols() != cfg.costs.dim)
        fail("costs.items.q", "matrix must be dim x dim");
      if (item.b.size() != cfg.costs.dim) fail("costs.items.b", "vector must be dim");
    }
  }
  if (cfg.mu.size() != 1 && static_cast<int>(cfg.mu.size()) != n)
    fail("step_size.mu", "expected a scalar or one value per node");
  for (double m : cfg.mu)
    if (!(m > 0.0)) fail("step_size.mu", "step-sizes must be positive");
  for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
    if (!(cfg.sweep[i] > 0.0)) fail("step_size.sweep", "values must be positive");
    if (i > 0 && cfg.sweep[i] <= cfg.sweep[i - 1])
      fail("step_size.sweep", "values must be strictly ascending");
  }
  if (cfg.strategies.empty()) fail("strategies", "at least one strategy required");
  if (cfg.horizon < 1) fail("horizon", "must be positive");
  if (cfg.runs < 1) fail("runs", "must be positive");
  if (!(cfg.steady_window > 0.0 && cfg.steady_window <= 1.0))
    fail("steady_window", "must lie in (0, 1]");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  json j;
  j["topology"] = {{"builder", cfg.topology.builder},
                   {"n", cfg.topology.n},
                   {"radius", cfg.topology.radius},
                   {"seed", cfg.topology.seed}};
  json comb = {{"a", cfg.a_builder}, {"c", cfg.c_builder}};
  if (!cfg.a1_builder.empty()) comb["a1"] = cfg.a1_builder;
  if (!cfg.a2_builder.empty()) comb["a2"] = cfg.a2_builder;
  j["combination"] = comb;
  json costs;
  costs["family"] = cfg.costs.family;
  costs["dim"] = cfg.costs.dim;
  if (cfg.costs.family == "finance") {
    if (!cfg.costs.role_list.empty())
      costs["roles"] = cfg.costs.role_list;
    else
      costs["counts"] = cfg.costs.counts;
    costs["ridge"] = cfg.costs.ridge;
    costs["barrier"] = {{"t", cfg.costs.barrier_t},
                        {"rho", cfg.costs.barrier_rho},
                        {"tau", cfg.costs.barrier_tau}};
    costs["budget_cap"] = cfg.costs.budget_cap;
    costs["bound_margin"] = cfg.costs.bound_margin;
    if (cfg.costs.p_bar) costs["p_bar"] = from_vector(*cfg.costs.p_bar);
    if (cfg.costs.r_p) costs["r_p"] = from_matrix(*cfg.costs.r_p);
    if (!cfg.costs.tax.empty()) {
      json tax = json::array();
      for (const TaxSpec& t : cfg.costs.tax)
        tax.push_back({{"h", from_vector(t.h)}, {"cap", t.cap}});
      costs["tax"] = tax;
    }
  } else {
    json items = json::array();
    for (const QuadItem& q : cfg.costs.quad)
      items.push_back({{"q", from_matrix(q.q)},
                       {"b", from_vector(q.b)},
                       {"noise_std", q.noise_std}});
    costs["items"] = items;
  }
  j["costs"] = costs;
  json step;
  if (cfg.mu.size() == 1)
    step["mu"] = cfg.mu[0];
  else
    step["mu"] = cfg.mu;
  if (!cfg.sweep.empty()) step["sweep"] = cfg.sweep;
  j["step_size"] = step;
  json strategies = json::array();
  for (Variant v : cfg.strategies) strategies.push_back(variant_name(v));
  j["strategies"] = strategies;
  j["horizon"] = cfg.horizon;
  j["runs"] = cfg.runs;
  j["seed"] = cfg.seed;
  j["steady_window"] = cfg.steady_window;
  j["noise"] = cfg.noise;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The output directory is run plumbing, not experiment identity: the same
  // document written to two locations must hash identically.
  ExperimentConfig canonical = cfg;
  canonical.out_dir = "out";
  const std::string doc = dump_config(canonical);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : doc) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::vector<double> default_sweep_grid() {
  std::vector<double> grid;
  for (int j = 0; j <= 10; ++j) grid.push_back(std::pow(10.0, -3.0 + 0.2 * j));
  return grid;
}

NetworkTopology build_topology(const TopologySpec& spec) {
  const int n = spec.n;
  if (spec.builder == "random_geometric")
    return build_random_geometric(n, spec.radius, spec.seed);
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> adj(n, n);
  adj.setConstant(false);
  for (int k = 0; k < n; ++k) adj(k, k) = true;
  if (spec.builder == "complete") {
    adj.setConstant(true);
  } else if (spec.builder == "ring") {
    for (int k = 0; k < n; ++k) {
      adj(k, (k + 1) % n) = true;
      adj((k + 1) % n, k) = true;
    }
  } else {  // line
    for (int k = 0; k + 1 < n; ++k) {
      adj(k, k + 1) = true;
      adj(k + 1, k) = true;
    }
  }
  return make_topology(adj);
}

Eigen::MatrixXd build_combination(const std::string& builder,
                                  const NetworkTopology& topology) {
  if (builder == "identity") return identity_matrix(topology.n_nodes);
  if (builder == "metropolis") return metropolis_matrix(topology);
  if (builder == "uniform") return uniform_neighborhood_matrix(topology);
  throw ConfigError("config: unknown combination builder '" + builder + "'");
}

CostList build_costs(const CostSpec& spec, int n_nodes) {
  CostList costs;
  if (spec.family == "quadratic") {
    for (int k = 0; k < n_nodes; ++k) {
      const QuadItem& item =
          spec.quad.size() == 1 ? spec.quad[0]
                                : spec.quad[static_cast<std::size_t>(k)];
      costs.push_back(
          std::make_shared<QuadraticCost>(item.q, item.b, item.noise_std));
    }
    return costs;
  }

  std::vector<FinanceRole> roles;
  if (!spec.role_list.empty()) {
    for (const std::string& r : spec.role_list)
      roles.push_back(parse_role(r, "costs.roles"));
  } else {
    const FinanceRole order[4] = {FinanceRole::ExpectedReturn, FinanceRole::Variance,
                                  FinanceRole::TaxConstraint, FinanceRole::Budget};
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < spec.counts[static_cast<std::size_t>(i)]; ++c)
        roles.push_back(order[i]);
  }

  // Default tax directions: ascending then descending ramps with caps 2 and 3;
  // cycled if more tax nodes are configured than parameter sets.
  std::vector<TaxSpec> tax = spec.tax;
  if (tax.empty()) {
    TaxSpec t1, t2;
    t1.h = Eigen::VectorXd::LinSpaced(spec.dim, 1.0, spec.dim);
    t1.cap = 2.0;
    t2.h = Eigen::VectorXd::LinSpaced(spec.dim, spec.dim, 1.0);
    t2.cap = 3.0;
    tax = {t1, t2};
  }
  for (const TaxSpec& t : tax)
    if (t.h.size() != spec.dim)
      throw ConfigError("config: 'costs.tax.h': vector must be dim");

  std::size_t next_tax = 0;
  for (FinanceRole role : roles) {
    FinanceParams p;
    p.dim = spec.dim;
    p.barrier = default_barrier(spec.barrier_t, spec.barrier_rho, spec.barrier_tau);
    p.ridge = spec.ridge;
    if (spec.p_bar) p.p_bar = *spec.p_bar;
    if (spec.r_p) p.r_p = *spec.r_p;
    p.budget_cap = spec.budget_cap;
    p.bound_margin = spec.bound_margin;
    if (role == FinanceRole::TaxConstraint) {
      const TaxSpec& t = tax[next_tax % tax.size()];
      ++next_tax;
      p.h = t.h;
      p.h_cap = t.cap;
    }
    costs.push_back(std::make_shared<FinanceCost>(role, std::move(p)));
  }
  return costs;
}

ExperimentSetup build_setup(const ExperimentConfig& cfg) {
  ExperimentSetup setup;
  setup.topology = build_topology(cfg.topology);
  setup.a = build_combination(cfg.a_builder, setup.topology);
  setup.c = build_combination(cfg.c_builder, setup.topology);
  setup.a1 = cfg.a1_builder.empty() ? identity_matrix(setup.topology.n_nodes)
                                    : build_combination(cfg.a1_builder, setup.topology);
  setup.a2 = cfg.a2_builder.empty() ? identity_matrix(setup.topology.n_nodes)
                                    : build_combination(cfg.a2_builder, setup.topology);
  setup.costs = build_costs(cfg.costs, setup.topology.n_nodes);
  return setup;
}

StepSizeProfile make_profile(const ExperimentConfig& cfg, int n_nodes) {
  if (cfg.mu.size() == 1) return StepSizeProfile::uniform(cfg.mu[0], n_nodes);
  Eigen::VectorXd mu(n_nodes);
  for (int k = 0; k < n_nodes; ++k) mu[k] = cfg.mu[static_cast<std::size_t>(k)];
  return StepSizeProfile(mu);
}

StepSizeProfile make_profile(double mu, int n_nodes) {
  return StepSizeProfile::uniform(mu, n_nodes);
}

}  // namespace difopt
