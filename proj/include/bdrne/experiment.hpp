// Copyright 2026 The bdrne Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Configuration-driven pricing study: model variants over sample-size and
// cost sweeps, result files, and re-certification of recorded equilibria.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bdrne/equilibrium.hpp"
#include "bdrne/errors.hpp"
#include "bdrne/mnl.hpp"
#include "bdrne/stochastics.hpp"

namespace bdrne::experiment {

using json = nlohmann::json;

struct CostGrid {
  std::size_t firm = 0;
  double from = 0.0;
  double to = 0.0;
  double step = 1.0;
};

struct ExperimentConfig {
  // market
  std::vector<Vector> characteristics;
  Vector costs;
  bool outside_option = true;
  // truth
  double shape = 15.0;
  std::vector<Vector> theta_star;  // per firm
  // prior
  std::vector<std::vector<GammaHyper>> prior;  // per firm, per dimension
  // sweep
  Vector eps;
  Vector eps_hat{0.1};
  std::vector<std::size_t> sample_sizes;
  std::vector<Vector> cost_list;  // resolved cost vectors
  std::optional<CostGrid> cost_grid;
  bool explicit_costs = false;
  std::size_t replications = 1;
  // solver
  std::size_t n_theta = 100;
  std::size_t n_xi = 100;
  double tau = 1e-10;
  std::size_t max_iter = 200;
  double gap_tol = 1e-4;
  std::size_t reference_n = 200;
  std::size_t reference_n_xi = 20000;
  double anchor_tail = 0.5;
  bool references = true;
  // seeds
  std::uint64_t data_seed = 0;
  std::uint64_t scenario_seed = 0;
  // output
  std::string out_dir = "results";
  std::vector<std::string> formats{"csv", "json", "plotdata"};

  std::size_t n_firms() const { return costs.size(); }

  mnl::MNLMarket market(const Vector& c) const {
    mnl::MNLMarket m;
    m.characteristics = characteristics;
    m.costs = c;
    m.outside_option = outside_option;
    m.validate();
    return m;
  }

  json manifest() const;
};

namespace detail {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j_.items())
      if (!ok.count(k)) throw ConfigError("unknown field '" + child(k) + "'");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  const json& at(const std::string& k) const {
    if (!j_.contains(k)) throw ConfigError("missing required field '" + child(k) + "'");
    return j_.at(k);
  }

  Reader object(const std::string& k) const { return Reader(at(k), child(k)); }

  double number(const std::string& k) const { return as_number(at(k), child(k)); }
  double number(const std::string& k, double fallback) const { return has(k) ? number(k) : fallback; }

  std::size_t count(const std::string& k) const { return as_count(at(k), child(k)); }
  std::size_t count(const std::string& k, std::size_t fallback) const {
    return has(k) ? count(k) : fallback;
  }

  std::uint64_t seed(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError("field '" + child(k) + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError("field '" + child(k) + "' must be a boolean");
    return j_.at(k).get<bool>();
  }

  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) throw ConfigError("field '" + child(k) + "' must be a string");
    return j_.at(k).get<std::string>();
  }

  Vector numbers(const std::string& k) const { return as_numbers(at(k), child(k)); }

  std::vector<Vector> matrix(const std::string& k) const {
    const json& v = at(k);
    if (!v.is_array()) throw ConfigError("field '" + child(k) + "' must be an array of arrays");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_numbers(v[i], child(k) + "[" + std::to_string(i) + "]"));
    return out;
  }

  std::string child(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError("field '" + path + "' must be a number");
    return v.get<double>();
  }

  static std::size_t as_count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ConfigError("field '" + path + "' must be a nonnegative integer");
    return v.get<std::size_t>();
  }

  static Vector as_numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError("field '" + path + "' must be an array of numbers");
    Vector out;
    for (std::size_t i = 0; i < v.size(); ++i)
      out.push_back(as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
};

inline std::vector<Vector> expand_cost_grid(const CostGrid& g, const Vector& base) {
  if (g.firm >= base.size()) throw ConfigError("sweep.cost_grid.firm out of range");
  if (!(g.step > 0.0) || !(g.to >= g.from)) throw ConfigError("sweep.cost_grid needs step > 0 and to >= from");
  const auto n = static_cast<std::size_t>(std::floor((g.to - g.from) / g.step + 1e-9)) + 1;
  std::vector<Vector> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector c = base;
    c[g.firm] = g.from + g.step * static_cast<double>(i);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

/// Validates a parsed configuration tree and applies defaults.
inline ExperimentConfig parse_config(const json& root) {
  using detail::Reader;
  ExperimentConfig cfg;
  const Reader top(root, "");
  top.allow({"market", "truth", "prior", "sweep", "solver", "seeds", "output"});

  {
    const Reader m = top.object("market");
    m.allow({"x", "costs", "outside_option"});
    const json& x = m.at("x");
    if (!x.is_array() || x.empty()) throw ConfigError("field 'market.x' must be a nonempty array");
    if (x.front().is_array()) {
      cfg.characteristics = m.matrix("x");
    } else {
      for (double v : m.numbers("x")) cfg.characteristics.push_back({v});
    }
    cfg.costs = m.numbers("costs");
    cfg.outside_option = m.boolean("outside_option", true);
    if (cfg.costs.size() != cfg.characteristics.size())
      throw ConfigError("'market.costs' and 'market.x' must have one entry per firm");
  }
  const std::size_t n = cfg.n_firms();
  const std::size_t dim = cfg.characteristics.front().size() + 1;
  {
    const Reader t = top.object("truth");
    t.allow({"theta", "shape"});
    cfg.shape = t.number("shape", 15.0);
    const json& th = t.at("theta");
    if (th.is_array() && !th.empty() && th.front().is_array()) {
      cfg.theta_star = t.matrix("theta");
    } else {
      cfg.theta_star.assign(n, t.numbers("theta"));
    }
    if (cfg.theta_star.size() != n) throw ConfigError("'truth.theta' needs one entry per firm");
    for (const auto& th_j : cfg.theta_star)
      if (th_j.size() != dim) throw ConfigError("'truth.theta' entries must have taste dimension + 1 components");
  }
  {
    const Reader p = top.object("prior");
    p.allow({"a", "b"});
    const auto a = p.matrix("a");
    const auto b = p.matrix("b");
    if (a.size() != n || b.size() != n) throw ConfigError("'prior.a' and 'prior.b' need one entry per firm");
    for (std::size_t j = 0; j < n; ++j) {
      if (a[j].size() != dim || b[j].size() != dim)
        throw ConfigError("prior entries must have taste dimension + 1 components");
      std::vector<GammaHyper> h;
      for (std::size_t d = 0; d < dim; ++d) h.push_back({a[j][d], b[j][d]});
      cfg.prior.push_back(std::move(h));
    }
  }
  {
    const Reader s = top.object("sweep");
    s.allow({"eps", "eps_hat", "N", "costs", "cost_grid", "replications"});
    cfg.eps = s.numbers("eps");
    if (s.has("eps_hat")) cfg.eps_hat = s.numbers("eps_hat");
    const json& ns = s.at("N");
    if (!ns.is_array()) throw ConfigError("field 'sweep.N' must be an array");
    for (std::size_t i = 0; i < ns.size(); ++i)
      cfg.sample_sizes.push_back(Reader::as_count(ns[i], "sweep.N[" + std::to_string(i) + "]"));
    if (s.has("costs") && s.has("cost_grid"))
      throw ConfigError("'sweep.costs' and 'sweep.cost_grid' are mutually exclusive");
    if (s.has("costs")) {
      cfg.cost_list = s.matrix("costs");
      cfg.explicit_costs = true;
    } else if (s.has("cost_grid")) {
      const Reader g = s.object("cost_grid");
      g.allow({"firm", "from", "to", "step"});
      cfg.cost_grid = CostGrid{g.count("firm"), g.number("from"), g.number("to"), g.number("step")};
      cfg.cost_list = detail::expand_cost_grid(*cfg.cost_grid, cfg.costs);
    } else {
      cfg.cost_list = {cfg.costs};
    }
    cfg.replications = s.count("replications", 1);
    if (cfg.eps.empty()) throw ConfigError("'sweep.eps' must be nonempty");
    if (cfg.eps_hat.empty()) throw ConfigError("'sweep.eps_hat' must be nonempty");
    if (cfg.sample_sizes.empty()) throw ConfigError("'sweep.N' must be nonempty");
    if (cfg.cost_list.empty()) throw ConfigError("'sweep.costs' must be nonempty");
    if (cfg.replications == 0) throw ConfigError("'sweep.replications' must be >= 1");
    for (double e : cfg.eps)
      if (!(e >= 0.0)) throw ConfigError("'sweep.eps' entries must be >= 0");
    for (double e : cfg.eps_hat)
      if (!(e >= 0.0)) throw ConfigError("'sweep.eps_hat' entries must be >= 0");
    for (std::size_t N : cfg.sample_sizes)
      if (N == 0) throw ConfigError("'sweep.N' entries must be >= 1");
    for (const auto& c : cfg.cost_list)
      if (c.size() != n) throw ConfigError("'sweep.costs' entries need one cost per firm");
  }
  if (top.has("solver")) {
    const Reader s = top.object("solver");
    s.allow({"n_theta", "n_xi", "tau", "max_iter", "gap_tol", "reference_N", "reference_n_xi",
             "anchor_tail", "references"});
    cfg.n_theta = s.count("n_theta", cfg.n_theta);
    cfg.n_xi = s.count("n_xi", cfg.n_xi);
    cfg.tau = s.number("tau", cfg.tau);
    cfg.max_iter = s.count("max_iter", cfg.max_iter);
    cfg.gap_tol = s.number("gap_tol", cfg.gap_tol);
    cfg.reference_n = s.count("reference_N", cfg.reference_n);
    cfg.reference_n_xi = s.count("reference_n_xi", cfg.reference_n_xi);
    cfg.anchor_tail = s.number("anchor_tail", cfg.anchor_tail);
    cfg.references = s.boolean("references", cfg.references);
  }
  if (cfg.n_theta == 0 || cfg.n_xi == 0 || cfg.reference_n == 0 || cfg.reference_n_xi == 0)
    throw ConfigError("solver sample counts must be >= 1");
  if (!(cfg.tau > 0.0) || cfg.max_iter == 0 || !(cfg.gap_tol > 0.0))
    throw ConfigError("solver tolerances must be positive");
  if (!(cfg.anchor_tail > 0.0 && cfg.anchor_tail <= 0.5))
    throw ConfigError("'solver.anchor_tail' must lie in (0, 0.5]");
  {
    const Reader s = top.object("seeds");
    s.allow({"data", "scenario"});
    cfg.data_seed = s.seed("data");
    cfg.scenario_seed = s.seed("scenario");
  }
  if (top.has("output")) {
    const Reader o = top.object("output");
    o.allow({"dir", "formats"});
    cfg.out_dir = o.string("dir", cfg.out_dir);
    if (o.has("formats")) {
      const json& f = o.at("formats");
      if (!f.is_array()) throw ConfigError("field 'output.formats' must be an array");
      cfg.formats.clear();
      for (const auto& v : f) {
        if (!v.is_string()) throw ConfigError("field 'output.formats' must hold strings");
        const auto s = v.get<std::string>();
        if (s != "csv" && s != "json" && s != "plotdata")
          throw ConfigError("unknown output format '" + s + "' in 'output.formats'");
        cfg.formats.push_back(s);
      }
    }
  }
  // Catch inconsistent market/prior early.
  for (const auto& c : cfg.cost_list) (void)cfg.market(c);
  for (std::size_t j = 0; j < n; ++j) (void)PosteriorState::from_prior(cfg.shape, cfg.prior[j]);
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
  }
  return parse_config(root);
}

inline json ExperimentConfig::manifest() const {
  json prior_a = json::array(), prior_b = json::array();
  for (const auto& firm : prior) {
    json a = json::array(), b = json::array();
    for (const auto& h : firm) {
      a.push_back(h.a);
      b.push_back(h.b);
    }
    prior_a.push_back(a);
    prior_b.push_back(b);
  }
  json sweep = {{"eps", eps}, {"eps_hat", eps_hat}, {"N", sample_sizes},
                {"replications", replications}};
  if (cost_grid) {
    sweep["cost_grid"] = {{"firm", cost_grid->firm}, {"from", cost_grid->from},
                          {"to", cost_grid->to}, {"step", cost_grid->step}};
  } else {
    sweep["costs"] = cost_list;
  }
  return {
      {"market", {{"x", characteristics}, {"costs", costs}, {"outside_option", outside_option}}},
      {"truth", {{"theta", theta_star}, {"shape", shape}}},
      {"prior", {{"a", prior_a}, {"b", prior_b}}},
      {"sweep", sweep},
      {"solver",
       {{"n_theta", n_theta}, {"n_xi", n_xi}, {"tau", tau}, {"max_iter", max_iter},
        {"gap_tol", gap_tol}, {"reference_N", reference_n}, {"reference_n_xi", reference_n_xi},
        {"anchor_tail", anchor_tail}, {"references", references}}},
      {"seeds", {{"data", data_seed}, {"scenario", scenario_seed}}},
      {"output", {{"dir", out_dir}, {"formats", formats}}},
  };
}

// ---------------------------------------------------------------------------

/// Which equilibrium a result row holds.
enum class RowKind { bdrne, bane, drne_empirical, empirical_ne, true_empirical, true_plugin };

inline const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::bdrne: return "bdrne";
    case RowKind::bane: return "bane";
    case RowKind::drne_empirical: return "drne_empirical";
    case RowKind::empirical_ne: return "empirical_ne";
    case RowKind::true_empirical: return "true_empirical";
    case RowKind::true_plugin: return "true_plugin";
  }
  return "?";
}

inline RowKind row_kind_from(const std::string& s) {
  for (auto k : {RowKind::bdrne, RowKind::bane, RowKind::drne_empirical, RowKind::empirical_ne,
                 RowKind::true_empirical, RowKind::true_plugin})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown variant '" + s + "'");
}

struct RowKey {
  RowKind kind;
  double eps = 0.0;
  std::size_t N = 0;
  Vector costs;
  std::size_t replication = 0;
};

struct ResultRow {
  RowKey key;
  Vector prices;
  Vector values;
  double gap = 0.0;
  std::size_t iterations = 0;
  std::string status;
  std::uint64_t seed = 0;
  bool interval_flag = false;
};

/// Seeds of replication r: fixed offsets from the configured masters.
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t r) {
  return master + 0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(r);
}

/// Observation stream of each firm: the first N draws form the size-N data set.
inline std::vector<std::vector<Vector>> draw_data(const ExperimentConfig& cfg, std::size_t replication,
                                                  std::size_t count) {
  const auto family = ParametricFamily::gamma(cfg.shape, cfg.characteristics.front().size() + 1);
  std::vector<std::vector<Vector>> out;
  for (std::size_t j = 0; j < cfg.n_firms(); ++j) {
    Rng rng(mnl::firm_seed(replication_seed(cfg.data_seed, replication), j));
    out.push_back(sample(family, cfg.theta_star[j], rng, count));
  }
  return out;
}

inline std::size_t data_stream_length(const ExperimentConfig& cfg) {
  std::size_t m = cfg.reference_n;
  for (std::size_t N : cfg.sample_sizes) m = std::max(m, N);
  return m;
}

/// Game of one result row; the same construction serves solving and
/// re-certification.
inline GameInstance build_row_game(const ExperimentConfig& cfg, const RowKey& key,
                                   const std::vector<std::vector<Vector>>& data) {
  const auto market = cfg.market(key.costs);
  const std::uint64_t seed = replication_seed(cfg.scenario_seed, key.replication);
  const std::size_t n = cfg.n_firms();

  if (key.kind == RowKind::true_plugin) {
    mnl::BuildOptions opt{cfg.anchor_tail, {}};
    return mnl::build_plugin_game(market, cfg.shape, cfg.theta_star,
                                  std::vector<AmbiguitySpec>(n, AmbiguitySpec{0.0}),
                                  cfg.reference_n_xi, seed, opt);
  }

  const std::size_t N = key.N;
  std::vector<PosteriorState> posteriors;
  mnl::BuildOptions opt{cfg.anchor_tail, {}};
  for (std::size_t j = 0; j < n; ++j) {
    if (data[j].size() < N) throw ConfigError("data stream shorter than requested sample size");
    std::vector<Vector> first(data[j].begin(), data[j].begin() + static_cast<std::ptrdiff_t>(N));
    posteriors.push_back(posterior_update(PosteriorState::from_prior(cfg.shape, cfg.prior[j]), first));
    opt.raw_data.push_back(std::move(first));
  }
  const double radius = key.kind == RowKind::bdrne ? key.eps : 0.0;
  GameInstance base = mnl::build_game(market, posteriors,
                                      std::vector<AmbiguitySpec>(n, AmbiguitySpec{radius}),
                                      cfg.n_theta, cfg.n_xi, seed, opt);
  switch (key.kind) {
    case RowKind::bdrne: return base;
    case RowKind::bane: return build_variant(base, Variant::bane);
    case RowKind::drne_empirical: return build_variant(base, Variant::drne_empirical, key.eps);
    case RowKind::empirical_ne:
    case RowKind::true_empirical: return build_variant(base, Variant::empirical_ne);
    case RowKind::true_plugin: break;
  }
  return base;
}

struct StudyFilter {
  std::optional<std::string> only_variant;
  std::optional<std::size_t> only_N;
};

/// Row keys in output order: variant (bdrne per eps, bane, drne_empirical per
/// eps_hat, empirical_ne, then the two references), then replication, cost
/// point and sample size.
inline std::vector<RowKey> plan_rows(const ExperimentConfig& cfg, const StudyFilter& filter = {}) {
  std::vector<std::pair<RowKind, double>> sweep_variants;
  for (double e : cfg.eps) sweep_variants.emplace_back(RowKind::bdrne, e);
  sweep_variants.emplace_back(RowKind::bane, 0.0);
  for (double e : cfg.eps_hat) sweep_variants.emplace_back(RowKind::drne_empirical, e);
  sweep_variants.emplace_back(RowKind::empirical_ne, 0.0);

  auto wanted = [&](RowKind k) {
    return !filter.only_variant || *filter.only_variant == to_string(k);
  };
  std::vector<RowKey> keys;
  for (const auto& [kind, e] : sweep_variants) {
    if (!wanted(kind)) continue;
    for (std::size_t r = 0; r < cfg.replications; ++r)
      for (const auto& c : cfg.cost_list)
        for (std::size_t N : cfg.sample_sizes)
          if (!filter.only_N || *filter.only_N == N) keys.push_back({kind, e, N, c, r});
  }
  if (cfg.references && !filter.only_N) {
    for (RowKind kind : {RowKind::true_empirical, RowKind::true_plugin}) {
      if (!wanted(kind)) continue;
      for (std::size_t r = 0; r < cfg.replications; ++r)
        for (const auto& c : cfg.cost_list)
          keys.push_back({kind, 0.0, kind == RowKind::true_empirical ? cfg.reference_n : 0, c, r});
    }
  }
  return keys;
}

inline ResultRow solve_row(const ExperimentConfig& cfg, const RowKey& key,
                           const std::vector<std::vector<Vector>>& data) {
  ResultRow row;
  row.key = key;
  row.seed = replication_seed(cfg.scenario_seed, key.replication);
  try {
    const GameInstance game = build_row_game(cfg, key, data);
    SolverOptions opt;
    opt.tol = cfg.tau;
    opt.max_iter = cfg.max_iter;
    const auto res = gauss_seidel(game, opt);
    for (const auto& a : res.point) row.prices.push_back(a[0]);
    row.values = res.values;
    row.gap = res.gap;
    row.iterations = res.iterations;
    row.status = to_string(res.status);
    row.interval_flag = res.interval_flagged();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    row.prices.assign(cfg.n_firms(), std::nan(""));
    row.values.assign(cfg.n_firms(), std::nan(""));
    row.gap = std::nan("");
  }
  return row;
}

/// Solves every planned row. One data stream per firm and replication is
/// shared by all variants; solver failures are recorded in the row status.
inline std::vector<ResultRow> run_study(const ExperimentConfig& cfg, const StudyFilter& filter = {}) {
  const auto keys = plan_rows(cfg, filter);
  std::map<std::size_t, std::vector<std::vector<Vector>>> data;
  std::vector<ResultRow> rows;
  rows.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = data.find(key.replication);
    if (it == data.end())
      it = data.emplace(key.replication, draw_data(cfg, key.replication, data_stream_length(cfg))).first;
    rows.push_back(solve_row(cfg, key, it->second));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output.

namespace detail {

inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string label(const RowKey& k) {
  std::string s = to_string(k.kind);
  if (k.kind == RowKind::bdrne || k.kind == RowKind::drne_empirical) {
    std::ostringstream os;
    os << k.eps;
    s += "_eps" + os.str();
  }
  return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + p.string() + "'");
}

}  // namespace detail

inline std::string csv_header(std::size_t n) {
  std::string h = "variant,eps,N";
  for (const char* col : {"c", "p", "v"})
    for (std::size_t j = 1; j <= n; ++j) h += "," + std::string(col) + std::to_string(j);
  return h + ",gap,iters,status,seed\n";
}

inline std::string to_csv(const std::vector<ResultRow>& rows, std::size_t n_firms) {
  std::string out = csv_header(n_firms);
  for (const auto& r : rows) {
    out += to_string(r.key.kind);
    out += "," + detail::fixed6(r.key.eps) + "," + std::to_string(r.key.N);
    for (double c : r.key.costs) out += "," + detail::fixed6(c);
    for (double p : r.prices) out += "," + detail::fixed6(p);
    for (double v : r.values) out += "," + detail::fixed6(v);
    out += "," + detail::fixed6(r.gap) + "," + std::to_string(r.iterations) + "," + r.status + "," +
           std::to_string(r.seed) + "\n";
  }
  return out;
}

inline json to_json(const ResultRow& r) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json prices = json::array(), values = json::array();
  for (double p : r.prices) prices.push_back(num(p));
  for (double v : r.values) values.push_back(num(v));
  return {{"variant", to_string(r.key.kind)},
          {"eps", r.key.eps},
          {"N", r.key.N},
          {"costs", r.key.costs},
          {"replication", r.key.replication},
          {"prices", prices},
          {"values", values},
          {"gap", num(r.gap)},
          {"iters", r.iterations},
          {"status", r.status},
          {"seed", r.seed},
          {"interval_flag", r.interval_flag}};
}

inline ResultRow row_from_json(const json& j) {
  ResultRow r;
  r.key.kind = row_kind_from(j.at("variant").get<std::string>());
  r.key.eps = j.at("eps").get<double>();
  r.key.N = j.at("N").get<std::size_t>();
  r.key.costs = j.at("costs").get<Vector>();
  r.key.replication = j.at("replication").get<std::size_t>();
  for (const auto& p : j.at("prices")) r.prices.push_back(p.is_null() ? std::nan("") : p.get<double>());
  for (const auto& v : j.at("values")) r.values.push_back(v.is_null() ? std::nan("") : v.get<double>());
  r.gap = j.at("gap").is_null() ? std::nan("") : j.at("gap").get<double>();
  r.iterations = j.at("iters").get<std::size_t>();
  r.status = j.at("status").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.interval_flag = j.at("interval_flag").get<bool>();
  return r;
}

/// Plot series, keyed by file name: price/value over N per variant, cost
/// point and firm; over the cost grid per variant, N and firm when the study
/// sweeps costs.
inline std::map<std::string, std::string> plot_series(const std::vector<ResultRow>& rows,
                                                      const ExperimentConfig& cfg) {
  std::map<std::string, std::string> files;
  const std::size_t n = cfg.n_firms();
  auto rep_suffix = [&](const RowKey& k) {
    return cfg.replications > 1 ? "__r" + std::to_string(k.replication) : std::string();
  };
  auto cost_index = [&](const Vector& c) {
    for (std::size_t i = 0; i < cfg.cost_list.size(); ++i)
      if (cfg.cost_list[i] == c) return i;
    return cfg.cost_list.size();
  };
  for (const auto& r : rows) {
    if (r.key.kind == RowKind::true_empirical || r.key.kind == RowKind::true_plugin) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const std::string name = "by_N__" + detail::label(r.key) + "__c" +
                               std::to_string(cost_index(r.key.costs)) + "__firm" +
                               std::to_string(j + 1) + rep_suffix(r.key) + ".csv";
      auto& body = files[name];
      if (body.empty()) body = "N,price,value\n";
      body += std::to_string(r.key.N) + "," + detail::fixed6(r.prices[j]) + "," +
              detail::fixed6(r.values[j]) + "\n";
    }
  }
  if (cfg.cost_list.size() > 1) {
    for (const auto& r : rows) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::string name = "by_c__" + detail::label(r.key) + "__N" + std::to_string(r.key.N) +
                                 "__firm" + std::to_string(j + 1) + rep_suffix(r.key) + ".csv";
        auto& body = files[name];
        if (body.empty()) {
          for (std::size_t k = 1; k <= n; ++k) body += "c" + std::to_string(k) + ",";
          body += "price,value\n";
        }
        for (double c : r.key.costs) body += detail::fixed6(c) + ",";
        body += detail::fixed6(r.prices[j]) + "," + detail::fixed6(r.values[j]) + "\n";
      }
    }
  }
  return files;
}

inline bool wants(const ExperimentConfig& cfg, const std::string& format) {
  return std::find(cfg.formats.begin(), cfg.formats.end(), format) != cfg.formats.end();
}

/// Writes results.csv, results.json and plotdata/*.csv into out_dir.
inline void emit_results(const std::vector<ResultRow>& rows, const ExperimentConfig& cfg,
                         const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + out_dir.string() + "': " + ec.message());
  if (wants(cfg, "csv")) detail::write_file(out_dir / "results.csv", to_csv(rows, cfg.n_firms()));
  if (wants(cfg, "json")) {
    json records = json::array();
    for (const auto& r : rows) records.push_back(to_json(r));
    const json doc = {{"manifest", cfg.manifest()}, {"rows", records}};
    detail::write_file(out_dir / "results.json", doc.dump(2) + "\n");
  }
  if (wants(cfg, "plotdata")) {
    const fs::path dir = out_dir / "plotdata";
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
    for (const auto& [name, body] : plot_series(rows, cfg)) detail::write_file(dir / name, body);
  }
}

struct VerifiedRow {
  ResultRow row;
  double recomputed_gap;
  bool certified;
};

/// Re-certifies every row of results.json: rebuilds its game from the echoed
/// manifest and recomputes the equilibrium gap at the recorded point.
inline std::vector<VerifiedRow> verify_results(const std::filesystem::path& dir) {
  const auto path = dir / "results.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse '" + path.string() + "': " + e.what());
  }
  const ExperimentConfig cfg = parse_config(doc.at("manifest"));
  std::map<std::size_t, std::vector<std::vector<Vector>>> data;
  std::vector<VerifiedRow> out;
  for (const auto& rj : doc.at("rows")) {
    ResultRow row = row_from_json(rj);
    VerifiedRow v{row, std::nan(""), false};
    bool finite = true;
    for (double p : row.prices) finite = finite && std::isfinite(p);
    if (finite) {
      auto it = data.find(row.key.replication);
      if (it == data.end())
        it = data.emplace(row.key.replication,
                          draw_data(cfg, row.key.replication, data_stream_length(cfg))).first;
      const GameInstance game = build_row_game(cfg, row.key, it->second);
      Profile x;
      for (double p : row.prices) x.push_back({p});
      v.recomputed_gap = ni_gap(game, x);
      v.certified = v.recomputed_gap <= cfg.gap_tol;
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace bdrne::experiment
