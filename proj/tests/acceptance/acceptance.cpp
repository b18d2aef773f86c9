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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bdrne/bdrne.hpp"
#include "bdrne/experiment.hpp"

namespace {

using namespace bdrne;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

experiment::ExperimentConfig config(const char* name) {
  return experiment::load_config(std::filesystem::path(BDRNE_CONFIG_DIR) / name);
}

DiscreteNominal random_nominal(std::mt19937_64& gen, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteNominal nom;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    nom.outcomes.push_back(lo + (hi - lo) * unit(gen));
    nom.weights.push_back(0.05 + unit(gen));
    s += nom.weights.back();
  }
  for (double& w : nom.weights) w /= s;
  return nom;
}

Outcome dual_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::size_t> size(2, 50);
  std::uniform_real_distribution<double> log_eps(std::log(1e-3), std::log(5.0));
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto nom = random_nominal(gen, size(gen), -3.0, 3.0);
    const AmbiguitySpec eps{std::exp(log_eps(gen))};
    worst = std::max(worst, std::abs(worst_case_expectation(nom, eps).value -
                                     worst_case_simplex_oracle(nom, eps).value));
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-6 && t < 5.0, fmt("max diff %.3g", worst) + fmt(", %.3f s", t)};
}

Outcome example_kl() {
  const double exact = 0.5 + std::log(2.0) - 0.625 * std::log(5.0);
  const UniformDensity uniform{0.0, 1.0};
  std::vector<double> kls;
  for (double theta : {0.25, 0.4, 0.5, 0.75}) kls.push_back(kl_divergence(uniform, TentDensity(theta)));
  const auto [lo, hi] = std::minmax_element(kls.begin(), kls.end());
  const bool ok = std::abs(kls.front() - exact) <= 1e-4 && *hi - *lo <= 1e-6;
  return {ok, fmt("KL %.6f", kls.front()) + fmt(" vs %.6f", exact) + fmt(", spread %.2g", *hi - *lo)};
}

Outcome pinsker_gap() {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> size(2, 60);
  std::uniform_real_distribution<double> log_eps(std::log(1e-4), std::log(3.0)), unit(0.0, 1.0);
  double slack = kInf;
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    const double lo = -10.0 * unit(gen), hi = lo + 0.1 + 10.0 * unit(gen);
    const auto nom = random_nominal(gen, size(gen), lo, hi);
    const double eps = std::exp(log_eps(gen));
    const double gap = nom.mean() - worst_case_expectation(nom, {eps}).value;
    const double bound = (hi - lo) * std::sqrt(eps / 2.0) + 1e-9;
    ok = ok && gap >= 0.0 && gap <= bound;
    slack = std::min(slack, bound - gap);
  }
  return {ok, fmt("min slack %.3g", slack)};
}

Outcome plugin_truth() {
  auto cfg = config("sample_sizes.json");
  cfg.reference_n_xi = std::max<std::size_t>(cfg.reference_n_xi, 20000);
  const auto t0 = Clock::now();
  const experiment::RowKey key{experiment::RowKind::true_plugin, 0.0, 0, cfg.costs, 0};
  const auto row = experiment::solve_row(cfg, key, {});
  const double t = seconds_since(t0);
  const bool ok = row.status == "converged" && row.gap <= 1e-4 &&
                  std::abs(row.prices[0] - 9.5325) <= 0.20 && t < 60.0;
  return {ok, fmt("p1 %.4f", row.prices[0]) + fmt(" p2 %.4f", row.prices[1]) +
                  " (target 9.5325 +- 0.20)" + fmt(", gap %.2g", row.gap) + ", " + row.status +
                  fmt(", %.1f s", t)};
}

Outcome epsilon_ordering() {
  const auto cfg = config("sample_sizes.json");
  const auto rows = experiment::run_study(cfg, {std::string("bdrne"), std::size_t{50}});
  bool ok = rows.size() == 3;
  std::string detail = "p1";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt(" %.4f", rows[i].prices[0]);
    ok = ok && rows[i].status == "converged";
    if (i > 0) {
      ok = ok && rows[i].key.eps > rows[i - 1].key.eps;
      ok = ok && rows[i].prices[0] < rows[i - 1].prices[0] && rows[i].values[0] < rows[i - 1].values[0];
    }
  }
  detail += ", v1";
  for (const auto& r : rows) detail += fmt(" %.4f", r.values[0]);
  return {ok, detail};
}

Outcome bdrne_to_bane() {
  const auto cfg = config("sample_sizes.json");
  const auto data = experiment::draw_data(cfg, 0, experiment::data_stream_length(cfg));
  using experiment::RowKind;
  auto solve = [&](RowKind kind, double eps) {
    return experiment::solve_row(cfg, {kind, eps, 50, cfg.costs, 0}, data);
  };
  auto dist = [](const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
  };
  const auto bane = solve(RowKind::bane, 0.0);
  const auto zero = solve(RowKind::bdrne, 0.0);
  const double near = dist(solve(RowKind::bdrne, 0.001).prices, bane.prices);
  const double far = dist(solve(RowKind::bdrne, 0.5).prices, bane.prices);
  const bool same = zero.prices == bane.prices && zero.values == bane.values;
  return {near < far && same, fmt("dist(0.001) %.3g", near) + fmt(", dist(0.5) %.3g", far) +
                                  (same ? ", bane == bdrne(0)" : ", bane != bdrne(0)")};
}

Outcome mnl_structure() {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> xs(1.0, 10.0), cs(1.0, 10.0), b(0.05, 0.6), a(0.1, 0.8),
      ps(0.0, 20.0);
  double norm_err = 0.0, residual = 0.0;
  bool signs = true, branch = true, lemma = true;
  int premise = 0;
  const double h = 1e-4;
  for (int t = 0; t < 50; ++t) {
    const auto m = mnl::MNLMarket::scalar({xs(gen), xs(gen)}, {cs(gen), cs(gen)});
    const std::vector<double> xi{b(gen), a(gen)};
    const std::vector<double> p{ps(gen), ps(gen)};
    const double total = mnl::market_share(0, p, xi, m) + mnl::market_share(1, p, xi, m) +
                         mnl::outside_share(p, xi, m);
    norm_err = std::max(norm_err, std::abs(total - 1.0));
    const std::vector<double> up{p[0] + h, p[1]};
    signs = signs && mnl::market_share(0, up, xi, m) < mnl::market_share(0, p, xi, m) &&
            mnl::market_share(1, up, xi, m) > mnl::market_share(1, p, xi, m);

    const std::vector<double> rivals{0.0, m.costs[1] + 1.0 / xi[1]};
    const double c = m.costs[0];
    auto bound = [&](double be, double al) {
      return mnl::price_upper_bound(0, c, rivals, std::vector<double>{be, al}, m);
    };
    const double pbar = bound(xi[0], xi[1]);
    const double q = mnl::market_share(0, std::vector<double>{pbar, rivals[1]}, xi, m);
    branch = branch && q < 0.5;
    residual = std::max(residual, std::abs(pbar - c - 1.0 / (xi[1] * (0.5 - q))));
    // The beta sign follows the sign of d q_0 / d beta = q_0 (x_0 - sum_k x_k q_k).
    const std::vector<double> at{pbar, rivals[1]};
    const double drift = m.characteristics[0][0] -
                         m.characteristics[0][0] * mnl::market_share(0, at, xi, m) -
                         m.characteristics[1][0] * mnl::market_share(1, at, xi, m);
    const double d_beta = bound(xi[0] + h, xi[1]) - pbar;
    lemma = lemma && bound(xi[0], xi[1] + h) < pbar;
    if (std::abs(drift) >= 1e-3) lemma = lemma && (d_beta > 0.0) == (drift > 0.0);
    if (drift > 0.0) ++premise;
  }
  const bool ok = norm_err <= 1e-12 && signs && branch && residual <= 1e-10 && lemma;
  return {ok, fmt("norm err %.2g", norm_err) + fmt(", residual %.2g", residual) +
                  (signs ? ", share signs ok" : ", share signs wrong") +
                  (branch ? "" : ", q >= 1/2") + (lemma ? ", bound signs ok" : ", bound signs wrong") +
                  fmt(" (%.0f/50 with rising own share in beta)", premise)};
}

Outcome quadratic_game() {
  auto scen = std::make_shared<const ScenarioSet>(ScenarioSet({Vector{}}, {{Vector{0.0}}}, 0));
  GameInstance g;
  auto add = [&](std::size_t j, double a, double b) {
    PlayerSpec p;
    p.index = j;
    p.utility = [j, a, b](const Profile& x, std::span<const double>) {
      const double d = x[j][0] - a - b * x[1 - j][0];
      return -d * d;
    };
    p.actions = ActionBox::interval(0.0, 10.0);
    p.scenarios = scen;
    g.players.push_back(std::move(p));
  };
  add(0, 1.0, 0.3);
  add(1, 2.0, 0.3);
  SolverOptions opt;
  opt.tol = 1e-16;
  const auto r = gauss_seidel(g, opt);
  const double x1 = 1.6 / 0.91, x2 = 2.0 + 0.3 * x1;
  const double err = std::max(std::abs(r.point[0][0] - x1), std::abs(r.point[1][0] - x2));
  const bool ok = err <= 1e-8 && r.iterations <= 30 && r.gap <= 1e-10 &&
                  r.status == EquilibriumStatus::converged;
  return {ok, fmt("err %.2g", err) + fmt(", sweeps %.0f", static_cast<double>(r.iterations)) +
                  fmt(", gap %.2g", r.gap)};
}

// Total variation between the closed-form Gamma posterior and a grid-normalized
// prior x likelihood product.
double posterior_tv(double shape, GammaHyper prior, const std::vector<double>& data, GammaHyper post) {
  const double mean = post.a / post.b, sd = std::sqrt(post.a) / post.b;
  const double lo = std::max(1e-12, mean - 14.0 * sd), hi = mean + 14.0 * sd;
  const int n = 40001;
  std::vector<double> grid(n), logf(n);
  double peak = -kInf;
  for (int i = 0; i < n; ++i) {
    const double t = lo + (hi - lo) * i / (n - 1);
    grid[i] = t;
    double l = (prior.a - 1.0) * std::log(t) - prior.b * t;
    for (double x : data) l += shape * std::log(t) - t * x;
    logf[i] = l;
    peak = std::max(peak, l);
  }
  std::vector<double> f(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) f[i] = std::exp(logf[i] - peak);
  for (int i = 1; i < n; ++i) z += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
  const GammaDensity closed{post.a, post.b};
  double tv = 0.0, prev = std::abs(f[0] / z - closed.pdf(grid[0]));
  for (int i = 1; i < n; ++i) {
    const double cur = std::abs(f[i] / z - closed.pdf(grid[i]));
    tv += 0.5 * (cur + prev) * (grid[i] - grid[i - 1]);
    prev = cur;
  }
  return 0.5 * tv;
}

Outcome posterior() {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> ha(0.5, 5.0), hb(0.1, 5.0), th(10.0, 80.0);
  std::uniform_int_distribution<int> len(1, 200);
  double tv = 0.0;
  for (int t = 0; t < 10; ++t) {
    const GammaHyper prior{ha(gen), hb(gen)};
    Rng rng(gen());
    const auto draws = sample(ParametricFamily::gamma(15.0, 1), std::vector<double>{th(gen)}, rng,
                              static_cast<std::size_t>(len(gen)));
    std::vector<double> data;
    for (const auto& d : draws) data.push_back(d[0]);
    const auto post = posterior_update(PosteriorState::from_prior(15.0, {prior}), draws);
    tv = std::max(tv, posterior_tv(15.0, prior, data, post.hyper[0]));
  }
  Rng rng(2024);
  const auto big = sample(ParametricFamily::gamma(15.0, 2), std::vector<double>{50.0, 40.0}, rng, 5000);
  const auto post = posterior_update(PosteriorState::from_prior(15.0, {{1.0, 1.0}, {1.0, 1.0}}), big);
  const Vector mean = post.mean();
  const double rel = std::max(std::abs(mean[0] / 50.0 - 1.0), std::abs(mean[1] / 40.0 - 1.0));
  return {tv <= 1e-3 && rel <= 0.02,
          fmt("max TV %.2g", tv) + fmt(", mean (%.3f,", mean[0]) + fmt(" %.3f)", mean[1])};
}

Outcome cost_trends() {
  auto cfg = config("cost_sweep.json");
  cfg.references = false;
  const auto t0 = Clock::now();
  const auto rows = experiment::run_study(cfg);
  std::map<std::string, std::vector<const experiment::ResultRow*>> series;
  for (const auto& r : rows) series[experiment::detail::label(r.key)].push_back(&r);
  bool ok = !series.empty();
  std::string worst;
  double min_margin = kInf;
  for (const auto& [name, rs] : series) {
    for (std::size_t i = 0; i < rs.size(); ++i) {
      ok = ok && rs[i]->status == "converged";
      if (i == 0) continue;
      const double dc = rs[i]->key.costs[0] - rs[i - 1]->key.costs[0];
      const double d1 = rs[i]->prices[0] - rs[i - 1]->prices[0];
      const double d2 = rs[i]->prices[1] - rs[i - 1]->prices[1];
      const bool step_ok = dc > 0.0 && d1 >= 0.0 && d2 >= 0.0 && d1 / dc > d2 / dc;
      if (!step_ok && worst.empty()) worst = ", first violation " + name + fmt(" at c1 %.1f", rs[i]->key.costs[0]);
      ok = ok && step_ok;
      min_margin = std::min(min_margin, (d1 - d2) / dc);
    }
  }
  return {ok, fmt("%.0f series", static_cast<double>(series.size())) +
                  fmt(", min slope margin %.3g", min_margin) + worst + fmt(", %.1f s", seconds_since(t0))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"dual matches simplex oracle", dual_oracle},
      {"uniform-vs-tent KL value", example_kl},
      {"worst-case gap within Pinsker bound", pinsker_gap},
      {"plug-in truth equilibrium price", plugin_truth},
      {"BDRNE prices and values fall with radius", epsilon_ordering},
      {"BDRNE approaches BANE as radius shrinks", bdrne_to_bane},
      {"MNL share and price-bound structure", mnl_structure},
      {"linear-response game fixed point", quadratic_game},
      {"conjugate posterior", posterior},
      {"cost sensitivity trends", cost_trends},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o{false, ""};
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
