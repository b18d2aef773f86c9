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

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "bdrne/bdro.hpp"
#include "bdrne/mnl.hpp"

namespace bdrne {
namespace {

std::shared_ptr<const ScenarioSet> single_scenario() {
  return std::make_shared<const ScenarioSet>(ScenarioSet({Vector{}}, {{Vector{0.0}}}, 0));
}

PlayerSpec deterministic_player(Utility u, ActionBox box) {
  PlayerSpec p;
  p.index = 0;
  p.utility = std::move(u);
  p.actions = std::move(box);
  p.scenarios = single_scenario();
  return p;
}

// Firm 1 of the two-firm phone market with its scenarios from `scenarios`.
PlayerSpec mnl_firm(const std::shared_ptr<const mnl::MNLMarket>& market,
                    std::shared_ptr<const ScenarioSet> scenarios, double eps, ActionBox box) {
  PlayerSpec p;
  p.index = 0;
  p.utility = [market](const Profile& x, std::span<const double> xi) {
    const std::vector<double> prices{x[0][0], x[1][0]};
    return mnl::profit(0, prices, xi, *market);
  };
  p.actions = std::move(box);
  p.ambiguity = {eps};
  p.scenarios = std::move(scenarios);
  return p;
}

std::shared_ptr<const mnl::MNLMarket> phone_market() {
  return std::make_shared<const mnl::MNLMarket>(mnl::MNLMarket::scalar({6.0, 4.0}, {6.0, 5.0}));
}

std::shared_ptr<const ScenarioSet> posterior_scenarios(std::size_t N, std::size_t n_theta,
                                                       std::size_t n_xi, std::uint64_t seed) {
  Rng rng(1234);
  const auto data = sample(ParametricFamily::gamma(15.0, 2), std::vector<double>{50.0, 40.0}, rng, N);
  const auto post = posterior_update(PosteriorState::from_prior(15.0, {{1.0, 1.0}, {1.0, 1.0}}), data);
  return std::make_shared<const ScenarioSet>(ScenarioSet::from_posterior(post, n_theta, n_xi, seed));
}

TEST(ScenarioSet, ShapeChecks) {
  EXPECT_THROW(ScenarioSet({}, {}, 0), DomainError);
  EXPECT_THROW(ScenarioSet({Vector{1.0}, Vector{2.0}}, {{Vector{0.1}}, {Vector{0.1}, Vector{0.2}}}, 0),
               DomainError);
  const auto sc = posterior_scenarios(5, 3, 4, 9);
  EXPECT_EQ(sc->n_theta(), 3u);
  EXPECT_EQ(sc->n_xi(), 4u);
  EXPECT_EQ(sc->xi_dim(), 2u);
}

TEST(BdroValue, ZeroRadiusIsDoubleSampleAverage) {
  const auto market = phone_market();
  const auto sc = posterior_scenarios(20, 7, 11, 3);
  const auto player = mnl_firm(market, sc, 0.0, ActionBox::interval(6.0, 14.0));
  const Profile x{{9.5}, {8.5}};
  double expected = 0.0;
  for (std::size_t i = 0; i < sc->n_theta(); ++i) {
    double inner = 0.0;
    for (std::size_t k = 0; k < sc->n_xi(); ++k) inner += player.utility(x, sc->xi(i, k));
    expected += inner / sc->n_xi();
  }
  expected /= sc->n_theta();
  EXPECT_NEAR(bdro_value(player, {9.5}, x), expected, 1e-14);
}

TEST(BdroValue, SingletonScenario) {
  const auto market = phone_market();
  const auto sc = std::make_shared<const ScenarioSet>(
      ScenarioSet({Vector{50.0, 40.0}}, {{Vector{0.3, 0.375}}}, 0));
  const auto player = mnl_firm(market, sc, 0.0, ActionBox::interval(6.0, 14.0));
  const Profile x{{9.5}, {8.5}};
  const std::vector<double> xi{0.3, 0.375};
  EXPECT_DOUBLE_EQ(bdro_value(player, {9.5}, x), player.utility(x, xi));
}

TEST(BdroValue, PlugInProfitMatchesIndependentMonteCarlo) {
  const auto market = phone_market();
  const std::size_t n = 200000;
  Rng rng(555);
  const auto sc = std::make_shared<const ScenarioSet>(ScenarioSet::from_thetas(
      ParametricFamily::gamma(15.0, 2), {Vector{50.0, 40.0}}, n, rng, 555));
  const auto player = mnl_firm(market, sc, 0.0, ActionBox::interval(6.0, 14.0));
  const double model = bdro_value(player, {9.5}, Profile{{9.5}, {8.5}});

  // Independent estimator: different generator, direct share formula.
  std::mt19937 gen(99);
  std::gamma_distribution<double> beta(15.0, 1.0 / 50.0), alpha(15.0, 1.0 / 40.0);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double b = beta(gen), a = alpha(gen);
    const double e1 = std::exp(6.0 * b - a * 9.5), e2 = std::exp(4.0 * b - a * 8.5);
    const double v = (9.5 - 6.0) * e1 / (1.0 + e1 + e2);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_LE(std::abs(model - mean), 3.0 * std::sqrt(2.0) * se);
}

TEST(BdroValue, NonIncreasingInRadiusAndPinskerBounded) {
  const auto market = phone_market();
  const auto sc = posterior_scenarios(20, 20, 40, 17);
  const Profile x{{9.0}, {8.0}};
  // Profit at these prices lies in [0, 3] for every taste draw.
  const double range = 3.0;
  double prev = kInf;
  const double base = bdro_value(mnl_firm(market, sc, 0.0, ActionBox::interval(6.0, 14.0)), {9.0}, x);
  for (double eps : {0.0, 0.005, 0.05, 0.2, 0.6, 1.5}) {
    const double v = bdro_value(mnl_firm(market, sc, eps, ActionBox::interval(6.0, 14.0)), {9.0}, x);
    EXPECT_LE(v, prev + 1e-12);
    EXPECT_GE(base - v, -1e-12);
    EXPECT_LE(base - v, range * std::sqrt(eps / 2.0) + 1e-9);
    prev = v;
  }
}

TEST(BdroValue, DeterministicForSeed) {
  const auto market = phone_market();
  const auto a = posterior_scenarios(20, 10, 30, 42);
  const auto b = posterior_scenarios(20, 10, 30, 42);
  EXPECT_EQ(*a, *b);
  const Profile x{{9.0}, {8.0}};
  EXPECT_EQ(bdro_value(mnl_firm(market, a, 0.1, ActionBox::interval(6.0, 14.0)), {9.3}, x),
            bdro_value(mnl_firm(market, b, 0.1, ActionBox::interval(6.0, 14.0)), {9.3}, x));
}

TEST(BdroValue, UtilityFailureCarriesScenarioIndex) {
  auto player = deterministic_player(
      [](const Profile&, std::span<const double>) -> double { throw std::runtime_error("boom"); },
      ActionBox::interval(0.0, 1.0));
  try {
    bdro_value(player, {0.5}, Profile{{0.5}});
    FAIL() << "expected EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("scenario (0, 0)"), std::string::npos);
  }
  EXPECT_THROW(bdro_value(player, {2.0}, Profile{{0.5}}), DomainError);
}

TEST(BdroValue, PosteriorValueApproachesPlugInValue) {
  const auto market = phone_market();
  const std::size_t n_theta = 200, n_xi = 50;
  const double eps = 0.1;
  Rng rng(31);
  const auto family = ParametricFamily::gamma(15.0, 2);
  const auto plug = std::make_shared<const ScenarioSet>(ScenarioSet::from_thetas(
      family, std::vector<Vector>(n_theta, Vector{50.0, 40.0}), n_xi, rng, 31));
  Rng data_rng(77);
  const auto data = sample(family, std::vector<double>{50.0, 40.0}, data_rng, 5000);
  const Profile rivals{{9.0}, {8.5}};

  std::vector<double> sup_diff;
  for (std::size_t N : {5, 50, 500, 5000}) {
    const std::vector<Vector> first(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(N));
    const auto post = posterior_update(PosteriorState::from_prior(15.0, {{1.0, 1.0}, {1.0, 1.0}}), first);
    const auto sc = std::make_shared<const ScenarioSet>(ScenarioSet::from_posterior(post, n_theta, n_xi, 31));
    const auto bayes = mnl_firm(market, sc, eps, ActionBox::interval(6.0, 14.0));
    const auto truth = mnl_firm(market, plug, eps, ActionBox::interval(6.0, 14.0));
    double worst = 0.0;
    for (int g = 0; g < 50; ++g) {
      const double p = 6.0 + 8.0 * g / 49.0;
      worst = std::max(worst, std::abs(bdro_value(bayes, {p}, rivals) - bdro_value(truth, {p}, rivals)));
    }
    sup_diff.push_back(worst);
  }
  EXPECT_LE(sup_diff.back(), sup_diff.front());
}

TEST(BestResponse, QuadraticVertexAndClippedMaximizer) {
  auto u = [](const Profile& x, std::span<const double>) { return -(x[0][0] - 3.0) * (x[0][0] - 3.0); };
  const auto inside = best_response(deterministic_player(u, ActionBox::interval(0.0, 10.0)), Profile{{5.0}});
  EXPECT_NEAR(inside.action[0], 3.0, 1e-9);
  EXPECT_NEAR(inside.value, 0.0, 1e-16);
  const auto clipped = best_response(deterministic_player(u, ActionBox::interval(0.0, 2.0)), Profile{{1.0}});
  EXPECT_EQ(clipped.action[0], 2.0);
  EXPECT_DOUBLE_EQ(clipped.value, -1.0);
}

TEST(BestResponse, FlatObjectivePrefersLowerEndpoint) {
  auto flat = [](const Profile&, std::span<const double>) { return 1.0; };
  const auto br = best_response(deterministic_player(flat, ActionBox::interval(2.0, 5.0)), Profile{{3.0}});
  EXPECT_EQ(br.action[0], 2.0);
}

TEST(BestResponse, RejectsInvertedInterval) {
  auto u = [](const Profile& x, std::span<const double>) { return x[0][0]; };
  EXPECT_THROW(best_response(deterministic_player(u, ActionBox::interval(3.0, 1.0)), Profile{{2.0}}),
               DomainError);
}

TEST(BestResponse, BoxByCoordinateAscent) {
  auto u = [](const Profile& x, std::span<const double>) {
    const double a = x[0][0] - 1.0, b = x[0][1] - 2.0;
    return -a * a - b * b - 0.5 * a * b;
  };
  const auto free = best_response(deterministic_player(u, {{0.0, 0.0}, {3.0, 3.0}}), Profile{{0.0, 0.0}});
  EXPECT_NEAR(free.action[0], 1.0, 1e-6);
  EXPECT_NEAR(free.action[1], 2.0, 1e-6);
  const auto clipped = best_response(deterministic_player(u, {{0.0, 0.0}, {0.5, 3.0}}), Profile{{0.0, 0.0}});
  EXPECT_NEAR(clipped.action[0], 0.5, 1e-9);
  EXPECT_NEAR(clipped.action[1], 2.125, 1e-6);
}

TEST(BestResponse, MnlFirmMatchesGridScan) {
  const auto market = phone_market();
  const auto sc = posterior_scenarios(50, 10, 40, 2718);
  const auto player = mnl_firm(market, sc, 0.1, ActionBox::interval(6.0, 11.0));
  const Profile rivals{{6.0}, {8.5}};
  const auto br = best_response(player, rivals);

  const int n = 100000;
  double best_x = 6.0, best_v = -kInf;
  for (int i = 0; i < n; ++i) {
    const double p = 6.0 + 5.0 * i / (n - 1);
    const double v = bdro_value(player, {p}, rivals);
    if (v > best_v) {
      best_v = v;
      best_x = p;
    }
  }
  EXPECT_NEAR(br.action[0], best_x, 1e-4);
  EXPECT_GE(br.value, best_v - 1e-12);
}

}  // namespace
}  // namespace bdrne
