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

// Multinomial-logit price competition with an outside option.
//
// A customer with taste xi = (beta_1..beta_m, alpha) buys product j with
// probability
//
//   q_j = exp(beta . x_j - alpha p_j) / (1 + sum_k exp(beta . x_k - alpha p_k))
//
// and firm j earns (p_j - c_j) q_j per customer.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bdrne/bdro.hpp"
#include "bdrne/equilibrium.hpp"
#include "bdrne/errors.hpp"
#include "bdrne/kl_dro.hpp"
#include "bdrne/stochastics.hpp"

namespace bdrne::mnl {

struct MNLMarket {
  std::vector<Vector> characteristics;  // x_j, one vector per firm
  Vector costs;                         // c_j, thousands of dollars
  bool outside_option = true;

  static MNLMarket scalar(const Vector& x, Vector costs, bool outside_option = true) {
    MNLMarket m;
    for (double v : x) m.characteristics.push_back({v});
    m.costs = std::move(costs);
    m.outside_option = outside_option;
    m.validate();
    return m;
  }

  std::size_t n() const { return costs.size(); }
  std::size_t taste_dim() const { return characteristics.front().size(); }

  void validate() const {
    if (costs.empty()) throw ConfigError("market needs at least one firm");
    if (characteristics.size() != costs.size())
      throw ConfigError("one characteristic vector per firm required");
    for (const auto& x : characteristics) {
      if (x.size() != characteristics.front().size() || x.empty())
        throw ConfigError("characteristic vectors must share one nonzero length");
      for (double v : x)
        if (!(v >= 0.0)) throw ConfigError("characteristics must be nonnegative");
    }
    for (double c : costs)
      if (!(c > 0.0)) throw ConfigError("marginal costs must be positive");
  }
};

namespace detail {

inline double utility_index(const MNLMarket& m, std::size_t k, double price,
                            std::span<const double> xi) {
  const auto& x = m.characteristics[k];
  double s = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) s += xi[d] * x[d];
  return s - xi[x.size()] * price;
}

/// Share of firm j (or the outside option when j == n) with prices supplied
/// by an accessor; the largest exponent is factored out.
template <class PriceOf>
double share(const MNLMarket& m, std::size_t j, PriceOf&& price_of, std::span<const double> xi) {
  const std::size_t n = m.n();
  if (xi.size() != m.taste_dim() + 1) throw DomainError("taste vector must be (beta..., alpha)");
  if (!(xi.back() > 0.0)) throw DomainError("price sensitivity alpha must be positive");
  double shift = m.outside_option ? 0.0 : -kInf;
  double own = 0.0;
  for (std::size_t k = 0; k < n; ++k) shift = std::max(shift, utility_index(m, k, price_of(k), xi));
  double denom = m.outside_option ? std::exp(-shift) : 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double e = std::exp(utility_index(m, k, price_of(k), xi) - shift);
    denom += e;
    if (k == j) own = e;
  }
  if (j == n) own = m.outside_option ? std::exp(-shift) : 0.0;
  return own / denom;
}

}  // namespace detail

/// q_j(p, xi).
inline double market_share(std::size_t j, std::span<const double> p, std::span<const double> xi,
                           const MNLMarket& market) {
  if (j >= market.n() || p.size() != market.n()) throw DomainError("firm index or price vector size");
  return detail::share(market, j, [&](std::size_t k) { return p[k]; }, xi);
}

/// q_0(p, xi), the no-purchase probability.
inline double outside_share(std::span<const double> p, std::span<const double> xi,
                            const MNLMarket& market) {
  if (p.size() != market.n()) throw DomainError("price vector size");
  return detail::share(market, market.n(), [&](std::size_t k) { return p[k]; }, xi);
}

inline double profit(std::size_t j, std::span<const double> p, std::span<const double> xi,
                     const MNLMarket& market) {
  return (p[j] - market.costs[j]) * market_share(j, p, xi, market);
}

/// Largest price p_bar with firm j's profit concave on [c_j, p_bar]: the root
/// of p - c_j - 1 / (alpha (1/2 - q_j(p))) on the branch q_j < 1/2.
/// `p` supplies the rival prices; p[j] is ignored.
inline double price_upper_bound(std::size_t j, double c_j, std::span<const double> p,
                                std::span<const double> xi_hat, const MNLMarket& market) {
  if (j >= market.n() || p.size() != market.n()) throw DomainError("firm index or price vector size");
  for (std::size_t k = 0; k < p.size(); ++k)
    if (k != j && !std::isfinite(p[k])) throw DomainError("rival prices must be finite");
  const double alpha = xi_hat.back();
  auto q = [&](double price) {
    return detail::share(market, j, [&](std::size_t k) { return k == j ? price : p[k]; }, xi_hat);
  };
  auto phi = [&](double price) { return price - c_j - 1.0 / (alpha * (0.5 - q(price))); };

  auto fail = [&](const char* what, double lo, double hi) {
    std::ostringstream os;
    os << "price_upper_bound: " << what << " (firm " << j << ", c=" << c_j << ", alpha=" << alpha
       << ", lo=" << lo << ", hi=" << hi << ")";
    return NumericalError(os.str());
  };

  // Smallest admissible price: q_j(lo) < 1/2 and phi(lo) < 0.
  double lo = c_j;
  if (!(q(lo) < 0.5)) {
    double below = c_j, step = 1.0, above = c_j + step;
    int n = 0;
    while (!(q(above) < 0.5)) {
      below = above;
      step *= 2.0;
      above = c_j + step;
      if (++n > 60) throw fail("share stays above 1/2", c_j, above);
    }
    for (int it = 0; it < 200 && !(q(above) < 0.5 && phi(above) < 0.0); ++it) {
      const double mid = 0.5 * (below + above);
      if (q(mid) < 0.5) above = mid; else below = mid;
      if (above - below <= 1e-15 * std::max(1.0, above)) break;
    }
    lo = above;
    if (!(phi(lo) < 0.0)) {
      // q(lo) < 1/2 but already past the root: the root is the branch start.
      return lo;
    }
  }

  double offset = 2.0 / alpha;
  double hi = lo + offset;
  int doublings = 0;
  while (!(phi(hi) > 0.0)) {
    offset *= 2.0;
    hi = lo + offset;
    if (++doublings > 60) throw fail("could not bracket the root", lo, hi);
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = phi(mid);
    if (std::abs(f) <= 1e-10) break;
    if (f > 0.0) hi = mid; else lo = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

/// Concavity anchor xi_hat = (beta_lo..., alpha_hi) from posterior-predictive
/// marginals: beta at level `tail`, alpha at level 1 - tail.
inline Vector concavity_anchor(const PosteriorState& posterior, double tail) {
  if (!(tail > 0.0 && tail <= 0.5)) throw ConfigError("anchor tail must lie in (0, 1/2]");
  const std::size_t dim = posterior.dimension();
  Vector xi_hat(dim);
  for (std::size_t d = 0; d + 1 < dim; ++d) xi_hat[d] = predictive_quantile(posterior, d, tail);
  xi_hat[dim - 1] = predictive_quantile(posterior, dim - 1, 1.0 - tail);
  return xi_hat;
}

/// Same anchor when theta is known: quantiles of Gamma(shape, theta_d).
inline Vector concavity_anchor_at(double shape, const Vector& theta, double tail) {
  if (!(tail > 0.0 && tail <= 0.5)) throw ConfigError("anchor tail must lie in (0, 1/2]");
  Vector xi_hat(theta.size());
  for (std::size_t d = 0; d + 1 < theta.size(); ++d) xi_hat[d] = gamma_quantile(shape, theta[d], tail);
  xi_hat.back() = gamma_quantile(shape, theta.back(), 1.0 - tail);
  return xi_hat;
}

struct BuildOptions {
  double anchor_tail = 0.5;
  /// Raw observations per firm, attached for the empirical variants.
  std::vector<std::vector<Vector>> raw_data;
};

/// Stride between firm-indexed seeds: firm j draws from seed + (j+1) * stride.
inline constexpr std::uint64_t kFirmSeedStride = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t firm_seed(std::uint64_t master, std::size_t j) {
  return master + kFirmSeedStride * static_cast<std::uint64_t>(j + 1);
}

/// Assembles the pricing game from per-firm scenario sets and anchors.
/// Action intervals are [c_j, p_bar_j] with rivals at c_k + 1/alpha_hat_j;
/// the returned game re-checks p_bar_j at the solution's rival prices.
inline GameInstance assemble_game(const MNLMarket& market,
                                  std::vector<std::shared_ptr<const ScenarioSet>> scenarios,
                                  std::vector<Vector> anchors, const std::vector<AmbiguitySpec>& eps,
                                  std::uint64_t seed, const BuildOptions& opt) {
  market.validate();
  const std::size_t n = market.n();
  if (scenarios.size() != n || anchors.size() != n || eps.size() != n)
    throw ConfigError("per-firm inputs must have one entry per firm");
  if (!opt.raw_data.empty() && opt.raw_data.size() != n)
    throw ConfigError("raw data must have one entry per firm");

  auto shared_market = std::make_shared<const MNLMarket>(market);
  GameInstance game;
  game.seed = seed;
  game.variant = Variant::bdrne;
  for (std::size_t j = 0; j < n; ++j) {
    eps[j].validate();
    const Vector& xi_hat = anchors[j];
    Vector rivals(n);
    for (std::size_t k = 0; k < n; ++k) rivals[k] = market.costs[k] + 1.0 / xi_hat.back();
    const double c_j = market.costs[j];
    const double p_bar = price_upper_bound(j, c_j, rivals, xi_hat, market);

    PlayerSpec p;
    p.index = j;
    p.utility = [shared_market, j](const Profile& x, std::span<const double> xi) {
      const double own = x[j][0];
      const double q = detail::share(*shared_market, j, [&](std::size_t k) { return x[k][0]; }, xi);
      return (own - shared_market->costs[j]) * q;
    };
    p.actions = ActionBox::interval(c_j, p_bar);
    p.ambiguity = eps[j];
    p.scenarios = scenarios[j];
    if (!opt.raw_data.empty())
      p.raw_data = std::make_shared<const std::vector<Vector>>(opt.raw_data[j]);
    game.players.push_back(std::move(p));
  }
  game.interval_check = [shared_market, anchors](const Profile& x) {
    const std::size_t n = shared_market->n();
    Vector prices(n);
    for (std::size_t k = 0; k < n; ++k) prices[k] = x[k][0];
    std::vector<bool> flags(n, false);
    for (std::size_t j = 0; j < n; ++j) {
      const double bound =
          price_upper_bound(j, shared_market->costs[j], prices, anchors[j], *shared_market);
      flags[j] = prices[j] > bound + 1e-9;
    }
    return flags;
  };
  return game;
}

/// BDRNE pricing game: firm j's scenarios come from its own posterior,
/// drawn with a firm-indexed seed.
inline GameInstance build_game(const MNLMarket& market, const std::vector<PosteriorState>& posteriors,
                               const std::vector<AmbiguitySpec>& eps, std::size_t n_theta,
                               std::size_t n_xi, std::uint64_t seed, const BuildOptions& opt = {}) {
  market.validate();
  const std::size_t n = market.n();
  if (posteriors.size() != n || eps.size() != n)
    throw ConfigError("need one posterior and one radius per firm");
  std::vector<std::shared_ptr<const ScenarioSet>> scenarios;
  std::vector<Vector> anchors;
  for (std::size_t j = 0; j < n; ++j) {
    if (posteriors[j].dimension() != market.taste_dim() + 1)
      throw ConfigError("posterior dimension must equal taste dimension + 1");
    scenarios.push_back(std::make_shared<const ScenarioSet>(
        ScenarioSet::from_posterior(posteriors[j], n_theta, n_xi, firm_seed(seed, j))));
    anchors.push_back(concavity_anchor(posteriors[j], opt.anchor_tail));
  }
  return assemble_game(market, std::move(scenarios), std::move(anchors), eps, seed, opt);
}

/// Pricing game with theta known (a single scenario per firm at theta_j).
inline GameInstance build_plugin_game(const MNLMarket& market, double shape,
                                      const std::vector<Vector>& thetas,
                                      const std::vector<AmbiguitySpec>& eps, std::size_t n_xi,
                                      std::uint64_t seed, const BuildOptions& opt = {}) {
  market.validate();
  const std::size_t n = market.n();
  if (thetas.size() != n || eps.size() != n) throw ConfigError("need one theta and one radius per firm");
  const auto family = ParametricFamily::gamma(shape, market.taste_dim() + 1);
  std::vector<std::shared_ptr<const ScenarioSet>> scenarios;
  std::vector<Vector> anchors;
  for (std::size_t j = 0; j < n; ++j) {
    Rng rng(firm_seed(seed, j));
    scenarios.push_back(std::make_shared<const ScenarioSet>(
        ScenarioSet::from_thetas(family, {thetas[j]}, n_xi, rng, firm_seed(seed, j))));
    anchors.push_back(concavity_anchor_at(shape, thetas[j], opt.anchor_tail));
  }
  return assemble_game(market, std::move(scenarios), std::move(anchors), eps, seed, opt);
}

}  // namespace bdrne::mnl
