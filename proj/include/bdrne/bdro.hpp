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

// Bayesian-averaged worst-case objective of a single player and its best
// response.
//
// For scenarios theta^1..theta^Nt drawn from the posterior and, for each, a
// cloud xi^{i,1..Nx} drawn from f(. | theta^i), the player's value is
//
//   (1/Nt) sum_i  min_{Q : KL(Q || cloud_i) <= eps_j} E_Q[u_j(x, xi)]
//
// with each inner problem solved independently through its KL dual.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdrne/errors.hpp"
#include "bdrne/kl_dro.hpp"
#include "bdrne/line_search.hpp"
#include "bdrne/stochastics.hpp"

namespace bdrne {

using Action = Vector;
using Profile = std::vector<Action>;

/// u_j(x, xi): the player's own action is profile[j].
using Utility = std::function<double(const Profile&, std::span<const double>)>;

/// Axis-aligned box; a closed interval when one-dimensional.
struct ActionBox {
  Vector lower;
  Vector upper;

  static ActionBox interval(double lo, double hi) { return {{lo}, {hi}}; }

  std::size_t dimension() const { return lower.size(); }

  void validate() const {
    if (lower.empty() || lower.size() != upper.size())
      throw DomainError("action box needs matching nonempty bounds");
    for (std::size_t d = 0; d < lower.size(); ++d) {
      if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]))
        throw DomainError("action box must be bounded");
      if (!(lower[d] <= upper[d])) throw DomainError("empty or inverted action interval");
    }
  }

  bool contains(const Action& x, double slack = 0.0) const {
    if (x.size() != lower.size()) return false;
    for (std::size_t d = 0; d < x.size(); ++d)
      if (x[d] < lower[d] - slack || x[d] > upper[d] + slack) return false;
    return true;
  }

  Action midpoint() const {
    Action m(lower.size());
    for (std::size_t d = 0; d < m.size(); ++d) m[d] = 0.5 * (lower[d] + upper[d]);
    return m;
  }
};

/// Nested Monte-Carlo draws: N_theta parameter samples, each with N_xi
/// observations. Immutable once built.
class ScenarioSet {
 public:
  ScenarioSet(std::vector<Vector> thetas, const std::vector<std::vector<Vector>>& clouds,
              std::uint64_t seed)
      : thetas_(std::move(thetas)), seed_(seed) {
    if (clouds.empty()) throw DomainError("scenario set needs N_theta >= 1");
    if (clouds.size() != thetas_.size()) throw DomainError("one cloud per theta sample required");
    n_xi_ = clouds.front().size();
    if (n_xi_ == 0) throw DomainError("scenario set needs N_xi >= 1");
    xi_dim_ = clouds.front().front().size();
    xi_.reserve(clouds.size() * n_xi_ * xi_dim_);
    for (const auto& cloud : clouds) {
      if (cloud.size() != n_xi_) throw DomainError("all scenario clouds must have equal size");
      for (const auto& xi : cloud) {
        if (xi.size() != xi_dim_) throw DomainError("inconsistent xi dimension");
        xi_.insert(xi_.end(), xi.begin(), xi.end());
      }
    }
  }

  /// theta^i ~ posterior, then xi^{i,k} ~ f(. | theta^i), from one stream.
  static ScenarioSet from_posterior(const PosteriorState& posterior, std::size_t n_theta,
                                    std::size_t n_xi, std::uint64_t seed) {
    Rng rng(seed);
    auto thetas = sample_posterior(posterior, rng, n_theta);
    return from_thetas(posterior.likelihood(), std::move(thetas), n_xi, rng, seed);
  }

  static ScenarioSet from_thetas(const ParametricFamily& family, std::vector<Vector> thetas,
                                 std::size_t n_xi, Rng& rng, std::uint64_t seed) {
    std::vector<std::vector<Vector>> clouds;
    clouds.reserve(thetas.size());
    for (const auto& theta : thetas) clouds.push_back(sample(family, theta, rng, n_xi));
    return ScenarioSet(std::move(thetas), clouds, seed);
  }

  /// A single pseudo-parameter whose cloud is the raw data (empirical nominal).
  static ScenarioSet empirical(const std::vector<Vector>& data) {
    return ScenarioSet({Vector{}}, {data}, 0);
  }

  std::size_t n_theta() const { return thetas_.size(); }
  std::size_t n_xi() const { return n_xi_; }
  std::size_t xi_dim() const { return xi_dim_; }
  std::uint64_t seed() const { return seed_; }
  const Vector& theta(std::size_t i) const { return thetas_[i]; }

  std::span<const double> xi(std::size_t i, std::size_t k) const {
    return {xi_.data() + (i * n_xi_ + k) * xi_dim_, xi_dim_};
  }

  bool operator==(const ScenarioSet&) const = default;

 private:
  std::vector<Vector> thetas_;
  std::size_t n_xi_ = 0;
  std::size_t xi_dim_ = 0;
  Vector xi_;
  std::uint64_t seed_ = 0;
};

struct PlayerSpec {
  std::size_t index = 0;
  Utility utility;
  ActionBox actions;
  AmbiguitySpec ambiguity;
  std::shared_ptr<const ScenarioSet> scenarios;
  /// Raw observations, required by the empirical model variants.
  std::shared_ptr<const std::vector<Vector>> raw_data;
};

/// Bayesian average of the per-theta worst-case expectations of u_j with the
/// player's action set to x_j and rivals taken from `x`.
inline double bdro_value(const PlayerSpec& player, const Action& x_j, const Profile& x) {
  if (!player.scenarios) throw ConfigError("player has no scenario set");
  if (player.index >= x.size()) throw DomainError("profile does not contain the player");
  if (!player.actions.contains(x_j, 1e-12)) throw DomainError("action outside the player's set");
  const ScenarioSet& sc = *player.scenarios;
  Profile profile = x;
  profile[player.index] = x_j;

  DiscreteNominal nominal = DiscreteNominal::uniform(Vector(sc.n_xi(), 0.0));
  double total = 0.0;
  for (std::size_t i = 0; i < sc.n_theta(); ++i) {
    for (std::size_t k = 0; k < sc.n_xi(); ++k) {
      try {
        nominal.outcomes[k] = player.utility(profile, sc.xi(i, k));
      } catch (const std::exception& e) {
        throw EvaluationError("player " + std::to_string(player.index) +
                              ": utility failed at scenario (" + std::to_string(i) + ", " +
                              std::to_string(k) + "): " + e.what());
      }
    }
    total += worst_case_expectation(nominal, player.ambiguity).value;
  }
  return total / static_cast<double>(sc.n_theta());
}

struct BestResponse {
  Action action;
  double value;
};

namespace detail {

/// Maximizes f on [lo, hi]: golden section to width 1e-9, one bounded
/// parabolic step, then the endpoints; ties go to the smaller abscissa.
template <class F>
std::pair<double, double> maximize_interval(F&& f, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("empty or inverted action interval");
  if (lo == hi) return {lo, f(lo)};
  const auto br = line_search::golden_section_max(f, lo, hi, 1e-9);

  struct Cand { double x, fx; };
  std::vector<Cand> cands{{br.x, br.fx}};
  const double fa = f(br.lo);
  const double fb = f(br.hi);
  cands.push_back({br.lo, fa});
  cands.push_back({br.hi, fb});
  const double v = line_search::parabola_vertex(br.lo, fa, br.x, br.fx, br.hi, fb);
  if (std::isfinite(v) && v > lo && v < hi && v != br.x) cands.push_back({v, f(v)});
  cands.push_back({lo, f(lo)});
  cands.push_back({hi, f(hi)});

  Cand best = cands.front();
  for (const auto& c : cands)
    if (c.fx > best.fx || (c.fx == best.fx && c.x < best.x)) best = c;
  return {best.x, best.fx};
}

}  // namespace detail

/// argmax of bdro_value over the player's action set, rivals fixed. Boxes are
/// handled by cyclic coordinate ascent of the 1-D routine.
inline BestResponse best_response(const PlayerSpec& player, const Profile& x) {
  player.actions.validate();
  const ActionBox& box = player.actions;
  const std::size_t dim = box.dimension();

  Action current(dim);
  if (player.index < x.size() && x[player.index].size() == dim) {
    for (std::size_t d = 0; d < dim; ++d)
      current[d] = std::clamp(x[player.index][d], box.lower[d], box.upper[d]);
  } else {
    current = box.midpoint();
  }

  auto along = [&](std::size_t d) {
    return [&, d](double t) {
      Action y = current;
      y[d] = t;
      return bdro_value(player, y, x);
    };
  };

  if (dim == 1) {
    const auto [xs, fx] = detail::maximize_interval(along(0), box.lower[0], box.upper[0]);
    return {{xs}, fx};
  }

  double value = bdro_value(player, current, x);
  for (int sweep = 0; sweep < 100; ++sweep) {
    const double before = value;
    for (std::size_t d = 0; d < dim; ++d) {
      const auto [xs, fx] = detail::maximize_interval(along(d), box.lower[d], box.upper[d]);
      if (fx >= value) {
        current[d] = xs;
        value = fx;
      }
    }
    if (value - before < 1e-10) break;
  }
  return {current, value};
}

}  // namespace bdrne
