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

// Gauss-Seidel best-response iteration, the Nikaido-Isoda equilibrium gap and
// the model variants derived from one game.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "bdrne/bdro.hpp"
#include "bdrne/errors.hpp"

namespace bdrne {

enum class Variant { bdrne, bane, drne_empirical, empirical_ne };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::bdrne: return "bdrne";
    case Variant::bane: return "bane";
    case Variant::drne_empirical: return "drne_empirical";
    case Variant::empirical_ne: return "empirical_ne";
  }
  return "?";
}

struct GameInstance {
  std::vector<PlayerSpec> players;
  Variant variant = Variant::bdrne;
  std::uint64_t seed = 0;
  /// Optional post-solve check of the action sets at the solution; returns
  /// one flag per player, true when the player's action violates it.
  std::function<std::vector<bool>(const Profile&)> interval_check;

  std::size_t size() const { return players.size(); }

  void validate() const {
    if (players.empty()) throw ConfigError("game needs at least one player");
    for (std::size_t j = 0; j < players.size(); ++j) {
      if (players[j].index != j) throw ConfigError("player indices must be 0..n-1 in order");
      players[j].actions.validate();
    }
  }
};

enum class EquilibriumStatus { converged, max_iter, cycle_detected };

inline const char* to_string(EquilibriumStatus s) {
  switch (s) {
    case EquilibriumStatus::converged: return "converged";
    case EquilibriumStatus::max_iter: return "max_iter";
    case EquilibriumStatus::cycle_detected: return "cycle_detected";
  }
  return "?";
}

struct EquilibriumResult {
  Profile point;
  Vector values;
  double gap = 0.0;
  std::size_t iterations = 0;
  Vector step_norms;            // squared step per sweep
  Vector response_gains;        // value after minus before, per best-response step
  EquilibriumStatus status = EquilibriumStatus::max_iter;
  std::vector<bool> interval_flags;

  bool interval_flagged() const {
    for (bool f : interval_flags)
      if (f) return true;
    return false;
  }
};

struct SolverOptions {
  double tol = 1e-10;  // on the squared step norm
  std::size_t max_iter = 200;
  std::size_t cycle_window = 20;
};

inline Profile default_start(const GameInstance& game) {
  Profile x;
  for (const auto& p : game.players) x.push_back(p.actions.midpoint());
  return x;
}

inline double squared_distance(const Profile& a, const Profile& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    for (std::size_t d = 0; d < a[j].size(); ++d) s += (a[j][d] - b[j][d]) * (a[j][d] - b[j][d]);
  return s;
}

/// sum_j [ max_y bdro_value_j(y, x_-j) - bdro_value_j(x_j, x_-j) ]. Zero exactly
/// at an equilibrium.
inline double ni_gap(const GameInstance& game, const Profile& x) {
  game.validate();
  double gap = 0.0;
  for (const auto& player : game.players) {
    const double best = best_response(player, x).value;
    gap += best - bdro_value(player, x[player.index], x);
  }
  return gap;
}

/// Cyclic best-response sweeps; player j sees the actions already updated in
/// the current sweep. Stops once the squared step is <= tol.
inline EquilibriumResult gauss_seidel(const GameInstance& game, Profile x0,
                                      const SolverOptions& opt = {}) {
  game.validate();
  if (!(opt.tol > 0.0)) throw DomainError("tolerance must be positive");
  if (x0.size() != game.size()) throw DomainError("starting point has wrong player count");
  for (const auto& p : game.players)
    if (!p.actions.contains(x0[p.index], 1e-12)) throw DomainError("starting point is infeasible");

  EquilibriumResult res;
  Profile x = std::move(x0);
  double best_step = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  res.status = EquilibriumStatus::max_iter;

  for (std::size_t sweep = 1; sweep <= opt.max_iter; ++sweep) {
    const Profile previous = x;
    for (const auto& player : game.players) {
      try {
        const double before = bdro_value(player, x[player.index], x);
        BestResponse br = best_response(player, x);
        res.response_gains.push_back(br.value - before);
        x[player.index] = std::move(br.action);
      } catch (const std::exception& e) {
        throw EvaluationError("best response failed for player " + std::to_string(player.index) +
                              " in sweep " + std::to_string(sweep) + ": " + e.what());
      }
    }
    const double step = squared_distance(x, previous);
    res.step_norms.push_back(step);
    res.iterations = sweep;
    if (step <= opt.tol) {
      res.status = EquilibriumStatus::converged;
      break;
    }
    if (step < best_step) {
      best_step = step;
      stale = 0;
    } else if (++stale >= opt.cycle_window) {
      res.status = EquilibriumStatus::cycle_detected;
      break;
    }
  }

  res.point = x;
  for (const auto& player : game.players) res.values.push_back(bdro_value(player, x[player.index], x));
  res.gap = ni_gap(game, x);
  if (game.interval_check) res.interval_flags = game.interval_check(x);
  return res;
}

inline EquilibriumResult gauss_seidel(const GameInstance& game, const SolverOptions& opt = {}) {
  return gauss_seidel(game, default_start(game), opt);
}

/// Derives a model variant from a (bdrne) game:
///   bane            all radii set to zero, scenarios kept;
///   drne_empirical  nominal = empirical law of the raw data, radius eps_hat;
///   empirical_ne    as drne_empirical with radius zero.
inline GameInstance build_variant(const GameInstance& base, Variant variant, double eps_hat = 0.0) {
  GameInstance g = base;
  g.variant = variant;
  switch (variant) {
    case Variant::bdrne:
      break;
    case Variant::bane:
      for (auto& p : g.players) p.ambiguity.epsilon = 0.0;
      break;
    case Variant::drne_empirical:
    case Variant::empirical_ne: {
      const AmbiguitySpec radius{variant == Variant::empirical_ne ? 0.0 : eps_hat};
      radius.validate();
      for (auto& p : g.players) {
        if (!p.raw_data || p.raw_data->empty())
          throw ConfigError("player " + std::to_string(p.index) +
                            " has no raw data for an empirical variant");
        p.scenarios = std::make_shared<const ScenarioSet>(ScenarioSet::empirical(*p.raw_data));
        p.ambiguity = radius;
      }
      break;
    }
  }
  return g;
}

}  // namespace bdrne
