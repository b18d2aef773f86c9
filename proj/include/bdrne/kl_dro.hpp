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

// Worst-case expectation over a KL ball around a discrete nominal law.
//
//   min_{Q : KL(Q || W) <= eps} E_Q[u]
//     = -min_{lambda > 0} { lambda eps + lambda ln sum_k w_k exp(-u_k / lambda) }
//
// worst_case_expectation solves the right-hand side (a convex problem in
// lambda); worst_case_simplex_oracle solves the left-hand side directly by
// driving the KL constraint of the exponentially tilted law to equality.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdrne/errors.hpp"
#include "bdrne/line_search.hpp"
#include "bdrne/stochastics.hpp"

namespace bdrne {

struct DiscreteNominal {
  Vector outcomes;
  Vector weights;

  static DiscreteNominal uniform(Vector outcomes) {
    const std::size_t n = outcomes.size();
    if (n == 0) throw DomainError("nominal distribution must be nonempty");
    return {std::move(outcomes), Vector(n, 1.0 / static_cast<double>(n))};
  }

  void validate() const {
    if (outcomes.empty()) throw DomainError("nominal distribution must be nonempty");
    if (outcomes.size() != weights.size()) throw DomainError("outcome/weight size mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw DomainError("nominal weights must be nonnegative");
      s += w;
    }
    const double tol = 1e-12 + 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(weights.size());
    if (std::abs(s - 1.0) > tol) throw DomainError("nominal weights must sum to 1");
    for (double u : outcomes)
      if (!std::isfinite(u)) throw DomainError("nominal outcomes must be finite");
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) m += weights[k] * outcomes[k];
    return m;
  }
};

struct AmbiguitySpec {
  double epsilon = 0.0;

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
      throw DomainError("KL radius must be a finite nonnegative number");
  }
};

enum class DualStatus { converged, boundary, degenerate_constant };

inline const char* to_string(DualStatus s) {
  switch (s) {
    case DualStatus::converged: return "converged";
    case DualStatus::boundary: return "boundary";
    case DualStatus::degenerate_constant: return "degenerate-constant";
  }
  return "?";
}

struct DualSolveResult {
  std::optional<double> lambda_star;  // empty: the lambda -> infinity limit
  double value = 0.0;
  Vector tilted_weights;
  std::size_t iterations = 0;
  DualStatus status = DualStatus::converged;
};

inline constexpr double kLambdaMin = 1e-8;
inline constexpr double kLambdaMax = 1e8;

namespace detail {

/// Moments of v = u - min u under the law proportional to w exp(-v / lambda).
struct TiltMoments {
  double log_z;   // ln sum_k w_k exp(-v_k / lambda)
  double mean_v;  // tilted mean of v
  double var_v;   // tilted variance of v
};

inline TiltMoments tilt_moments(double lambda, std::span<const double> u, std::span<const double> w,
                                double u_min, double w_sum) {
  // sum w (e^{-v/l} - 1) through expm1 keeps ln Z accurate when lambda is large.
  double dz = 0.0, z = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double v = u[k] - u_min;
    const double x = -v / lambda;
    const double em1 = std::expm1(x);
    const double e = em1 + 1.0;
    dz += w[k] * em1;
    z += w[k] * e;
    s1 += w[k] * e * v;
    s2 += w[k] * e * v * v;
  }
  const double mean_v = s1 / z;
  return {std::log1p(dz / w_sum), mean_v, std::max(s2 / z - mean_v * mean_v, 0.0)};
}

struct Spread {
  double lo;
  double hi;
};

inline Spread spread_of(std::span<const double> u) {
  const auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return {*lo, *hi};
}

}  // namespace detail

/// lambda eps + lambda ln sum_k w_k exp(-u_k / lambda), evaluated with the
/// minimum outcome factored out of the exponent.
inline double dual_objective(double lambda, const DiscreteNominal& nominal, AmbiguitySpec eps) {
  if (!(lambda > 0.0)) throw DomainError("dual multiplier must be positive");
  const double w_sum = std::accumulate(nominal.weights.begin(), nominal.weights.end(), 0.0);
  const double m = detail::spread_of(nominal.outcomes).lo;
  const auto mom = detail::tilt_moments(lambda, nominal.outcomes, nominal.weights, m, w_sum);
  return lambda * eps.epsilon - m + lambda * mom.log_z;
}

/// Solves the one-dimensional dual in s = ln(lambda) over [1e-8, 1e8]: a
/// coarse golden-section pass locates the basin, then Newton steps on the
/// dual derivative polish it inside a sign-change bracket.
inline DualSolveResult worst_case_expectation(const DiscreteNominal& nominal, AmbiguitySpec eps) {
  nominal.validate();
  eps.validate();
  const auto& u = nominal.outcomes;
  const auto& w = nominal.weights;
  const double w_sum = std::accumulate(w.begin(), w.end(), 0.0);
  const auto [m, top] = detail::spread_of(u);

  DualSolveResult out;
  if (top - m < 1e-14) {
    out.value = m;
    out.tilted_weights = w;
    out.status = DualStatus::degenerate_constant;
    return out;
  }
  if (eps.epsilon == 0.0) {
    out.value = nominal.mean();
    out.tilted_weights = w;
    out.status = DualStatus::boundary;
    return out;
  }

  // g(lambda) + m = lambda eps + lambda ln Z ; g'(lambda) = eps + ln Z + E[v] / lambda.
  auto shifted = [&](double lambda) {
    return lambda * eps.epsilon + lambda * detail::tilt_moments(lambda, u, w, m, w_sum).log_z;
  };
  auto derivative = [&](double lambda, double& second) {
    const auto mom = detail::tilt_moments(lambda, u, w, m, w_sum);
    second = mom.var_v / (lambda * lambda * lambda);
    return eps.epsilon + mom.log_z + mom.mean_v / lambda;
  };

  const double s_min = std::log(kLambdaMin);
  const double s_max = std::log(kLambdaMax);
  double curvature = 0.0;
  std::size_t iters = 0;
  double lambda = 0.0;

  if (derivative(kLambdaMin, curvature) >= 0.0) {
    lambda = kLambdaMin;
    out.status = DualStatus::boundary;
  } else if (derivative(kLambdaMax, curvature) <= 0.0) {
    lambda = kLambdaMax;
    out.status = DualStatus::boundary;
  } else {
    auto g_of_s = [&](double s) { return shifted(std::exp(s)); };
    const auto coarse = line_search::golden_section_min(g_of_s, s_min, s_max, 1.0);
    iters = coarse.evaluations;
    double lo = s_min, hi = s_max;
    double s = coarse.x;
    for (int it = 0; it < 200; ++it) {
      ++iters;
      lambda = std::exp(s);
      const double d = derivative(lambda, curvature);
      if (d == 0.0) break;
      if (d > 0.0) hi = s; else lo = s;
      // d/ds g = lambda g', d2/ds2 g = lambda g' + lambda^2 g''.
      const double denom = d + lambda * curvature;
      double next = denom > 0.0 ? s - d / denom : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - s);
      s = next;
      if (step < 1e-12 || hi - lo < 1e-13) break;
    }
    lambda = std::exp(s);
    out.status = DualStatus::converged;
  }

  out.lambda_star = lambda;
  out.iterations = iters;
  const double dual_min = shifted(lambda) - m;
  out.value = std::clamp(-dual_min, m, nominal.mean());

  out.tilted_weights.resize(u.size());
  double z = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    out.tilted_weights[k] = w[k] * std::exp(-(u[k] - m) / lambda);
    z += out.tilted_weights[k];
  }
  for (double& t : out.tilted_weights) t /= z;
  return out;
}

struct OracleResult {
  double value;
  Vector worst;
};

/// Primal route: find lambda with KL(p(lambda) || w) = eps for the tilted law
/// p(lambda)_k proportional to w_k exp(-u_k / lambda), by bisection on
/// ln(lambda). When even concentrating on the minimizers is feasible, returns
/// that solution (a point mass on the lowest-index minimizer when its own KL
/// fits in the ball).
inline OracleResult worst_case_simplex_oracle(const DiscreteNominal& nominal, AmbiguitySpec eps) {
  nominal.validate();
  eps.validate();
  const auto& u = nominal.outcomes;
  const auto& w = nominal.weights;
  if (u.size() > 10000) throw DomainError("simplex oracle is capped at 1e4 outcomes");
  if (eps.epsilon == 0.0) return {nominal.mean(), w};

  const auto [m, top] = detail::spread_of(u);
  if (top - m < 1e-14) return {nominal.mean(), w};

  double w_min_set = 0.0;
  std::size_t first_min = u.size();
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (u[k] == m) {
      w_min_set += w[k];
      if (first_min == u.size() && w[k] > 0.0) first_min = k;
    }
  }
  if (w_min_set > 0.0 && eps.epsilon >= -std::log(w_min_set)) {
    Vector worst(u.size(), 0.0);
    if (eps.epsilon >= -std::log(w[first_min])) {
      worst[first_min] = 1.0;
    } else {
      for (std::size_t k = 0; k < u.size(); ++k)
        if (u[k] == m) worst[k] = w[k] / w_min_set;
    }
    return {m, std::move(worst)};
  }

  const double spread = top - m;
  auto tilted = [&](double t) {
    const double lambda = spread * std::exp(t);
    Vector p(u.size());
    double z = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
      p[k] = w[k] * std::exp(-(u[k] - m) / lambda);
      z += p[k];
    }
    for (double& x : p) x /= z;
    return p;
  };
  auto kl_of = [&](const Vector& p) {
    double kl = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
      if (p[k] > 0.0) kl += p[k] * std::log(p[k] / w[k]);
    return kl;
  };

  // KL(p(lambda) || w) decreases from -ln(w_min_set) to 0 as lambda grows.
  double t_lo = -40.0, t_hi = 40.0;
  while (kl_of(tilted(t_lo)) < eps.epsilon && t_lo > -700.0) t_lo -= 40.0;
  while (kl_of(tilted(t_hi)) > eps.epsilon && t_hi < 700.0) t_hi += 40.0;
  Vector p = tilted(0.5 * (t_lo + t_hi));
  for (int it = 0; it < 400; ++it) {
    const double t = 0.5 * (t_lo + t_hi);
    p = tilted(t);
    const double r = kl_of(p) - eps.epsilon;
    if (std::abs(r) <= 1e-12) break;
    if (r > 0.0) t_lo = t; else t_hi = t;
    if (t_hi - t_lo < 1e-15) break;
  }
  double value = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) value += p[k] * u[k];
  return {value, std::move(p)};
}

}  // namespace bdrne
