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

// Parametric families, conjugate Gamma-rate posteriors, univariate densities
// and KL divergence by adaptive quadrature.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>

#include "bdrne/errors.hpp"

namespace bdrne {

using Vector = std::vector<double>;

/// Seeded generator passed explicitly to every sampling routine.
using Rng = std::mt19937_64;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class FamilyId {
  gamma_known_shape,        // product of Gamma(k, rate theta_d)
  piecewise_unit_interval,  // uniform/tent mixture on [0,1], theta = tent center
  discrete_finite,          // theta = probability vector over {0, ..., m-1}
};

struct ParametricFamily {
  FamilyId id = FamilyId::gamma_known_shape;
  double fixed_shape = 1.0;
  std::size_t dimension = 1;

  static ParametricFamily gamma(double shape, std::size_t dimension) {
    if (!(shape > 0.0) || dimension == 0)
      throw DomainError("gamma family needs shape > 0 and dimension >= 1");
    return {FamilyId::gamma_known_shape, shape, dimension};
  }
  static ParametricFamily tent() { return {FamilyId::piecewise_unit_interval, 1.0, 1}; }
  static ParametricFamily discrete() { return {FamilyId::discrete_finite, 1.0, 1}; }
};

namespace detail {

inline double tent_pdf(double center, double t) {
  if (t < 0.0 || t > 1.0) return 0.0;
  const double left = center - 0.25;
  if (t < left || t > center + 0.25) return 0.5;
  if (t <= center) return 8.0 * (t - left) + 0.5;
  return -8.0 * (t - left) + 4.5;
}

inline void check_tent_center(double center) {
  if (!(center >= 0.25 && center <= 0.75))
    throw DomainError("tent center must lie in [1/4, 3/4]");
}

inline void check_gamma_theta(const ParametricFamily& family,
                              std::span<const double> theta) {
  if (theta.size() != family.dimension)
    throw DomainError("theta dimension does not match family");
  for (double t : theta)
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("gamma rate must be positive");
}

inline void check_probability_vector(std::span<const double> w) {
  if (w.empty()) throw DomainError("discrete family needs a nonempty probability vector");
  double s = 0.0;
  for (double v : w) {
    if (!(v >= 0.0)) throw DomainError("negative probability");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("probabilities must sum to 1");
}

}  // namespace detail

/// ln f(xi | theta). Returns -inf when the density underflows or vanishes
/// inside the support; throws DomainError for xi outside the support.
inline double log_density(const ParametricFamily& family,
                          std::span<const double> theta,
                          std::span<const double> xi) {
  switch (family.id) {
    case FamilyId::gamma_known_shape: {
      detail::check_gamma_theta(family, theta);
      if (xi.size() != family.dimension) throw DomainError("xi dimension does not match family");
      const double k = family.fixed_shape;
      double total = 0.0;
      for (std::size_t d = 0; d < xi.size(); ++d) {
        if (!(xi[d] >= 0.0) || !std::isfinite(xi[d]))
          throw DomainError("gamma observation outside [0, inf)");
        double log_xi_term = 0.0;
        if (k != 1.0) {
          if (xi[d] == 0.0) return k > 1.0 ? -kInf : kInf;
          log_xi_term = (k - 1.0) * std::log(xi[d]);
        }
        total += k * std::log(theta[d]) - std::lgamma(k) + log_xi_term - theta[d] * xi[d];
      }
      return total;
    }
    case FamilyId::piecewise_unit_interval: {
      if (theta.size() != 1 || xi.size() != 1) throw DomainError("tent family is one-dimensional");
      detail::check_tent_center(theta[0]);
      if (!(xi[0] >= 0.0 && xi[0] <= 1.0)) throw DomainError("tent observation outside [0, 1]");
      return std::log(detail::tent_pdf(theta[0], xi[0]));
    }
    case FamilyId::discrete_finite: {
      detail::check_probability_vector(theta);
      if (xi.size() != 1) throw DomainError("discrete observation is a single index");
      const double idx = xi[0];
      if (!(idx >= 0.0) || idx != std::floor(idx) || idx >= static_cast<double>(theta.size()))
        throw DomainError("discrete observation outside {0, ..., m-1}");
      return std::log(theta[static_cast<std::size_t>(idx)]);
    }
  }
  throw DomainError("unknown family");
}

/// n i.i.d. draws from f(. | theta).
inline std::vector<Vector> sample(const ParametricFamily& family,
                                  std::span<const double> theta, Rng& rng,
                                  std::size_t n) {
  if (n == 0) throw DomainError("sample count must be >= 1");
  std::vector<Vector> out;
  out.reserve(n);
  switch (family.id) {
    case FamilyId::gamma_known_shape: {
      detail::check_gamma_theta(family, theta);
      std::vector<std::gamma_distribution<double>> dists;
      for (double t : theta) dists.emplace_back(family.fixed_shape, 1.0 / t);
      for (std::size_t i = 0; i < n; ++i) {
        Vector xi(family.dimension);
        for (std::size_t d = 0; d < family.dimension; ++d) xi[d] = dists[d](rng);
        out.push_back(std::move(xi));
      }
      break;
    }
    case FamilyId::piecewise_unit_interval: {
      if (theta.size() != 1) throw DomainError("tent family is one-dimensional");
      detail::check_tent_center(theta[0]);
      // Equal mixture of U[0,1] and the triangle on [c - 1/4, c + 1/4].
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double pick = u01(rng);
        const double a = u01(rng);
        const double b = u01(rng);
        out.push_back({pick < 0.5 ? a : theta[0] - 0.25 + 0.25 * (a + b)});
      }
      break;
    }
    case FamilyId::discrete_finite: {
      detail::check_probability_vector(theta);
      std::discrete_distribution<std::size_t> dist(theta.begin(), theta.end());
      for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<double>(dist(rng))});
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conjugate posterior over Gamma rates (known shape).

struct GammaHyper {
  double a;  // shape
  double b;  // rate
};

/// Posterior over theta = (theta_1, ..., theta_D), independent Gamma(a_d, b_d)
/// per dimension, for a Gamma(k, theta_d) likelihood with known shape k.
struct PosteriorState {
  double likelihood_shape = 1.0;
  std::vector<GammaHyper> hyper;
  std::size_t observation_count = 0;
  Vector sufficient_stat;  // running sum of observations per dimension

  static PosteriorState from_prior(double likelihood_shape, std::vector<GammaHyper> prior) {
    if (!(likelihood_shape > 0.0)) throw DomainError("likelihood shape must be positive");
    if (prior.empty()) throw DomainError("prior needs at least one dimension");
    for (const auto& h : prior)
      if (!(h.a > 0.0) || !(h.b > 0.0)) throw DomainError("prior hyperparameters must be positive");
    PosteriorState s;
    s.likelihood_shape = likelihood_shape;
    s.sufficient_stat.assign(prior.size(), 0.0);
    s.hyper = std::move(prior);
    return s;
  }

  std::size_t dimension() const { return hyper.size(); }

  /// Posterior mean a/b per dimension.
  Vector mean() const {
    Vector m;
    for (const auto& h : hyper) m.push_back(h.a / h.b);
    return m;
  }

  ParametricFamily likelihood() const {
    return ParametricFamily::gamma(likelihood_shape, dimension());
  }
};

/// (a, b) -> (a + k N, b + sum xi) per dimension. Observations are added one
/// at a time, so updating with A then B gives bit-identical hyperparameters
/// to updating with A followed by B in one call.
inline PosteriorState posterior_update(const PosteriorState& state,
                                       std::span<const Vector> data) {
  for (const auto& xi : data) {
    if (xi.size() != state.dimension()) throw DomainError("observation dimension mismatch");
    for (double v : xi)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw DomainError("gamma observation outside [0, inf)");
  }
  PosteriorState next = state;
  for (const auto& xi : data) {
    for (std::size_t d = 0; d < xi.size(); ++d) {
      next.hyper[d].a += state.likelihood_shape;
      next.hyper[d].b += xi[d];
      next.sufficient_stat[d] += xi[d];
    }
    ++next.observation_count;
  }
  return next;
}

/// n_theta i.i.d. draws theta_d ~ Gamma(a_d, rate b_d).
inline std::vector<Vector> sample_posterior(const PosteriorState& state, Rng& rng,
                                            std::size_t n_theta) {
  if (n_theta == 0) throw DomainError("posterior sample count must be >= 1");
  std::vector<std::gamma_distribution<double>> dists;
  for (const auto& h : state.hyper) dists.emplace_back(h.a, 1.0 / h.b);
  std::vector<Vector> out;
  out.reserve(n_theta);
  for (std::size_t i = 0; i < n_theta; ++i) {
    Vector theta(state.dimension());
    for (std::size_t d = 0; d < theta.size(); ++d) theta[d] = dists[d](rng);
    out.push_back(std::move(theta));
  }
  return out;
}

/// Quantile of the posterior predictive marginal of xi_d. With
/// xi | theta ~ Gamma(k, theta) and theta ~ Gamma(a, b), xi / (xi + b) is
/// Beta(k, a).
inline double predictive_quantile(const PosteriorState& state, std::size_t dim, double prob) {
  if (dim >= state.dimension()) throw DomainError("dimension out of range");
  if (!(prob > 0.0 && prob < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
  const auto& h = state.hyper[dim];
  const boost::math::beta_distribution<double> beta(state.likelihood_shape, h.a);
  const double u = boost::math::quantile(beta, prob);
  return h.b * u / (1.0 - u);
}

/// Quantile of Gamma(shape, rate).
inline double gamma_quantile(double shape, double rate, double prob) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("gamma parameters must be positive");
  const boost::math::gamma_distribution<double> g(shape, 1.0 / rate);
  return boost::math::quantile(g, prob);
}

// ---------------------------------------------------------------------------
// Univariate densities for KL quadrature.

struct GammaDensity {
  double shape;
  double rate;

  double pdf(double x) const {
    if (x < 0.0) return 0.0;
    if (x == 0.0) return shape == 1.0 ? rate : (shape < 1.0 ? kInf : 0.0);
    return std::exp(shape * std::log(rate) - std::lgamma(shape) +
                    (shape - 1.0) * std::log(x) - rate * x);
  }
  double lower() const { return 0.0; }
  double upper() const { return kInf; }
  double quantile(double p) const { return gamma_quantile(shape, rate, p); }
  std::vector<double> breakpoints() const { return {}; }
};

struct UniformDensity {
  double lo = 0.0;
  double hi = 1.0;

  double pdf(double x) const { return (x < lo || x > hi) ? 0.0 : 1.0 / (hi - lo); }
  double lower() const { return lo; }
  double upper() const { return hi; }
  std::vector<double> breakpoints() const { return {}; }
};

/// Uniform/tent mixture on [0, 1]: 1/2 off the tent, linear up to 5/2 at the
/// center and back down over [center - 1/4, center + 1/4].
struct TentDensity {
  double center;

  explicit TentDensity(double c) : center(c) { detail::check_tent_center(c); }

  double pdf(double x) const { return detail::tent_pdf(center, x); }
  double lower() const { return 0.0; }
  double upper() const { return 1.0; }
  std::vector<double> breakpoints() const { return {center - 0.25, center, center + 0.25}; }
};

/// Piecewise-linear density through (node, value) pairs.
class DensityGrid {
 public:
  DensityGrid(Vector nodes, Vector values) : nodes_(std::move(nodes)), values_(std::move(values)) {
    if (nodes_.size() < 2 || nodes_.size() != values_.size())
      throw DomainError("density grid needs >= 2 nodes with matching values");
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      if (!(nodes_[i] > nodes_[i - 1])) throw DomainError("grid nodes must be strictly increasing");
    for (double v : values_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("grid values must be nonnegative");
  }

  /// Builds a grid and checks that it integrates to 1 within 1e-6.
  static DensityGrid probability(Vector nodes, Vector values) {
    DensityGrid g(std::move(nodes), std::move(values));
    if (std::abs(g.trapezoid_mass() - 1.0) > 1e-6)
      throw DomainError("density grid does not integrate to 1");
    return g;
  }

  template <class Pdf>
  static DensityGrid sample_pdf(Pdf&& pdf, double lo, double hi, std::size_t n) {
    Vector x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
      y[i] = pdf(x[i]);
    }
    return DensityGrid(std::move(x), std::move(y));
  }

  double pdf(double x) const {
    if (x < nodes_.front() || x > nodes_.back()) return 0.0;
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    if (it == nodes_.end()) return values_.back();
    const auto i = static_cast<std::size_t>(it - nodes_.begin());
    const double t = (x - nodes_[i - 1]) / (nodes_[i] - nodes_[i - 1]);
    return (1.0 - t) * values_[i - 1] + t * values_[i];
  }
  double lower() const { return nodes_.front(); }
  double upper() const { return nodes_.back(); }
  std::vector<double> breakpoints() const { return nodes_; }

  double trapezoid_mass() const {
    double s = 0.0;
    for (std::size_t i = 1; i < nodes_.size(); ++i)
      s += 0.5 * (values_[i] + values_[i - 1]) * (nodes_[i] - nodes_[i - 1]);
    return s;
  }

  const Vector& nodes() const { return nodes_; }
  const Vector& values() const { return values_; }

 private:
  Vector nodes_;
  Vector values_;
};

template <class D>
concept Density = requires(const D& d, double x) {
  { d.pdf(x) } -> std::convertible_to<double>;
  { d.lower() } -> std::convertible_to<double>;
  { d.upper() } -> std::convertible_to<double>;
  { d.breakpoints() } -> std::convertible_to<std::vector<double>>;
};

namespace detail {

template <class F>
double trapezoid_recurse(F& f, double a, double fa, double b, double fb, double whole,
                         double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double left = 0.25 * (b - a) * (fa + fm);
  const double right = 0.25 * (b - a) * (fm + fb);
  const double refined = left + right;
  const double err = (refined - whole) / 3.0;
  if (depth <= 0 || (depth < 44 && std::abs(err) <= tol)) return refined + err;
  return trapezoid_recurse(f, a, fa, m, fm, left, 0.5 * tol, depth - 1) +
         trapezoid_recurse(f, m, fm, b, fb, right, 0.5 * tol, depth - 1);
}

template <Density D>
double tail_lower(const D& d) {
  if constexpr (requires { d.quantile(0.5); }) return std::max(d.lower(), d.quantile(1e-10));
  else return d.lower();
}

template <Density D>
double tail_upper(const D& d) {
  if constexpr (requires { d.quantile(0.5); }) return std::min(d.upper(), d.quantile(1.0 - 1e-10));
  else return d.upper();
}

}  // namespace detail

/// Adaptive trapezoid rule on [a, b]. Each panel is bisected until halving
/// changes its trapezoid estimate by at most its share of
/// rel_tol * (integral of |f|); accepted panels carry the Richardson
/// correction. Panels are forced down to 2^-6 of the range first.
template <class F>
double adaptive_trapezoid(F&& f, double a, double b, double rel_tol = 1e-8) {
  if (!(b > a)) return 0.0;
  constexpr int kCoarse = 64;
  Vector xs(kCoarse + 1), fs(kCoarse + 1);
  double scale = 0.0;
  for (int i = 0; i <= kCoarse; ++i) {
    xs[i] = a + (b - a) * i / kCoarse;
    fs[i] = f(xs[i]);
  }
  for (int i = 0; i < kCoarse; ++i)
    scale += 0.5 * (std::abs(fs[i]) + std::abs(fs[i + 1])) * (xs[i + 1] - xs[i]);
  const double tol = std::max(rel_tol * scale, 1e-15) / kCoarse;
  double total = 0.0;
  for (int i = 0; i < kCoarse; ++i) {
    const double whole = 0.5 * (xs[i + 1] - xs[i]) * (fs[i] + fs[i + 1]);
    total += detail::trapezoid_recurse(f, xs[i], fs[i], xs[i + 1], fs[i + 1], whole, tol, 48);
  }
  return total;
}

/// KL(p || q) = integral of p ln(p / q), by adaptive trapezoid on the union of
/// both breakpoint sets. Unbounded supports are truncated at the 1e-10 and
/// 1 - 1e-10 quantiles (widest of the two). Returns +inf if q vanishes where
/// p does not.
template <Density P, Density Q>
double kl_divergence(const P& p, const Q& q, double rel_tol = 1e-8) {
  const double lo = std::max(p.lower(), std::min(detail::tail_lower(p), detail::tail_lower(q)));
  const double hi = std::min(p.upper(), std::max(detail::tail_upper(p), detail::tail_upper(q)));
  if (!(hi > lo)) throw DomainError("empty integration domain");

  bool infinite = false;
  auto integrand = [&](double x) {
    const double px = p.pdf(x);
    if (!(px > 0.0)) return 0.0;
    const double qx = q.pdf(x);
    if (!(qx > 0.0)) {
      infinite = true;
      return 0.0;
    }
    return px * (std::log(px) - std::log(qx));
  };

  std::vector<double> cuts{lo, hi};
  for (double c : p.breakpoints())
    if (c > lo && c < hi) cuts.push_back(c);
  for (double c : q.breakpoints())
    if (c > lo && c < hi) cuts.push_back(c);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  double total = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i)
    total += adaptive_trapezoid(integrand, cuts[i - 1], cuts[i], rel_tol);
  if (infinite) return kInf;
  return std::max(total, 0.0);
}

/// Closed-form KL between two Gamma laws of equal shape:
/// k (ln(theta_p / theta_q) + theta_q / theta_p - 1).
inline double kl_divergence_closed_form(const GammaDensity& p, const GammaDensity& q) {
  if (p.shape != q.shape) throw DomainError("closed-form gamma KL requires equal shapes");
  return p.shape * (std::log(p.rate / q.rate) + q.rate / p.rate - 1.0);
}

}  // namespace bdrne
