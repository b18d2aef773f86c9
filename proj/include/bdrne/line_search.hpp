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

// One-dimensional derivative-free search on a closed interval.

#include <cmath>
#include <cstddef>

namespace bdrne::line_search {

inline constexpr double kInvPhi = 0.6180339887498948482;  // (sqrt(5) - 1) / 2

struct Bracket {
  double lo;
  double hi;
  double x;   // best point found
  double fx;  // value at x
  std::size_t evaluations = 0;
};

/// Golden-section search for a maximum of a unimodal `f` on [lo, hi].
/// Shrinks the bracket until its width is <= `width`. When the two interior
/// values tie, the lower half is kept.
template <class F>
Bracket golden_section_max(F&& f, double lo, double hi, double width,
                           std::size_t max_evaluations = 400) {
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  std::size_t evals = 2;
  while (b - a > width && evals < max_evaluations) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
    ++evals;
  }
  Bracket out{a, b, c, fc, evals};
  if (fd > fc) {
    out.x = d;
    out.fx = fd;
  }
  return out;
}

/// Same search for a minimum.
template <class F>
Bracket golden_section_min(F&& f, double lo, double hi, double width,
                           std::size_t max_evaluations = 400) {
  auto neg = [&f](double x) { return -f(x); };
  Bracket b = golden_section_max(neg, lo, hi, width, max_evaluations);
  b.fx = -b.fx;
  return b;
}

/// Vertex of the parabola through (x0,f0), (x1,f1), (x2,f2). Returns NaN
/// when the points are collinear.
inline double parabola_vertex(double x0, double f0, double x1, double f1,
                              double x2, double f2) {
  const double d10 = (x1 - x0) * (f1 - f2);
  const double d12 = (x1 - x2) * (f1 - f0);
  const double den = 2.0 * (d10 - d12);
  if (den == 0.0 || !std::isfinite(den)) return std::nan("");
  return x1 - ((x1 - x0) * d10 - (x1 - x2) * d12) / den;
}

}  // namespace bdrne::line_search
