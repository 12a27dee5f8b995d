// Independent brute-force references used by the unit and acceptance tests.
// Nothing here calls the spatial index or the model internals.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include "chaoslab/models.hpp"
#include "chaoslab/pointproc.hpp"

namespace oracle {

using chaoslab::PointPattern;

inline double sq_dist(const PointPattern& p, std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = std::abs(a[i] - b[i]);
    if (p.window().is_torus()) d = std::min(d, 1.0 - d);
    acc += d * d;
  }
  return acc;
}

inline bool adjacent(const PointPattern& p, std::size_t i, std::size_t j, double r) {
  return sq_dist(p, p[i], p[j]) <= r * r;
}

inline std::vector<std::size_t> neighbors(const PointPattern& p, std::span<const double> q, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (sq_dist(p, q, p[i]) <= r * r) out.push_back(i);
  }
  return out;
}

/// Component label per point by repeated relaxation to the minimum index.
inline std::vector<std::size_t> component_labels(const PointPattern& p, double r) {
  std::vector<std::size_t> label(p.size());
  std::iota(label.begin(), label.end(), std::size_t{0});
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (i != j && adjacent(p, i, j, r) && label[j] < label[i]) {
          label[i] = label[j];
          changed = true;
        }
      }
    }
  }
  return label;
}

inline std::size_t component_count(const PointPattern& p, double r) {
  auto label = component_labels(p, r);
  std::sort(label.begin(), label.end());
  return static_cast<std::size_t>(std::unique(label.begin(), label.end()) - label.begin());
}

/// Number of points whose closed r-ball holds at most k points, itself included.
inline double kiso_count(const PointPattern& p, double r, int k) {
  double n = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (neighbors(p, p[i], r).size() <= static_cast<std::size_t>(k)) n += 1.0;
  }
  return n;
}

/// Ordered k-tuples of distinct points that form a whole component with
/// induced graph isomorphic to gamma. Each Gamma-component is counted k! times.
inline double gamma_tuple_count(const PointPattern& p, const chaoslab::SmallGraph& g, double r) {
  const int k = g.order();
  const std::size_t n = p.size();
  std::vector<std::size_t> degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) degree[i] += (i != j && adjacent(p, i, j, r)) ? 1 : 0;
  }
  std::vector<std::size_t> tuple(static_cast<std::size_t>(k));
  std::vector<int> perm(static_cast<std::size_t>(k));
  auto isomorphic_to_gamma = [&] {
    std::iota(perm.begin(), perm.end(), 0);
    do {
      bool same = true;
      for (int a = 0; a < k && same; ++a) {
        for (int b = a + 1; b < k; ++b) {
          if (adjacent(p, tuple[a], tuple[b], r) != g.adjacent(perm[a], perm[b])) {
            same = false;
            break;
          }
        }
      }
      if (same) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
  };
  double hits = 0.0;
  // A point of degree >= k cannot sit in a component with k vertices.
  auto rec = [&](auto&& self, int depth) -> void {
    if (depth == k) {
      for (int a = 0; a < k; ++a) {
        std::size_t inside = 0;
        for (int b = 0; b < k; ++b) inside += (a != b && adjacent(p, tuple[a], tuple[b], r)) ? 1 : 0;
        if (inside != degree[tuple[a]]) return;  // an edge leaves the tuple
      }
      hits += isomorphic_to_gamma() ? 1.0 : 0.0;
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (degree[i] >= static_cast<std::size_t>(k)) continue;
      if (std::find(tuple.begin(), tuple.begin() + depth, i) != tuple.begin() + depth) continue;
      tuple[depth] = i;
      self(self, depth + 1);
    }
  };
  rec(rec, 0);
  return hits;
}

inline double factorial(int k) { return k <= 1 ? 1.0 : k * factorial(k - 1); }

/// Box crossing by unit disks, chains of disks meeting [-s, s]^2 with centres
/// at distance <= 2.
inline bool crossing(const PointPattern& p, double s) {
  const std::size_t n = p.size();
  auto gap2 = [&](double x, double y, double x0, double x1, double y0, double y1) {
    const double dx = x - std::clamp(x, x0, x1), dy = y - std::clamp(y, y0, y1);
    return dx * dx + dy * dy;
  };
  std::vector<char> in(n), seen(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    in[i] = gap2(p[i][0], p[i][1], -s, s, -s, s) <= 1.0;
    if (in[i] && gap2(p[i][0], p[i][1], -s, -s, -s, s) <= 1.0) {
      seen[i] = 1;
      stack.push_back(i);
    }
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (gap2(p[i][0], p[i][1], s, s, -s, s) <= 1.0) return true;
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && in[j] && sq_dist(p, p[i], p[j]) <= 4.0) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return false;
}

/// Points whose removal destroys the crossing.
inline std::vector<std::size_t> pivotal_by_removal(const PointPattern& p, double s) {
  std::vector<std::size_t> out;
  if (!crossing(p, s)) return out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!crossing(p.without(i), s)) out.push_back(i);
  }
  return out;
}

/// Chi-square goodness of fit of integer counts against Poisson(mean), with
/// cells merged so each expected count is at least 5. Returns the p-value.
inline double poisson_chi_square_p(const std::vector<std::size_t>& counts, double mean) {
  const boost::math::poisson_distribution<double> pois(mean);
  const double n = static_cast<double>(counts.size());
  std::size_t top = 0;
  for (auto c : counts) top = std::max(top, c);
  std::vector<double> observed(top + 1, 0.0);
  for (auto c : counts) observed[c] += 1.0;
  // Cells [lo, hi] merged left to right; the last cell absorbs the upper tail.
  std::vector<double> obs_cells, exp_cells;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    o += observed[k];
    e += n * boost::math::pdf(pois, static_cast<double>(k));
    if (e >= 5.0) {
      obs_cells.push_back(o);
      exp_cells.push_back(e);
      o = e = 0.0;
    }
  }
  e += n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(top)));
  if (obs_cells.empty()) return 1.0;
  obs_cells.back() += o;
  exp_cells.back() += e;
  double stat = 0.0;
  for (std::size_t i = 0; i < obs_cells.size(); ++i) {
    stat += (obs_cells[i] - exp_cells[i]) * (obs_cells[i] - exp_cells[i]) / exp_cells[i];
  }
  const double dof = static_cast<double>(obs_cells.size()) - 1.0;
  if (dof < 1.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), stat));
}

}  // namespace oracle
