#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "chaoslab/error.hpp"
#include "chaoslab/geometry.hpp"
#include "chaoslab/models.hpp"

namespace chaoslab {

namespace {

constexpr double kDiskRadius = 1.0;
constexpr double kLinkDistance = 2.0 * kDiskRadius;

double clamp_to(double v, double s) { return std::clamp(v, -s, s); }

}  // namespace

CrossingFunctional::CrossingFunctional(double s, bool clipped) : s_(s), clipped_(clipped) {
  CHAOSLAB_REQUIRE(std::isfinite(s) && s > 1.0, "crossing box half-side must exceed 1");
}

Window CrossingFunctional::sampling_window(double s) {
  CHAOSLAB_REQUIRE(std::isfinite(s) && s > 1.0, "crossing box half-side must exceed 1");
  return Window::box({-(s + kDiskRadius), -(s + kDiskRadius)}, {s + kDiskRadius, s + kDiskRadius});
}

void CrossingFunctional::check_pattern(const PointPattern& mu) const {
  CHAOSLAB_REQUIRE(!mu.window().is_torus() && mu.dimension() == 2, "crossing needs a planar box pattern");
}

bool CrossingFunctional::meets_box(std::span<const double> c) const {
  const double dx = c[0] - clamp_to(c[0], s_);
  const double dy = c[1] - clamp_to(c[1], s_);
  return dx * dx + dy * dy <= kDiskRadius * kDiskRadius;
}

bool CrossingFunctional::touches_left(std::span<const double> c) const {
  const double dx = c[0] + s_;
  const double dy = c[1] - clamp_to(c[1], s_);
  return dx * dx + dy * dy <= kDiskRadius * kDiskRadius;
}

bool CrossingFunctional::touches_right(std::span<const double> c) const {
  const double dx = c[0] - s_;
  const double dy = c[1] - clamp_to(c[1], s_);
  return dx * dx + dy * dy <= kDiskRadius * kDiskRadius;
}

namespace {

double farther(std::span<const double> a, std::span<const double> b, double x, double y) {
  const double da = (x - a[0]) * (x - a[0]) + (y - a[1]) * (y - a[1]);
  const double db = (x - b[0]) * (x - b[0]) + (y - b[1]) * (y - b[1]);
  return std::max(da, db);
}

// min over the box [-s, s]^2 of max(|p - a|^2, |p - b|^2). Only called when
// the midpoint (the unconstrained minimiser) is outside the box, so the
// minimum sits on an edge. Along an edge both terms are parabolas with unit
// curvature; the minimum of their max is at an endpoint, a vertex, or where
// they cross.
double lens_box_gap(std::span<const double> a, std::span<const double> b, double s) {
  double best = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 2; ++axis) {
    const int other = 1 - axis;
    for (double fixed : {-s, s}) {
      // Edge: coordinate `other` equals fixed, coordinate `axis` runs over [-s, s].
      auto at = [&](double t) {
        double x = 0.0, y = 0.0;
        (axis == 0 ? x : y) = t;
        (other == 0 ? x : y) = fixed;
        return farther(a, b, x, y);
      };
      double cands[5] = {-s, s, std::clamp(a[axis], -s, s), std::clamp(b[axis], -s, s), -s};
      // |p - a|^2 - |p - b|^2 is linear in t: 2 t (b - a) + const.
      const double slope = 2.0 * (b[axis] - a[axis]);
      const double offset = a[axis] * a[axis] - b[axis] * b[axis] + (fixed - a[other]) * (fixed - a[other]) -
                            (fixed - b[other]) * (fixed - b[other]);
      if (slope != 0.0) cands[4] = std::clamp(-offset / slope, -s, s);
      for (double t : cands) best = std::min(best, at(t));
    }
  }
  return best;
}

}  // namespace

bool CrossingFunctional::linked(std::span<const double> a, std::span<const double> b) const {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  if (!within_radius(dx * dx + dy * dy, kLinkDistance)) return false;
  if (!clipped_) return true;
  const double mx = 0.5 * (a[0] + b[0]), my = 0.5 * (a[1] + b[1]);
  if (std::abs(mx) <= s_ && std::abs(my) <= s_) return true;
  return lens_box_gap(a, b, s_) <= kDiskRadius * kDiskRadius * (1.0 + 1e-12);
}

// Node n is the left terminal, n + 1 the right one.
struct CrossingFunctional::State {
  std::size_t n = 0;
  std::unique_ptr<SpatialIndex> index;
  std::vector<std::uint8_t> included;
  std::vector<std::vector<std::uint32_t>> adj;
  std::unique_ptr<UnionFind> uf;
  bool crossing = false;
};

CrossingFunctional::State CrossingFunctional::prepare(const PointPattern& mu) const {
  check_pattern(mu);
  State st;
  st.n = mu.size();
  st.index = std::make_unique<SpatialIndex>(mu, kLinkDistance);
  st.included.assign(st.n, 0);
  st.adj.assign(st.n + 2, {});
  st.uf = std::make_unique<UnionFind>(st.n + 2);
  const auto left = static_cast<std::uint32_t>(st.n), right = static_cast<std::uint32_t>(st.n + 1);
  for (std::size_t i = 0; i < st.n; ++i) st.included[i] = meets_box(mu[i]);
  for (std::size_t i = 0; i < st.n; ++i) {
    if (!st.included[i]) continue;
    const auto u = static_cast<std::uint32_t>(i);
    if (touches_left(mu[i])) {
      st.adj[u].push_back(left);
      st.adj[left].push_back(u);
      st.uf->unite(u, left);
    }
    if (touches_right(mu[i])) {
      st.adj[u].push_back(right);
      st.adj[right].push_back(u);
      st.uf->unite(u, right);
    }
    st.index->for_each_within(mu[i], kLinkDistance, [&](std::size_t j) {
      if (j <= i || !st.included[j] || !linked(mu[i], mu[j])) return;
      st.adj[u].push_back(static_cast<std::uint32_t>(j));
      st.adj[j].push_back(u);
      st.uf->unite(i, j);
    });
  }
  st.crossing = st.uf->find(left) == st.uf->find(right);
  return st;
}

double CrossingFunctional::evaluate(const PointPattern& mu) const { return prepare(mu).crossing ? 1.0 : -1.0; }

std::vector<double> CrossingFunctional::add_one_costs(const PointPattern& mu, const PointPattern& xs) const {
  State st = prepare(mu);
  std::vector<double> out(xs.size(), 0.0);
  if (st.crossing) return out;  // adding a disk never destroys a crossing
  const std::size_t left_root = st.uf->find(st.n), right_root = st.uf->find(st.n + 1);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto x = xs[j];
    if (!meets_box(x)) continue;
    bool reaches_left = touches_left(x), reaches_right = touches_right(x);
    st.index->for_each_within(x, kLinkDistance, [&](std::size_t i) {
      if (!st.included[i] || !linked(x, mu[i])) return;
      const std::size_t root = st.uf->find(i);
      reaches_left = reaches_left || root == left_root;
      reaches_right = reaches_right || root == right_root;
    });
    out[j] = reaches_left && reaches_right ? 2.0 : 0.0;
  }
  return out;
}

std::vector<std::size_t> CrossingFunctional::pivotal_set(const PointPattern& mu) const {
  const State st = prepare(mu);
  // Removing a disk never creates a crossing, so without one nothing is pivotal.
  if (!st.crossing) return {};

  // Iterative DFS from the left terminal. A vertex v separates the terminals
  // iff some DFS child c has low[c] >= disc[v] and the right terminal lies in
  // the subtree of c.
  const std::size_t nodes = st.n + 2;
  const std::size_t root = st.n, target = st.n + 1;
  constexpr std::uint32_t kUnseen = UINT32_MAX;
  std::vector<std::uint32_t> disc(nodes, kUnseen), low(nodes, 0), last(nodes, 0), parent(nodes, kUnseen);
  std::vector<std::uint32_t> edge_pos(nodes, 0);
  std::vector<std::uint8_t> candidate(nodes, 0);
  std::vector<std::uint32_t> stack;
  std::uint32_t time = 0;
  disc[root] = low[root] = time++;
  stack.push_back(static_cast<std::uint32_t>(root));
  while (!stack.empty()) {
    const std::uint32_t v = stack.back();
    if (edge_pos[v] < st.adj[v].size()) {
      const std::uint32_t w = st.adj[v][edge_pos[v]++];
      if (disc[w] == kUnseen) {
        parent[w] = v;
        disc[w] = low[w] = time++;
        stack.push_back(w);
      } else if (w != parent[v]) {
        low[v] = std::min(low[v], disc[w]);
      }
      continue;
    }
    stack.pop_back();
    last[v] = std::max(last[v], disc[v]);
    if (parent[v] == kUnseen) continue;
    const std::uint32_t p = parent[v];
    low[p] = std::min(low[p], low[v]);
    last[p] = std::max(last[p], last[v]);
    const bool holds_target = disc[target] != kUnseen && disc[target] >= disc[v] && disc[target] <= last[v];
    if (p != root && low[v] >= disc[p] && holds_target) candidate[p] = 1;
  }

  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < st.n; ++i) {
    if (candidate[i] && evaluate(mu.without(i)) < 0.0) out.push_back(i);
  }
  return out;
}

std::vector<double> CrossingFunctional::remove_one_costs(const PointPattern& mu) const {
  std::vector<double> out(mu.size(), 0.0);
  for (std::size_t i : pivotal_set(mu)) out[i] = 2.0;
  return out;
}

namespace {

class CrossingPivotal final : public LocalFunction {
 public:
  explicit CrossingPivotal(std::shared_ptr<const CrossingFunctional> f) : f_(std::move(f)) {
    CHAOSLAB_REQUIRE(f_ != nullptr, "functional is null");
  }
  std::string name() const override { return "crossing_pivotal"; }
  std::vector<double> at_points(const PointPattern& mu) const override {
    std::vector<double> out(mu.size(), 0.0);
    for (std::size_t i : f_->pivotal_set(mu)) out[i] = 1.0;
    return out;
  }
  std::vector<double> at_locations(const PointPattern& mu, const PointPattern& xs) const override {
    auto v = f_->add_one_costs(mu, xs);
    for (double& c : v) c = c != 0.0 ? 1.0 : 0.0;
    return v;
  }

 private:
  std::shared_ptr<const CrossingFunctional> f_;
};

}  // namespace

LocalFunctionPtr crossing_pivotal(std::shared_ptr<const CrossingFunctional> f) {
  return std::make_shared<CrossingPivotal>(std::move(f));
}

}  // namespace chaoslab
