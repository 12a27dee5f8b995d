#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "chaoslab/error.hpp"
#include "chaoslab/functional.hpp"
#include "chaoslab/geometry.hpp"
#include "support/oracles.hpp"

using namespace chaoslab;

namespace {

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

/// Partition as a canonical sorted list of sorted groups.
std::vector<std::vector<std::size_t>> canonical(const std::vector<std::size_t>& label) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < label.size(); ++i) groups[label[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [k, g] : groups) out.push_back(g);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> canonical(const Components& c) {
  std::vector<std::size_t> label(c.label.begin(), c.label.end());
  return canonical(label);
}

}  // namespace

TEST_CASE("torus distance") {
  const std::vector<double> a{0.05, 0.5}, b{0.95, 0.5};
  CHECK(torus_distance(a, a) == 0.0);
  CHECK(torus_distance(a, b) == doctest::Approx(0.1));

  auto eng = RngStream(1, "dist").engine();
  for (int d = 1; d <= 4; ++d) {
    std::vector<double> x(d), y(d);
    for (int i = 0; i < 2000; ++i) {
      sample_uniform(Window::torus(d), eng, x);
      sample_uniform(Window::torus(d), eng, y);
      double euclid = 0.0;
      for (int k = 0; k < d; ++k) euclid += (x[k] - y[k]) * (x[k] - y[k]);
      const double t = torus_distance(x, y);
      CHECK(t <= std::sqrt(euclid) + 1e-15);
      CHECK(t == doctest::Approx(torus_distance(y, x)));
    }
  }
}

TEST_CASE("neighbour queries on an empty pattern") {
  const PointPattern empty(Window::torus(2));
  const SpatialIndex idx(empty, 0.1);
  const std::vector<double> q{0.3, 0.3};
  CHECK(idx.neighbors_within(q, 0.1).empty());
  CHECK(idx.count_within(q, 0.1) == 0);
  CHECK_THROWS_AS(idx.neighbors_within(q, -1.0), InvalidInput);
  CHECK_THROWS_AS(idx.neighbors_within(q, 0.2), InvalidInput);  // wider than a cell
}

TEST_CASE("neighbour queries match brute force on 1000 random patterns") {
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const RngStream rng(2, "nbr", rep);
    auto eng = rng.engine();
    const int d = 1 + rep % 3;
    const bool box = rep % 4 == 3;
    const Window w = box ? Window::box(std::vector<double>(d, -1.0), std::vector<double>(d, 2.0)) : Window::torus(d);
    const double r = box ? 0.05 + 0.5 * open_uniform(eng) : 0.01 + 0.45 * open_uniform(eng);
    const PointPattern p = sample_poisson(Intensity(box ? 10.0 : 60.0, w), eng);
    // Cell sizes from the query radius up to three times it.
    const double cell = rep % 5 == 0 ? r : r * (1.0 + 2.0 * open_uniform(eng));
    const SpatialIndex idx(p, cell);
    std::vector<double> q(d);
    for (int k = 0; k < 10; ++k) {
      sample_uniform(w, eng, q);
      if (sorted(idx.neighbors_within(q, r)) != oracle::neighbors(p, q, r)) ++mismatches;
    }
    for (std::size_t i = 0; i < std::min<std::size_t>(p.size(), 5); ++i) {
      auto expect = oracle::neighbors(p, p[i], r);
      expect.erase(std::find(expect.begin(), expect.end(), i));
      if (sorted(idx.neighbors_within(p[i], r, i)) != expect) ++mismatches;
      if (idx.count_within(p[i], r, i) != expect.size()) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("index completeness up to 10^4 points") {
  for (std::size_t n : {10, 1000, 10000}) {
    for (int d : {2, 3}) {
      auto eng = RngStream(3, "complete", n * 10 + d).engine();
      const PointPattern p = sample_uniform_points(Window::torus(d), n, eng);
      const double r = std::pow(8.0 / n, 1.0 / d) * 0.5;
      const SpatialIndex idx(p, r);
      std::vector<double> q(d);
      std::size_t mismatches = 0;
      for (int k = 0; k < 100; ++k) {
        sample_uniform(p.window(), eng, q);
        if (sorted(idx.neighbors_within(q, r)) != oracle::neighbors(p, q, r)) ++mismatches;
      }
      CAPTURE(n);
      CAPTURE(d);
      CHECK(mismatches == 0);
    }
  }
}

TEST_CASE("mean neighbour count equals kappa_d s r^d") {
  const double s = 500.0, r = 0.06;
  const int d = 2;
  std::vector<double> counts;
  for (int rep = 0; rep < 2000; ++rep) {
    auto eng = RngStream(4, "kappa", rep).engine();
    const PointPattern p = sample_poisson(Intensity(s, Window::torus(d)), eng);
    const SpatialIndex idx(p, r);
    std::vector<double> q(d);
    sample_uniform(p.window(), eng, q);
    counts.push_back(static_cast<double>(idx.count_within(q, r)));
  }
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  const double se = std::sqrt(var / (counts.size() - 1) / counts.size());
  CHECK(std::abs(mean - M_PI * s * r * r) <= 3 * se);
}

TEST_CASE("component boundary is inclusive") {
  const Window w = Window::box({0.0, 0.0}, {4.0, 4.0});
  // Exactly representable distance 0.5.
  const PointPattern at(w, {1.0, 1.0, 1.5, 1.0});
  CHECK(connected_components(at, 0.5).count == 1);
  const PointPattern beyond(w, {1.0, 1.0, std::nextafter(1.5, 2.0), 1.0});
  CHECK(connected_components(beyond, 0.5).count == 2);
  CHECK(connected_components(PointPattern(w), 0.5).count == 0);
}

TEST_CASE("components match brute-force transitive closure on 1000 patterns") {
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    auto eng = RngStream(5, "comp", rep).engine();
    const int d = 1 + rep % 3;
    const Window w = rep % 2 ? Window::torus(d) : Window::box(std::vector<double>(d, 0.0), std::vector<double>(d, 1.0));
    const PointPattern p = sample_poisson(Intensity(40.0, w), eng);
    const double r = 0.02 + 0.2 * open_uniform(eng);
    if (canonical(connected_components(p, r)) != canonical(oracle::component_labels(p, r))) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("component count is invariant under permutation") {
  for (int rep = 0; rep < 200; ++rep) {
    auto eng = RngStream(6, "perm", rep).engine();
    const PointPattern p = sample_poisson(Intensity(80.0, Window::torus(2)), eng);
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), eng);
    CHECK(connected_components(p, 0.08).count == connected_components(p.subset(order), 0.08).count);
  }
}

TEST_CASE("union-find") {
  UnionFind uf(5);
  CHECK(uf.unite(0, 1));
  CHECK(uf.unite(3, 4));
  CHECK_FALSE(uf.unite(1, 0));
  CHECK(uf.find(0) == uf.find(1));
  CHECK(uf.find(2) != uf.find(3));
}
