#include "chaoslab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "chaoslab/error.hpp"

namespace chaoslab {

double torus_distance(std::span<const double> a, std::span<const double> b) {
  CHAOSLAB_REQUIRE(a.size() == b.size(), "points must have equal dimension");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double delta = std::abs(a[i] - b[i]);
    delta = std::min(delta, 1.0 - delta);
    acc += delta * delta;
  }
  return std::sqrt(acc);
}

SpatialIndex::SpatialIndex(const PointPattern& pattern, double cell_size)
    : pattern_(&pattern),
      window_(&pattern.window()),
      cell_size_(cell_size),
      dim_(pattern.dimension()),
      torus_(pattern.window().is_torus()) {
  CHAOSLAB_REQUIRE(std::isfinite(cell_size) && cell_size > 0.0, "cell size must be positive");
  // Keep the linearised cell key within 60 bits.
  const double max_per_axis = std::floor(std::pow(2.0, 60.0 / dim_));
  cells_per_axis_.resize(dim_);
  offsets_.resize(dim_);
  double total_cells = 1.0;
  for (int a = 0; a < dim_; ++a) {
    const double n = std::floor(window_->side(a) / cell_size_);
    cells_per_axis_[a] = static_cast<int>(std::clamp(n, 1.0, max_per_axis));
    total_cells *= cells_per_axis_[a];
    if (torus_ && cells_per_axis_[a] < 3) {
      offsets_[a].resize(cells_per_axis_[a]);
      std::iota(offsets_[a].begin(), offsets_[a].end(), 0);
    } else {
      offsets_[a] = {-1, 0, 1};
    }
  }

  strides_.assign(dim_, 1);
  for (int a = 1; a < dim_; ++a) strides_[a] = strides_[a - 1] * static_cast<std::uint64_t>(cells_per_axis_[a - 1]);

  const std::size_t n = pattern.size();
  CHAOSLAB_REQUIRE(n < UINT32_MAX, "pattern too large to index");
  std::vector<std::uint64_t> keys(n);
  int cell[kMaxDimension];
  for (std::size_t i = 0; i < n; ++i) {
    cell_of(pattern[i], std::span<int>(cell, dim_));
    keys[i] = cell_key(std::span<const int>(cell, dim_));
  }
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  dense_ = total_cells <= 16.0 * static_cast<double>(n) + 4096.0;
  if (dense_) {
    // Counting sort keeps points of a cell in index order.
    starts_.assign(static_cast<std::size_t>(total_cells) + 1, 0);
    for (auto k : keys) ++starts_[k + 1];
    for (std::size_t c = 1; c < starts_.size(); ++c) starts_[c] += starts_[c - 1];
    std::vector<std::uint32_t> fill(starts_.begin(), starts_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) order_[fill[keys[i]]++] = static_cast<std::uint32_t>(i);
  } else {
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::uint32_t x, std::uint32_t y) { return keys[x] < keys[y]; });
    buckets_.reserve(n);
    for (std::uint32_t k = 0; k < n;) {
      std::uint32_t e = k;
      while (e < n && keys[order_[e]] == keys[order_[k]]) ++e;
      buckets_.emplace(keys[order_[k]], std::make_pair(k, e));
      k = e;
    }
  }
  const auto d = static_cast<std::size_t>(dim_);
  sorted_.resize(n * d);
  for (std::size_t k = 0; k < n; ++k) {
    const auto x = pattern[order_[k]];
    std::copy(x.begin(), x.end(), sorted_.begin() + static_cast<std::ptrdiff_t>(k * d));
  }
}

void SpatialIndex::check_radius(double r) const {
  if (!(r >= 0.0 && r <= cell_size_)) {
    throw InvalidInput("query radius " + std::to_string(r) + " exceeds index cell size " +
                       std::to_string(cell_size_) + "; rebuild the index");
  }
}

void SpatialIndex::cell_of(std::span<const double> x, std::span<int> cell) const {
  for (int a = 0; a < dim_; ++a) {
    const int n = cells_per_axis_[a];
    const double u = (x[a] - window_->lower(a)) / window_->side(a);
    const double c = std::floor(u * n);
    cell[a] = static_cast<int>(std::clamp(c, 0.0, static_cast<double>(n - 1)));
  }
}

std::uint64_t SpatialIndex::cell_key(std::span<const int> cell) const {
  std::uint64_t key = 0;
  for (int a = dim_ - 1; a >= 0; --a) key = key * static_cast<std::uint64_t>(cells_per_axis_[a]) + cell[a];
  return key;
}

void SpatialIndex::neighbors_within(std::span<const double> query, double r, std::size_t exclude,
                                    std::vector<std::size_t>& out) const {
  out.clear();
  for_each_within(query, r, [&](std::size_t i) {
    if (i != exclude) out.push_back(i);
  });
  std::sort(out.begin(), out.end());
}

std::vector<std::size_t> SpatialIndex::neighbors_within(std::span<const double> query, double r,
                                                        std::size_t exclude) const {
  std::vector<std::size_t> out;
  neighbors_within(query, r, exclude, out);
  return out;
}

std::size_t SpatialIndex::count_within(std::span<const double> query, double r, std::size_t exclude) const {
  std::size_t n = 0;
  for_each_within(query, r, [&](std::size_t i) { n += (i != exclude); });
  return n;
}

UnionFind::UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

std::size_t UnionFind::find(std::size_t x) {
  while (parent_[x] != x) {
    parent_[x] = parent_[parent_[x]];
    x = parent_[x];
  }
  return x;
}

bool UnionFind::unite(std::size_t x, std::size_t y) {
  x = find(x);
  y = find(y);
  if (x == y) return false;
  if (rank_[x] < rank_[y]) std::swap(x, y);
  parent_[y] = x;
  if (rank_[x] == rank_[y]) ++rank_[x];
  return true;
}

std::vector<std::vector<std::size_t>> Components::groups() const {
  std::vector<std::vector<std::size_t>> out(count);
  for (std::size_t i = 0; i < label.size(); ++i) out[label[i]].push_back(i);
  return out;
}

Components connected_components(const SpatialIndex& index, double radius) {
  const PointPattern& p = index.pattern();
  UnionFind uf(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    index.for_each_within(p[i], radius, [&](std::size_t j) {
      if (j > i) uf.unite(i, j);
    });
  }
  Components c;
  c.label.assign(p.size(), 0);
  std::vector<std::uint32_t> root_label(p.size(), UINT32_MAX);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::size_t root = uf.find(i);
    if (root_label[root] == UINT32_MAX) root_label[root] = static_cast<std::uint32_t>(c.count++);
    c.label[i] = root_label[root];
  }
  return c;
}

Components connected_components(const PointPattern& pattern, double radius) {
  CHAOSLAB_REQUIRE(std::isfinite(radius) && radius > 0.0, "connection radius must be positive");
  SpatialIndex index(pattern, radius);
  return connected_components(index, radius);
}

}  // namespace chaoslab
