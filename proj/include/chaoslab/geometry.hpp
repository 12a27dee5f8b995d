#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chaoslab/pointproc.hpp"

namespace chaoslab {

/// The single closed-ball predicate used by every neighbourhood test.
inline bool within_radius(double squared_distance, double r) { return squared_distance <= r * r; }

double torus_distance(std::span<const double> a, std::span<const double> b);

inline constexpr std::size_t kNoExclude = static_cast<std::size_t>(-1);

/// Uniform grid over a pattern's window. Cells are at least `cell_size`
/// wide, so a query of radius r <= cell_size visits at most 3^d cells. On the
/// torus cell coordinates wrap. Cell ranges live in a dense table unless the
/// grid is much larger than the pattern, in which case a hash map is used.
class SpatialIndex {
 public:
  SpatialIndex(const PointPattern& pattern, double cell_size);

  double cell_size() const { return cell_size_; }
  const PointPattern& pattern() const { return *pattern_; }

  /// Indices within distance r of `query` (closed ball), ascending. `exclude`
  /// drops one index, typically the query point itself.
  std::vector<std::size_t> neighbors_within(std::span<const double> query, double r,
                                            std::size_t exclude = kNoExclude) const;
  void neighbors_within(std::span<const double> query, double r, std::size_t exclude,
                        std::vector<std::size_t>& out) const;
  std::size_t count_within(std::span<const double> query, double r, std::size_t exclude = kNoExclude) const;

  template <class Fn>
  void for_each_within(std::span<const double> query, double r, Fn&& fn) const {
    check_radius(r);
    const std::size_t d = static_cast<std::size_t>(dim_);
    for_each_cell(query, [&](std::uint64_t key) {
      const auto [lo, hi] = range_of(key);
      for (std::uint32_t k = lo; k < hi; ++k) {
        const double* p = sorted_.data() + static_cast<std::size_t>(k) * d;
        double acc = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
          double delta = query[a] - p[a];
          if (torus_) {
            delta = std::abs(delta);
            delta = std::min(delta, 1.0 - delta);
          }
          acc += delta * delta;
        }
        if (within_radius(acc, r)) fn(static_cast<std::size_t>(order_[k]));
      }
    });
  }

 private:
  void check_radius(double r) const;
  std::uint64_t cell_key(std::span<const int> cell) const;
  void cell_of(std::span<const double> x, std::span<int> cell) const;
  std::pair<std::uint32_t, std::uint32_t> range_of(std::uint64_t key) const {
    if (dense_) return {starts_[key], starts_[key + 1]};
    auto it = buckets_.find(key);
    return it == buckets_.end() ? std::pair<std::uint32_t, std::uint32_t>{0, 0} : it->second;
  }

  template <class Fn>
  void for_each_cell(std::span<const double> query, Fn&& fn) const;

  const PointPattern* pattern_;
  const Window* window_;
  double cell_size_;
  int dim_;
  bool torus_;
  bool dense_ = false;
  std::vector<int> cells_per_axis_;
  std::vector<std::uint64_t> strides_;
  std::vector<std::uint32_t> order_;   // point indices sorted by cell
  std::vector<double> sorted_;         // coordinates in `order_`
  std::vector<std::uint32_t> starts_;  // dense: cell -> first slot, plus end
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> buckets_;
  std::vector<std::vector<int>> offsets_;  // per-axis distinct offsets
};

template <class Fn>
void SpatialIndex::for_each_cell(std::span<const double> query, Fn&& fn) const {
  int base[kMaxDimension];
  std::uint64_t part[kMaxDimension][3];
  int count[kMaxDimension];
  int digit[kMaxDimension] = {};
  cell_of(query, std::span<int>(base, dim_));
  for (int a = 0; a < dim_; ++a) {
    const int n = cells_per_axis_[a];
    count[a] = 0;
    for (int off : offsets_[a]) {
      int c = base[a] + off;
      if (torus_) {
        if (c < 0) c += n;
        if (c >= n) c -= n;
      } else if (c < 0 || c >= n) {
        continue;
      }
      part[a][count[a]++] = static_cast<std::uint64_t>(c) * strides_[a];
    }
  }
  while (true) {
    std::uint64_t key = 0;
    for (int a = 0; a < dim_; ++a) key += part[a][digit[a]];
    fn(key);
    int a = 0;
    for (; a < dim_; ++a) {
      if (++digit[a] < count[a]) break;
      digit[a] = 0;
    }
    if (a == dim_) break;
  }
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n);
  std::size_t find(std::size_t x);
  /// Returns true when x and y were in different sets.
  bool unite(std::size_t x, std::size_t y);
  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

/// Component labels 0..count-1, numbered by first appearance in point order.
struct Components {
  std::vector<std::uint32_t> label;
  std::size_t count = 0;

  std::vector<std::vector<std::size_t>> groups() const;
};

Components connected_components(const PointPattern& pattern, double radius);
Components connected_components(const SpatialIndex& index, double radius);

}  // namespace chaoslab
