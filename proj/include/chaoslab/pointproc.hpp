#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "chaoslab/rng.hpp"

namespace chaoslab {

inline constexpr int kMaxDimension = 8;

/// Observation window: the unit torus [0,1)^d or an axis-aligned box.
class Window {
 public:
  static Window torus(int dimension);
  static Window box(std::vector<double> lower, std::vector<double> upper);

  bool is_torus() const { return torus_; }
  int dimension() const { return static_cast<int>(lower_.size()); }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  double side(int axis) const { return upper_[axis] - lower_[axis]; }
  double volume() const;

  bool contains(std::span<const double> x) const;
  double squared_distance(std::span<const double> a, std::span<const double> b) const;
  double distance(std::span<const double> a, std::span<const double> b) const;

  friend bool operator==(const Window&, const Window&) = default;

 private:
  Window(bool torus, std::vector<double> lower, std::vector<double> upper);
  bool torus_ = true;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

/// Finite point configuration inside a window, stored row-major.
class PointPattern {
 public:
  explicit PointPattern(Window window);
  PointPattern(Window window, std::vector<double> coords);

  const Window& window() const { return window_; }
  int dimension() const { return window_.dimension(); }
  std::size_t size() const { return coords_.size() / static_cast<std::size_t>(dimension()); }
  bool empty() const { return coords_.empty(); }
  std::span<const double> operator[](std::size_t i) const {
    const auto d = static_cast<std::size_t>(dimension());
    return {coords_.data() + i * d, d};
  }
  const std::vector<double>& coords() const { return coords_; }

  void push_back(std::span<const double> x);
  void reserve(std::size_t n) { coords_.reserve(n * static_cast<std::size_t>(dimension())); }

  PointPattern without(std::size_t i) const;
  PointPattern with(std::span<const double> x) const;
  PointPattern subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const PointPattern&, const PointPattern&) = default;

 private:
  Window window_;
  std::vector<double> coords_;
};

/// Homogeneous intensity s on a window, total mass s * Vol(window).
class Intensity {
 public:
  Intensity(double rate, Window window);
  double rate() const { return rate_; }
  const Window& window() const { return window_; }
  double mass() const { return rate_ * window_.volume(); }

 private:
  double rate_;
  Window window_;
};

/// Draw a uniform location in the window.
void sample_uniform(const Window& window, Engine& eng, std::span<double> out);
PointPattern sample_uniform_points(const Window& window, std::size_t n, Engine& eng);

PointPattern sample_poisson(const Intensity& intensity, Engine& eng);
PointPattern sample_poisson(const Intensity& intensity, const RngStream& rng);

PointPattern thin(const PointPattern& pattern, double keep_probability, Engine& eng);
PointPattern thin(const PointPattern& pattern, double keep_probability, const RngStream& rng);

PointPattern superpose(const PointPattern& a, const PointPattern& b);

/// Pattern at time t of a birth-death trajectory. Points carry stable ids:
/// initial point i has id i, birth j has id (initial size + j). Surviving
/// initial points come first, so `pattern[0 .. survivors)` is exactly the
/// common part with the slice at time 0.
struct Slice {
  PointPattern pattern;
  std::vector<std::uint32_t> ids;
  std::size_t survivors = 0;
};

/// Stationary Ornstein-Uhlenbeck birth-death trajectory on [0, horizon]:
/// unit-rate deaths and births at rate s * Vol per unit time.
class BirthDeathTrajectory {
 public:
  BirthDeathTrajectory(PointPattern initial, std::vector<double> lifetimes, PointPattern birth_locations,
                       std::vector<double> birth_times, std::vector<double> birth_lifetimes, double horizon);

  const PointPattern& initial() const { return initial_; }
  const std::vector<double>& lifetimes() const { return lifetimes_; }
  const PointPattern& birth_locations() const { return birth_locations_; }
  const std::vector<double>& birth_times() const { return birth_times_; }
  const std::vector<double>& birth_lifetimes() const { return birth_lifetimes_; }
  double horizon() const { return horizon_; }
  std::size_t total_points() const { return initial_.size() + birth_times_.size(); }

  Slice slice(double t) const;

 private:
  PointPattern initial_;
  std::vector<double> lifetimes_;
  PointPattern birth_locations_;
  std::vector<double> birth_times_;  // sorted ascending
  std::vector<double> birth_lifetimes_;
  double horizon_;
};

BirthDeathTrajectory simulate_trajectory(const Intensity& intensity, double horizon, Engine& eng);
BirthDeathTrajectory simulate_trajectory(const Intensity& intensity, double horizon, const RngStream& rng);

/// Survivors of slice(0) present in slice(t), identified by id.
std::vector<std::uint32_t> common_ids(const Slice& s0, const Slice& st);

void to_json(nlohmann::json& j, const Window& w);
Window window_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const PointPattern& p);
PointPattern pattern_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const BirthDeathTrajectory& t);
BirthDeathTrajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace chaoslab
