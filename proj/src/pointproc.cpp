#include "chaoslab/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chaoslab/error.hpp"

namespace chaoslab {

Window::Window(bool torus, std::vector<double> lower, std::vector<double> upper)
    : torus_(torus), lower_(std::move(lower)), upper_(std::move(upper)) {}

Window Window::torus(int dimension) {
  CHAOSLAB_REQUIRE(dimension >= 1 && dimension <= kMaxDimension,
                   "window dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
  return Window(true, std::vector<double>(dimension, 0.0), std::vector<double>(dimension, 1.0));
}

Window Window::box(std::vector<double> lower, std::vector<double> upper) {
  CHAOSLAB_REQUIRE(lower.size() == upper.size(), "box corners must have equal dimension");
  CHAOSLAB_REQUIRE(!lower.empty() && lower.size() <= static_cast<std::size_t>(kMaxDimension),
                   "window dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    CHAOSLAB_REQUIRE(std::isfinite(lower[i]) && std::isfinite(upper[i]) && upper[i] > lower[i],
                     "box must have strictly positive finite side lengths");
  }
  return Window(false, std::move(lower), std::move(upper));
}

double Window::volume() const {
  double v = 1.0;
  for (int i = 0; i < dimension(); ++i) v *= side(i);
  return v;
}

bool Window::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dimension()) return false;
  for (int i = 0; i < dimension(); ++i) {
    if (!(x[i] >= lower_[i])) return false;
    if (torus_ ? !(x[i] < upper_[i]) : !(x[i] <= upper_[i])) return false;
  }
  return true;
}

double Window::squared_distance(std::span<const double> a, std::span<const double> b) const {
  double acc = 0.0;
  const int d = dimension();
  if (torus_) {
    for (int i = 0; i < d; ++i) {
      double delta = std::abs(a[i] - b[i]);
      delta = std::min(delta, 1.0 - delta);
      acc += delta * delta;
    }
  } else {
    for (int i = 0; i < d; ++i) {
      const double delta = a[i] - b[i];
      acc += delta * delta;
    }
  }
  return acc;
}

double Window::distance(std::span<const double> a, std::span<const double> b) const {
  return std::sqrt(squared_distance(a, b));
}

PointPattern::PointPattern(Window window) : window_(std::move(window)) {}

PointPattern::PointPattern(Window window, std::vector<double> coords)
    : window_(std::move(window)), coords_(std::move(coords)) {
  const auto d = static_cast<std::size_t>(dimension());
  CHAOSLAB_REQUIRE(coords_.size() % d == 0, "coordinate array length is not a multiple of the dimension");
  for (std::size_t i = 0; i < size(); ++i) {
    CHAOSLAB_REQUIRE(window_.contains((*this)[i]), "point " + std::to_string(i) + " lies outside the window");
  }
}

void PointPattern::push_back(std::span<const double> x) {
  CHAOSLAB_REQUIRE(window_.contains(x), "point lies outside the window");
  coords_.insert(coords_.end(), x.begin(), x.end());
}

PointPattern PointPattern::without(std::size_t i) const {
  CHAOSLAB_REQUIRE(i < size(), "point index out of range");
  PointPattern out(window_);
  const auto d = static_cast<std::ptrdiff_t>(dimension());
  out.coords_.reserve(coords_.size() - static_cast<std::size_t>(d));
  out.coords_.insert(out.coords_.end(), coords_.begin(), coords_.begin() + static_cast<std::ptrdiff_t>(i) * d);
  out.coords_.insert(out.coords_.end(), coords_.begin() + static_cast<std::ptrdiff_t>(i + 1) * d, coords_.end());
  return out;
}

PointPattern PointPattern::with(std::span<const double> x) const {
  PointPattern out(*this);
  out.push_back(x);
  return out;
}

PointPattern PointPattern::subset(std::span<const std::size_t> indices) const {
  PointPattern out(window_);
  out.reserve(indices.size());
  for (auto i : indices) {
    CHAOSLAB_REQUIRE(i < size(), "point index out of range");
    const auto p = (*this)[i];
    out.coords_.insert(out.coords_.end(), p.begin(), p.end());
  }
  return out;
}

Intensity::Intensity(double rate, Window window) : rate_(rate), window_(std::move(window)) {
  CHAOSLAB_REQUIRE(std::isfinite(rate_) && rate_ > 0.0, "intensity must be a finite positive rate");
  CHAOSLAB_REQUIRE(std::isfinite(mass()) && mass() > 0.0, "intensity mass s*Vol must be finite and positive");
}

void sample_uniform(const Window& window, Engine& eng, std::span<double> out) {
  for (int i = 0; i < window.dimension(); ++i) {
    const double u = open_uniform(eng);
    out[i] = window.lower(i) + u * window.side(i);
  }
}

PointPattern sample_uniform_points(const Window& window, std::size_t n, Engine& eng) {
  const auto d = static_cast<std::size_t>(window.dimension());
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) sample_uniform(window, eng, std::span<double>(coords.data() + i * d, d));
  return PointPattern(window, std::move(coords));
}

namespace {

std::size_t poisson_count(double mass, Engine& eng) {
  CHAOSLAB_REQUIRE(std::isfinite(mass) && mass >= 0.0, "Poisson mass must be finite and non-negative");
  if (mass == 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mass);
  return static_cast<std::size_t>(dist(eng));
}

}  // namespace

PointPattern sample_poisson(const Intensity& intensity, Engine& eng) {
  const std::size_t n = poisson_count(intensity.mass(), eng);
  return sample_uniform_points(intensity.window(), n, eng);
}

PointPattern sample_poisson(const Intensity& intensity, const RngStream& rng) {
  auto eng = rng.engine();
  return sample_poisson(intensity, eng);
}

PointPattern thin(const PointPattern& pattern, double keep_probability, Engine& eng) {
  CHAOSLAB_REQUIRE(keep_probability >= 0.0 && keep_probability <= 1.0, "thinning probability must lie in [0, 1]");
  std::vector<std::size_t> kept;
  kept.reserve(pattern.size());
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (open_uniform(eng) < keep_probability) kept.push_back(i);
  }
  return pattern.subset(kept);
}

PointPattern thin(const PointPattern& pattern, double keep_probability, const RngStream& rng) {
  auto eng = rng.engine();
  return thin(pattern, keep_probability, eng);
}

PointPattern superpose(const PointPattern& a, const PointPattern& b) {
  CHAOSLAB_REQUIRE(a.window() == b.window(), "cannot superpose patterns on different windows");
  std::vector<double> coords;
  coords.reserve(a.coords().size() + b.coords().size());
  coords.insert(coords.end(), a.coords().begin(), a.coords().end());
  coords.insert(coords.end(), b.coords().begin(), b.coords().end());
  return PointPattern(a.window(), std::move(coords));
}

BirthDeathTrajectory::BirthDeathTrajectory(PointPattern initial, std::vector<double> lifetimes,
                                           PointPattern birth_locations, std::vector<double> birth_times,
                                           std::vector<double> birth_lifetimes, double horizon)
    : initial_(std::move(initial)),
      lifetimes_(std::move(lifetimes)),
      birth_locations_(std::move(birth_locations)),
      birth_times_(std::move(birth_times)),
      birth_lifetimes_(std::move(birth_lifetimes)),
      horizon_(horizon) {
  CHAOSLAB_REQUIRE(std::isfinite(horizon_) && horizon_ > 0.0, "trajectory horizon must be positive");
  CHAOSLAB_REQUIRE(lifetimes_.size() == initial_.size(), "one lifetime per initial point is required");
  CHAOSLAB_REQUIRE(initial_.window() == birth_locations_.window(), "births must share the initial window");
  CHAOSLAB_REQUIRE(birth_times_.size() == birth_locations_.size() && birth_lifetimes_.size() == birth_times_.size(),
                   "birth arrays must have equal length");
  for (double l : lifetimes_) CHAOSLAB_REQUIRE(l > 0.0, "lifetimes must be positive");
  for (std::size_t j = 0; j < birth_times_.size(); ++j) {
    CHAOSLAB_REQUIRE(birth_times_[j] > 0.0 && birth_times_[j] <= horizon_, "birth times must lie in (0, horizon]");
    CHAOSLAB_REQUIRE(birth_lifetimes_[j] > 0.0, "lifetimes must be positive");
  }
  if (!std::is_sorted(birth_times_.begin(), birth_times_.end())) {
    std::vector<std::size_t> order(birth_times_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return birth_times_[a] < birth_times_[b]; });
    std::vector<double> times, lives;
    times.reserve(order.size());
    lives.reserve(order.size());
    for (auto j : order) {
      times.push_back(birth_times_[j]);
      lives.push_back(birth_lifetimes_[j]);
    }
    birth_locations_ = birth_locations_.subset(order);
    birth_times_ = std::move(times);
    birth_lifetimes_ = std::move(lives);
  }
}

Slice BirthDeathTrajectory::slice(double t) const {
  CHAOSLAB_REQUIRE(t >= 0.0 && t <= horizon_, "slice time must lie in [0, horizon]");
  Slice out{PointPattern(initial_.window()), {}, 0};
  out.pattern.reserve(initial_.size());
  for (std::size_t i = 0; i < initial_.size(); ++i) {
    if (lifetimes_[i] > t) {
      out.pattern.push_back(initial_[i]);
      out.ids.push_back(static_cast<std::uint32_t>(i));
    }
  }
  out.survivors = out.ids.size();
  const auto n0 = static_cast<std::uint32_t>(initial_.size());
  for (std::size_t j = 0; j < birth_times_.size() && birth_times_[j] <= t; ++j) {
    if (t < birth_times_[j] + birth_lifetimes_[j]) {
      out.pattern.push_back(birth_locations_[j]);
      out.ids.push_back(n0 + static_cast<std::uint32_t>(j));
    }
  }
  return out;
}

BirthDeathTrajectory simulate_trajectory(const Intensity& intensity, double horizon, Engine& eng) {
  CHAOSLAB_REQUIRE(std::isfinite(horizon) && horizon > 0.0, "trajectory horizon must be positive");
  PointPattern initial = sample_poisson(intensity, eng);
  std::vector<double> lifetimes(initial.size());
  for (auto& l : lifetimes) l = exponential(eng);

  const std::size_t births = poisson_count(intensity.mass() * horizon, eng);
  std::vector<double> times(births), lives(births);
  for (auto& t : times) t = horizon * open_uniform(eng);
  for (auto& l : lives) l = exponential(eng);
  PointPattern locations = sample_uniform_points(intensity.window(), births, eng);
  return BirthDeathTrajectory(std::move(initial), std::move(lifetimes), std::move(locations), std::move(times),
                              std::move(lives), horizon);
}

BirthDeathTrajectory simulate_trajectory(const Intensity& intensity, double horizon, const RngStream& rng) {
  auto eng = rng.engine();
  return simulate_trajectory(intensity, horizon, eng);
}

std::vector<std::uint32_t> common_ids(const Slice& s0, const Slice& st) {
  // Ids of initial points are their slice-0 positions; survivors of slice(t)
  // are listed first and are initial points by construction.
  std::vector<std::uint32_t> out;
  const auto n0 = static_cast<std::uint32_t>(s0.ids.size());
  for (std::size_t i = 0; i < st.survivors; ++i) {
    if (st.ids[i] < n0) out.push_back(st.ids[i]);
  }
  return out;
}

void to_json(nlohmann::json& j, const Window& w) {
  if (w.is_torus()) {
    j = {{"kind", "torus"}, {"dimension", w.dimension()}};
    return;
  }
  std::vector<double> lo, hi;
  for (int i = 0; i < w.dimension(); ++i) {
    lo.push_back(w.lower(i));
    hi.push_back(w.upper(i));
  }
  j = {{"kind", "box"}, {"dimension", w.dimension()}, {"lower", lo}, {"upper", hi}};
}

Window window_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object() && j.contains("kind"), "window must be an object with a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "torus") {
    CHAOSLAB_REQUIRE(j.contains("dimension") && j.at("dimension").is_number_integer(),
                     "torus window requires an integer \"dimension\"");
    return Window::torus(j.at("dimension").get<int>());
  }
  if (kind == "box") {
    CHAOSLAB_REQUIRE(j.contains("lower") && j.contains("upper"), "box window requires \"lower\" and \"upper\"");
    auto w = Window::box(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>());
    if (j.contains("dimension")) {
      CHAOSLAB_REQUIRE(j.at("dimension").get<int>() == w.dimension(), "box dimension does not match its corners");
    }
    return w;
  }
  throw InvalidInput("unknown window kind \"" + kind + "\"");
}

namespace {

nlohmann::json points_json(const PointPattern& p) {
  auto arr = nlohmann::json::array();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto x = p[i];
    arr.push_back(std::vector<double>(x.begin(), x.end()));
  }
  return arr;
}

std::vector<double> points_from_json(const nlohmann::json& arr, int d) {
  CHAOSLAB_REQUIRE(arr.is_array(), "\"points\" must be an array");
  std::vector<double> coords;
  coords.reserve(arr.size() * static_cast<std::size_t>(d));
  for (const auto& pt : arr) {
    CHAOSLAB_REQUIRE(pt.is_array() && static_cast<int>(pt.size()) == d, "each point must have one coordinate per axis");
    for (const auto& c : pt) coords.push_back(c.get<double>());
  }
  return coords;
}

}  // namespace

void to_json(nlohmann::json& j, const PointPattern& p) {
  j = {{"window", p.window()}, {"count", p.size()}, {"points", points_json(p)}};
}

PointPattern pattern_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object() && j.contains("window") && j.contains("points"),
                   "pattern must contain \"window\" and \"points\"");
  Window w = window_from_json(j.at("window"));
  PointPattern p(w, points_from_json(j.at("points"), w.dimension()));
  if (j.contains("count")) {
    CHAOSLAB_REQUIRE(j.at("count").get<std::size_t>() == p.size(), "\"count\" does not match the points array");
  }
  return p;
}

void to_json(nlohmann::json& j, const BirthDeathTrajectory& t) {
  auto births = nlohmann::json::array();
  for (std::size_t b = 0; b < t.birth_times().size(); ++b) {
    const auto x = t.birth_locations()[b];
    births.push_back({{"time", t.birth_times()[b]},
                      {"lifetime", t.birth_lifetimes()[b]},
                      {"location", std::vector<double>(x.begin(), x.end())}});
  }
  j = {{"horizon", t.horizon()}, {"initial", t.initial()}, {"lifetimes", t.lifetimes()}, {"births", births}};
}

BirthDeathTrajectory trajectory_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object() && j.contains("horizon") && j.contains("initial") && j.contains("lifetimes") &&
                       j.contains("births"),
                   "trajectory requires \"horizon\", \"initial\", \"lifetimes\" and \"births\"");
  PointPattern initial = pattern_from_json(j.at("initial"));
  PointPattern locations(initial.window());
  std::vector<double> times, lives;
  for (const auto& b : j.at("births")) {
    locations.push_back(b.at("location").get<std::vector<double>>());
    times.push_back(b.at("time").get<double>());
    lives.push_back(b.at("lifetime").get<double>());
  }
  return BirthDeathTrajectory(std::move(initial), j.at("lifetimes").get<std::vector<double>>(), std::move(locations),
                              std::move(times), std::move(lives), j.at("horizon").get<double>());
}

}  // namespace chaoslab
