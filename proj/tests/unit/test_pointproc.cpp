#include <doctest.h>

#include <cmath>
#include <numeric>

#include "chaoslab/error.hpp"
#include "chaoslab/pointproc.hpp"
#include "support/oracles.hpp"

using namespace chaoslab;

namespace {

struct Tally {
  double n = 0, sum = 0, sumsq = 0;
  void add(double x) {
    n += 1;
    sum += x;
    sumsq += x * x;
  }
  double mean() const { return sum / n; }
  double var() const { return (sumsq - sum * sum / n) / (n - 1); }
  double se() const { return std::sqrt(var() / n); }
};

}  // namespace

TEST_CASE("windows reject bad dimensions and boxes") {
  CHECK_THROWS_AS(Window::torus(0), InvalidInput);
  CHECK_THROWS_AS(Window::torus(9), InvalidInput);
  CHECK_THROWS_AS(Window::box({0.0}, {0.0}), InvalidInput);
  CHECK(Window::box({-1.0, 0.0}, {1.0, 3.0}).volume() == doctest::Approx(6.0));
}

TEST_CASE("zero intensity is rejected; tiny intensity gives empty patterns") {
  CHECK_THROWS_AS(Intensity(0.0, Window::torus(2)), InvalidInput);
  CHECK_THROWS_AS(Intensity(-1.0, Window::torus(2)), InvalidInput);
  const Intensity tiny(1e-9, Window::torus(2));
  std::size_t nonempty = 0;
  for (int i = 0; i < 1000; ++i) nonempty += sample_poisson(tiny, RngStream(1, "tiny", i)).empty() ? 0 : 1;
  CHECK(nonempty == 0);
}

TEST_CASE("empty-pattern frequency at mass 4 matches e^-4") {
  const Intensity in(4.0, Window::torus(2));
  const int n = 100000;
  double zeros = 0;
  for (int i = 0; i < n; ++i) zeros += sample_poisson(in, RngStream(2, "void", i)).empty() ? 1 : 0;
  const double p = std::exp(-4.0);
  const double se = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(zeros / n - p) <= 3 * se);
}

TEST_CASE("count moments at s = 1000 on the 2-torus") {
  const Intensity in(1000.0, Window::torus(2));
  Tally t;
  const int n = 4000;
  for (int i = 0; i < n; ++i) t.add(static_cast<double>(sample_poisson(in, RngStream(3, "moments", i)).size()));
  CHECK(std::abs(t.mean() - 1000.0) <= 3 * t.se());
  // s.e. of the sample variance of a Poisson(m) count: sqrt((mu4 - var^2 (n-3)/(n-1)) / n), mu4 = m + 3m^2.
  const double m = 1000.0;
  const double var_se = std::sqrt((m + 3 * m * m - m * m * (n - 3.0) / (n - 1.0)) / n);
  CHECK(std::abs(t.var() - m) <= 3 * var_se);
}

TEST_CASE("points stay inside their window") {
  const Window box = Window::box({-2.0, 1.0, 0.0}, {2.0, 1.5, 10.0});
  const PointPattern p = sample_poisson(Intensity(50.0, box), RngStream(4, "inside"));
  REQUIRE(p.size() > 0);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(box.contains(p[i]));
}

TEST_CASE("thinning") {
  const Intensity in(100.0, Window::torus(2));
  const PointPattern p = sample_poisson(in, RngStream(5, "thin-input"));
  CHECK(thin(p, 1.0, RngStream(5, "thin")) == p);
  CHECK(thin(p, 0.0, RngStream(5, "thin")).empty());
  CHECK_THROWS_AS(thin(p, 1.5, RngStream(5, "thin")), InvalidInput);

  std::vector<std::size_t> counts;
  for (int i = 0; i < 20000; ++i) {
    const PointPattern x = sample_poisson(in, RngStream(5, "thin-src", i));
    counts.push_back(thin(x, 0.5, RngStream(5, "thin-keep", i)).size());
  }
  CHECK(oracle::poisson_chi_square_p(counts, 50.0) > 0.01);
}

TEST_CASE("superposition") {
  const Window w = Window::torus(2);
  const PointPattern a = sample_poisson(Intensity(30.0, w), RngStream(6, "a"));
  const PointPattern empty(w);
  CHECK(superpose(a, empty) == a);
  const PointPattern b = sample_poisson(Intensity(12.0, w), RngStream(6, "b"));
  CHECK(superpose(a, b).size() == a.size() + b.size());
  CHECK_THROWS_AS(superpose(a, PointPattern(Window::torus(3))), InvalidInput);

  std::vector<std::size_t> counts;
  for (int i = 0; i < 20000; ++i) {
    counts.push_back(superpose(sample_poisson(Intensity(3.0, w), RngStream(6, "p3", i)),
                               sample_poisson(Intensity(7.0, w), RngStream(6, "p7", i)))
                         .size());
  }
  CHECK(oracle::poisson_chi_square_p(counts, 10.0) > 0.01);
}

TEST_CASE("thinning and superposition close over Poisson laws") {
  // thin(Poisson(200), 0.25) and Poisson(50) share one count law: two-sample
  // chi-square on the pooled cells.
  const Window w = Window::torus(1);
  std::vector<double> a(200, 0.0), b(200, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    a[thin(sample_poisson(Intensity(200.0, w), RngStream(7, "src", i)), 0.25, RngStream(7, "keep", i)).size()] += 1;
    b[sample_poisson(Intensity(50.0, w), RngStream(7, "direct", i)).size()] += 1;
  }
  double stat = 0.0, cells = 0.0, ca = 0.0, cb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ca += a[k];
    cb += b[k];
    if (ca + cb >= 20.0 || (k + 1 == a.size() && ca + cb > 0.0)) {
      stat += (ca - cb) * (ca - cb) / (ca + cb);
      cells += 1;
      ca = cb = 0.0;
    }
  }
  const boost::math::chi_squared_distribution<double> chi(cells - 1);
  CHECK(boost::math::cdf(boost::math::complement(chi, stat)) > 0.01);
}

TEST_CASE("trajectory slices") {
  const Intensity in(200.0, Window::torus(2));
  const auto traj = simulate_trajectory(in, 10.0, RngStream(8, "traj"));
  const Slice s0 = traj.slice(0.0);
  CHECK(s0.pattern == traj.initial());
  CHECK(s0.survivors == traj.initial().size());
  CHECK_THROWS_AS(traj.slice(10.5), InvalidInput);
  CHECK_THROWS_AS(traj.slice(-0.1), InvalidInput);

  const Slice s1 = traj.slice(1.0);
  // Survivors come first and are exactly the common part with slice 0.
  const auto common = common_ids(s0, s1);
  CHECK(common.size() == s1.survivors);
  for (std::size_t i = 0; i < s1.survivors; ++i) CHECK(s1.ids[i] < traj.initial().size());
  for (std::size_t i = s1.survivors; i < s1.ids.size(); ++i) CHECK(s1.ids[i] >= traj.initial().size());
}

TEST_CASE("forced-empty slice: short lifetimes and no births") {
  const Window w = Window::torus(1);
  const PointPattern init(w, {0.1, 0.4, 0.8});
  const BirthDeathTrajectory traj(init, {0.5, 1.0, 2.0}, PointPattern(w), {}, {}, 3.0);
  CHECK(traj.slice(3.0).pattern.empty());
  CHECK(traj.slice(0.75).pattern.size() == 2);
}

TEST_CASE("survivor fraction at ln 2 and overlap mean") {
  const Intensity in(50.0, Window::torus(2));
  Tally frac, overlap;
  const double t = std::log(2.0);
  for (int i = 0; i < 20000; ++i) {
    const auto traj = simulate_trajectory(in, 2.0, RngStream(9, "survive", i));
    const Slice a = traj.slice(0.0), b = traj.slice(t);
    overlap.add(static_cast<double>(common_ids(a, b).size()));
    if (!a.pattern.empty()) frac.add(static_cast<double>(b.survivors) / static_cast<double>(a.pattern.size()));
  }
  CHECK(std::abs(frac.mean() - 0.5) <= 3 * frac.se());
  CHECK(std::abs(overlap.mean() - 0.5 * in.mass()) <= 3 * overlap.se());
}

TEST_CASE("stationarity and Markov coupling") {
  const Intensity in(20.0, Window::torus(2));
  const std::vector<double> ts{0.0, 0.3, 1.0, 2.5, 5.0};
  std::vector<std::vector<std::size_t>> counts(ts.size());
  Tally kept;
  for (int i = 0; i < 20000; ++i) {
    const auto traj = simulate_trajectory(in, 5.0, RngStream(10, "stationary", i));
    for (std::size_t j = 0; j < ts.size(); ++j) counts[j].push_back(traj.slice(ts[j]).pattern.size());
    const Slice a = traj.slice(1.0), b = traj.slice(2.5);
    // Points alive at 1.0 that are still alive at 2.5.
    std::size_t both = 0;
    for (auto id : a.ids) both += std::count(b.ids.begin(), b.ids.end(), id);
    if (!a.ids.empty()) kept.add(static_cast<double>(both) / static_cast<double>(a.ids.size()));
  }
  for (std::size_t j = 0; j < ts.size(); ++j) {
    CAPTURE(ts[j]);
    CHECK(oracle::poisson_chi_square_p(counts[j], in.mass()) > 0.01);
  }
  CHECK(std::abs(kept.mean() - std::exp(-1.5)) <= 3 * kept.se());
}

TEST_CASE("identical streams reproduce identical patterns") {
  const Intensity in(100.0, Window::torus(3));
  CHECK(sample_poisson(in, RngStream(11, "x", 4)) == sample_poisson(in, RngStream(11, "x", 4)));
  CHECK(!(sample_poisson(in, RngStream(11, "x", 4)) == sample_poisson(in, RngStream(11, "x", 5))));
  const auto a = simulate_trajectory(in, 3.0, RngStream(11, "t"));
  const auto b = simulate_trajectory(in, 3.0, RngStream(11, "t"));
  CHECK(nlohmann::json(a) == nlohmann::json(b));
}

TEST_CASE("JSON round trips") {
  const Intensity in(40.0, Window::box({0.0, 0.0}, {2.0, 1.0}));
  const PointPattern p = sample_poisson(in, RngStream(12, "json"));
  const nlohmann::json j = p;
  CHECK(j.at("count").get<std::size_t>() == j.at("points").size());
  CHECK(pattern_from_json(j) == p);
  const auto traj = simulate_trajectory(in, 2.0, RngStream(12, "json-traj"));
  const auto back = trajectory_from_json(nlohmann::json(traj));
  CHECK(back.initial() == traj.initial());
  CHECK(back.birth_times() == traj.birth_times());
}
