#include <cmath>

#include "chaoslab/error.hpp"
#include "chaoslab/geometry.hpp"
#include "chaoslab/models.hpp"

namespace chaoslab {

KIsoFunctional::KIsoFunctional(int k, double r, int d) : k_(k), r_(r), d_(d) {
  CHAOSLAB_REQUIRE(k >= 1, "k must be a positive integer");
  CHAOSLAB_REQUIRE(d >= 1 && d <= kMaxDimension, "dimension must be in [1, 8]");
  CHAOSLAB_REQUIRE(std::isfinite(r) && r > 0.0 && r < 0.5, "radius must lie in (0, 1/2) on the unit torus");
}

void KIsoFunctional::check_pattern(const PointPattern& mu) const {
  CHAOSLAB_REQUIRE(mu.window().is_torus() && mu.dimension() == d_,
                   "kiso needs a pattern on the unit torus of dimension " + std::to_string(d_));
}

std::vector<std::uint32_t> KIsoFunctional::occupancies(const PointPattern& mu) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  std::vector<std::uint32_t> occ(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r_));
  return occ;
}

double KIsoFunctional::evaluate(const PointPattern& mu) const {
  std::size_t n = 0;
  for (auto o : occupancies(mu)) n += o <= static_cast<std::uint32_t>(k_);
  return static_cast<double>(n);
}

std::vector<double> KIsoFunctional::scores(const PointPattern& mu) const {
  const auto occ = occupancies(mu);
  std::vector<double> out(occ.size());
  for (std::size_t i = 0; i < occ.size(); ++i) out[i] = occ[i] <= static_cast<std::uint32_t>(k_) ? 1.0 : 0.0;
  return out;
}

namespace {

// For every point, the number of neighbours (other than itself) whose
// occupancy equals `target`.
std::vector<std::uint32_t> neighbours_at(const PointPattern& mu, const SpatialIndex& index,
                                         const std::vector<std::uint32_t>& occ, std::uint32_t target, double r) {
  std::vector<std::uint32_t> out(mu.size(), 0);
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (occ[j] != target) continue;
    index.for_each_within(mu[j], r, [&](std::size_t i) {
      if (i != j) ++out[i];
    });
  }
  return out;
}

}  // namespace

std::vector<double> KIsoFunctional::remove_one_costs(const PointPattern& mu) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  std::vector<std::uint32_t> occ(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r_));
  const auto k = static_cast<std::uint32_t>(k_);
  const auto lost = neighbours_at(mu, index, occ, k + 1, r_);
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = (occ[i] <= k ? 1.0 : 0.0) - static_cast<double>(lost[i]);
  return out;
}

std::vector<double> KIsoFunctional::add_one_costs(const PointPattern& mu, const PointPattern& xs) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  std::vector<std::uint32_t> occ(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r_));
  const auto k = static_cast<std::uint32_t>(k_);
  std::vector<double> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) {
    std::uint32_t m = 0, at_k = 0;
    index.for_each_within(xs[j], r_, [&](std::size_t i) {
      ++m;
      at_k += occ[i] == k;
    });
    out[j] = (m + 1 <= k ? 1.0 : 0.0) - static_cast<double>(at_k);
  }
  return out;
}

std::vector<double> KIsoFunctional::inserted_scores(const PointPattern& mu, const PointPattern& xs) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  std::vector<double> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = index.count_within(xs[j], r_) + 1 <= static_cast<std::size_t>(k_);
  return out;
}

std::pair<double, double> KIsoFunctional::pair_inserted_scores(const PointPattern& mu, std::span<const double> x,
                                                               std::span<const double> y) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  const std::size_t close = within_radius(mu.window().squared_distance(x, y), r_) ? 1 : 0;
  const auto k = static_cast<std::size_t>(k_);
  const double fx = index.count_within(x, r_) + 1 + close <= k ? 1.0 : 0.0;
  const double fy = index.count_within(y, r_) + 1 + close <= k ? 1.0 : 0.0;
  return {fx, fy};
}

KIsoFunctional::Sets KIsoFunctional::extract_sets(const PointPattern& mu) const {
  check_pattern(mu);
  SpatialIndex index(mu, r_);
  std::vector<std::uint32_t> occ(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r_));
  const auto k = static_cast<std::uint32_t>(k_);
  const auto lost = neighbours_at(mu, index, occ, k + 1, r_);
  Sets sets;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (occ[i] <= k) sets.small_degree.push_back(i);
    if (lost[i] > 0) sets.pivotal_degree.push_back(i);
  }
  return sets;
}

std::vector<std::size_t> KIsoFunctional::chaotic_set(const PointPattern& mu) const {
  return extract_sets(mu).pivotal_degree;
}

double kiso_expected_count(double s, double r, int d, int k) {
  CHAOSLAB_REQUIRE(s > 0.0 && r > 0.0 && k >= 1, "invalid parameters");
  const double a = unit_ball_volume(d) * s * std::pow(r, d);
  double term = std::exp(-a), acc = 0.0;
  for (int n = 0; n < k; ++n) {
    acc += term;
    term *= a / (n + 1);
  }
  return s * acc;
}

namespace {

enum class KIsoPart { small_degree, degree_loss, pivotal_degree };

class KIsoLocal final : public LocalFunction {
 public:
  KIsoLocal(int k, double r, int d, KIsoPart part) : f_(k, r, d), part_(part) {}

  std::string name() const override {
    switch (part_) {
      case KIsoPart::small_degree: return "kiso_small_degree";
      case KIsoPart::degree_loss: return "kiso_degree_loss";
      case KIsoPart::pivotal_degree: return "kiso_pivotal_degree";
    }
    return "";
  }

  std::vector<double> at_points(const PointPattern& mu) const override {
    f_.check_pattern(mu);
    const double r = f_.r();
    const auto k = static_cast<std::uint32_t>(f_.k());
    SpatialIndex index(mu, r);
    std::vector<std::uint32_t> occ(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r));
    std::vector<double> out(mu.size());
    if (part_ == KIsoPart::small_degree) {
      for (std::size_t i = 0; i < mu.size(); ++i) out[i] = occ[i] <= k ? 1.0 : 0.0;
      return out;
    }
    // Removing x_i lowers each neighbour's occupancy by one.
    const auto lost = neighbours_at(mu, index, occ, k + 1, r);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      out[i] = part_ == KIsoPart::degree_loss ? static_cast<double>(lost[i]) : (lost[i] > 0 ? 1.0 : 0.0);
    }
    return out;
  }

  std::vector<double> at_locations(const PointPattern& mu, const PointPattern& xs) const override {
    f_.check_pattern(mu);
    const double r = f_.r();
    const auto k = static_cast<std::uint32_t>(f_.k());
    SpatialIndex index(mu, r);
    std::vector<double> out(xs.size());
    if (part_ == KIsoPart::small_degree) {
      for (std::size_t j = 0; j < xs.size(); ++j) out[j] = index.count_within(xs[j], r) + 1 <= k ? 1.0 : 0.0;
      return out;
    }
    std::vector<std::uint32_t> occ(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) occ[i] = static_cast<std::uint32_t>(index.count_within(mu[i], r));
    for (std::size_t j = 0; j < xs.size(); ++j) {
      std::uint32_t at_k = 0;
      index.for_each_within(xs[j], r, [&](std::size_t i) { at_k += occ[i] == k; });
      out[j] = part_ == KIsoPart::degree_loss ? static_cast<double>(at_k) : (at_k > 0 ? 1.0 : 0.0);
    }
    return out;
  }

  double interaction_range() const override { return part_ == KIsoPart::small_degree ? f_.r() : 2.0 * f_.r(); }
  bool claims_nonincreasing() const override { return part_ == KIsoPart::small_degree; }

 private:
  KIsoFunctional f_;
  KIsoPart part_;
};

}  // namespace

LocalFunctionPtr kiso_small_degree(int k, double r, int d) {
  return std::make_shared<KIsoLocal>(k, r, d, KIsoPart::small_degree);
}
LocalFunctionPtr kiso_degree_loss(int k, double r, int d) {
  return std::make_shared<KIsoLocal>(k, r, d, KIsoPart::degree_loss);
}
LocalFunctionPtr kiso_pivotal_degree(int k, double r, int d) {
  return std::make_shared<KIsoLocal>(k, r, d, KIsoPart::pivotal_degree);
}

}  // namespace chaoslab
