#include "chaoslab/functional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "chaoslab/error.hpp"
#include "chaoslab/geometry.hpp"

namespace chaoslab {

std::vector<double> Functional::add_one_costs(const PointPattern& mu, const PointPattern& xs) const {
  std::vector<double> out(xs.size());
  const double base = evaluate(mu);
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = evaluate(mu.with(xs[j])) - base;
  return out;
}

std::vector<double> Functional::remove_one_costs(const PointPattern& mu) const {
  std::vector<double> out(mu.size());
  const double base = evaluate(mu);
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = base - evaluate(mu.without(i));
  return out;
}

double Functional::add_one_cost(std::span<const double> x, const PointPattern& mu) const {
  PointPattern xs(mu.window());
  xs.push_back(x);
  return add_one_costs(mu, xs)[0];
}

double Functional::remove_one_cost(std::size_t i, const PointPattern& mu) const {
  CHAOSLAB_REQUIRE(i < mu.size(), "point index out of range");
  return remove_one_costs(mu)[i];
}

std::vector<std::size_t> Functional::chaotic_set(const PointPattern& mu) const {
  const auto costs = remove_one_costs(mu);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (costs[i] != 0.0) out.push_back(i);
  }
  return out;
}

std::vector<double> Functional::scores(const PointPattern&) const {
  throw InvalidInput("functional " + name() + " has no score representation");
}

std::vector<double> Functional::inserted_scores(const PointPattern& mu, const PointPattern& xs) const {
  std::vector<double> out(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j) out[j] = scores(mu.with(xs[j])).back();
  return out;
}

std::pair<double, double> Functional::pair_inserted_scores(const PointPattern& mu, std::span<const double> x,
                                                           std::span<const double> y) const {
  const auto s = scores(mu.with(x).with(y));
  return {s[s.size() - 2], s[s.size() - 1]};
}

double reevaluated_add_one_cost(const Functional& f, std::span<const double> x, const PointPattern& mu) {
  return f.evaluate(mu.with(x)) - f.evaluate(mu);
}

double reevaluated_remove_one_cost(const Functional& f, std::size_t i, const PointPattern& mu) {
  return f.evaluate(mu) - f.evaluate(mu.without(i));
}

std::vector<double> LocalFunction::at_points(const PointPattern& mu) const {
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) {
    PointPattern x(mu.window());
    x.push_back(mu[i]);
    out[i] = at_locations(mu.without(i), x)[0];
  }
  return out;
}

namespace {

class Constant final : public LocalFunction {
 public:
  explicit Constant(double c) : c_(c) { CHAOSLAB_REQUIRE(c >= 0.0 && std::isfinite(c), "constant g must be >= 0"); }
  std::string name() const override { return "constant"; }
  std::vector<double> at_points(const PointPattern& mu) const override { return std::vector<double>(mu.size(), c_); }
  std::vector<double> at_locations(const PointPattern&, const PointPattern& xs) const override {
    return std::vector<double>(xs.size(), c_);
  }
  double interaction_range() const override { return 0.0; }
  bool claims_nonincreasing() const override { return true; }

 private:
  double c_;
};

class VoidIndicator final : public LocalFunction {
 public:
  explicit VoidIndicator(double r) : r_(r) { CHAOSLAB_REQUIRE(r > 0.0 && std::isfinite(r), "radius must be positive"); }
  std::string name() const override { return "void"; }
  std::vector<double> at_points(const PointPattern& mu) const override {
    SpatialIndex index(mu, r_);
    std::vector<double> out(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) out[i] = index.count_within(mu[i], r_, i) == 0 ? 1.0 : 0.0;
    return out;
  }
  std::vector<double> at_locations(const PointPattern& mu, const PointPattern& xs) const override {
    SpatialIndex index(mu, r_);
    std::vector<double> out(xs.size());
    for (std::size_t j = 0; j < xs.size(); ++j) out[j] = index.count_within(xs[j], r_) == 0 ? 1.0 : 0.0;
    return out;
  }
  double interaction_range() const override { return r_; }
  bool claims_nonincreasing() const override { return true; }

 private:
  double r_;
};

enum class CostTransform { square, positive, negative };

class CostFunction final : public LocalFunction {
 public:
  CostFunction(FunctionalPtr f, CostTransform t) : f_(std::move(f)), t_(t) {
    CHAOSLAB_REQUIRE(f_ != nullptr, "functional is null");
  }
  std::string name() const override {
    switch (t_) {
      case CostTransform::square: return "sq_cost(" + f_->name() + ")";
      case CostTransform::positive: return "pos_cost(" + f_->name() + ")";
      case CostTransform::negative: return "neg_cost(" + f_->name() + ")";
    }
    return "";
  }
  std::vector<double> at_points(const PointPattern& mu) const override { return apply(f_->remove_one_costs(mu)); }
  std::vector<double> at_locations(const PointPattern& mu, const PointPattern& xs) const override {
    return apply(f_->add_one_costs(mu, xs));
  }
  double interaction_range() const override { return f_->interaction_range(); }

 private:
  std::vector<double> apply(std::vector<double> v) const {
    for (double& c : v) {
      switch (t_) {
        case CostTransform::square: c = c * c; break;
        case CostTransform::positive: c = std::max(c, 0.0); break;
        case CostTransform::negative: c = std::max(-c, 0.0); break;
      }
    }
    return v;
  }
  FunctionalPtr f_;
  CostTransform t_;
};

class Affine final : public Functional {
 public:
  Affine(FunctionalPtr g, double a, double b) : g_(std::move(g)), a_(a), b_(b) {
    CHAOSLAB_REQUIRE(g_ != nullptr, "functional is null");
    CHAOSLAB_REQUIRE(std::isfinite(a) && std::isfinite(b), "affine coefficients must be finite");
  }
  std::string name() const override { return "affine(" + g_->name() + ")"; }
  double evaluate(const PointPattern& mu) const override { return a_ * g_->evaluate(mu) + b_; }
  std::vector<double> add_one_costs(const PointPattern& mu, const PointPattern& xs) const override {
    auto v = g_->add_one_costs(mu, xs);
    for (double& c : v) c *= a_;
    return v;
  }
  std::vector<double> remove_one_costs(const PointPattern& mu) const override {
    auto v = g_->remove_one_costs(mu);
    for (double& c : v) c *= a_;
    return v;
  }
  std::vector<std::size_t> chaotic_set(const PointPattern& mu) const override {
    return a_ == 0.0 ? std::vector<std::size_t>{} : g_->chaotic_set(mu);
  }
  double interaction_range() const override { return g_->interaction_range(); }

 private:
  FunctionalPtr g_;
  double a_, b_;
};

}  // namespace

LocalFunctionPtr constant_function(double c) { return std::make_shared<Constant>(c); }
LocalFunctionPtr void_indicator(double r) { return std::make_shared<VoidIndicator>(r); }
LocalFunctionPtr squared_add_one(FunctionalPtr f) {
  return std::make_shared<CostFunction>(std::move(f), CostTransform::square);
}
LocalFunctionPtr positive_part(FunctionalPtr f) {
  return std::make_shared<CostFunction>(std::move(f), CostTransform::positive);
}
LocalFunctionPtr negative_part(FunctionalPtr f) {
  return std::make_shared<CostFunction>(std::move(f), CostTransform::negative);
}
FunctionalPtr affine(FunctionalPtr g, double a, double b) { return std::make_shared<Affine>(std::move(g), a, b); }

void stamp(Estimate& e, const RunSpec& run) {
  e.seed = std::to_string(run.rng.master_seed()) + ":" + run.rng.label();
}

namespace {

void check_run(const RunSpec& run) {
  CHAOSLAB_REQUIRE(run.replications >= 2, "at least two replications are required");
}

}  // namespace

std::vector<PoincareSample> poincare_samples(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  check_run(run);
  return replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const PointPattern eta = sample_poisson(intensity, eng);
    PoincareSample s;
    s.value = f.evaluate(eta);
    for (double c : f.remove_one_costs(eta)) s.rhs += c * c;
    return s;
  });
}

namespace {

std::vector<double> values_of(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  check_run(run);
  return replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    return f.evaluate(sample_poisson(intensity, eng));
  });
}

}  // namespace

Estimate estimate_mean(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  const auto v = values_of(f, intensity, run);
  Estimate e = mean_estimate(v);
  stamp(e, run);
  return e;
}

Estimate estimate_variance(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  const auto v = values_of(f, intensity, run);
  Estimate e = variance_estimate(v);
  stamp(e, run);
  return e;
}

Estimate poincare_rhs(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  const auto samples = poincare_samples(f, intensity, run);
  std::vector<double> rhs;
  rhs.reserve(samples.size());
  for (const auto& s : samples) rhs.push_back(s.rhs);
  Estimate e = mean_estimate(rhs);
  stamp(e, run);
  return e;
}

Estimate superconcentration_ratio(const Functional& f, const Intensity& intensity, const RunSpec& run) {
  const auto samples = poincare_samples(f, intensity, run);
  std::vector<double> v, rhs;
  for (const auto& s : samples) {
    v.push_back(s.value);
    rhs.push_back(s.rhs);
  }
  Estimate e = variance_ratio(v, rhs);
  stamp(e, run);
  return e;
}

MeckeReport mecke_check(const LocalFunction& g, const Intensity& intensity, const RunSpec& run,
                        std::size_t insertions) {
  check_run(run);
  CHAOSLAB_REQUIRE(insertions >= 1, "at least one insertion location per pattern is required");
  struct Pair {
    double point_sum = 0.0;
    double insertion = 0.0;
  };
  const auto draws = replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const PointPattern eta = sample_poisson(intensity, eng);
    Pair p;
    for (double v : g.at_points(eta)) {
      CHAOSLAB_REQUIRE(v >= 0.0, "Mecke integrand must be nonnegative");
      p.point_sum += v;
    }
    auto loc_eng = stream.child("insert").engine();
    const PointPattern xs = sample_uniform_points(intensity.window(), insertions, loc_eng);
    double acc = 0.0;
    for (double v : g.at_locations(eta, xs)) {
      CHAOSLAB_REQUIRE(v >= 0.0, "Mecke integrand must be nonnegative");
      acc += v;
    }
    p.insertion = intensity.mass() * acc / static_cast<double>(insertions);
    return p;
  });
  std::vector<double> a, b;
  for (const auto& d : draws) {
    a.push_back(d.point_sum);
    b.push_back(d.insertion);
  }
  MeckeReport r;
  r.point_sum = mean_estimate(a);
  r.insertion = mean_estimate(b);
  stamp(r.point_sum, run);
  stamp(r.insertion, run);
  const double diff = std::abs(r.point_sum.value - r.insertion.value);
  const double se = combined_se(r.point_sum.se, r.insertion.se);
  if (se > 0.0) {
    r.z = diff / se;
    r.agree = r.z <= 3.0;
  } else {
    r.z = 0.0;
    r.agree = diff <= 1e-9 * std::max(1.0, std::abs(r.point_sum.value));
  }
  return r;
}

void to_json(nlohmann::json& j, const MeckeReport& r) {
  j = {{"point_sum", r.point_sum}, {"insertion", r.insertion}, {"z", r.z}, {"agree", r.agree}};
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

void sample_in_ball(std::span<const double> center, double r, Engine& eng, std::span<double> out) {
  const std::size_t d = center.size();
  while (true) {
    double sq = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double u = 2.0 * open_uniform(eng) - 1.0;
      out[a] = u;
      sq += u * u;
    }
    if (sq <= 1.0) break;
  }
  for (std::size_t a = 0; a < d; ++a) out[a] = center[a] + r * out[a];
}

bool fold_into_window(const Window& w, std::span<double> x) {
  if (w.is_torus()) {
    for (double& c : x) {
      c -= std::floor(c);
      if (c >= 1.0) c = 0.0;
    }
    return true;
  }
  return w.contains(x);
}

}  // namespace chaoslab
