#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chaoslab/pointproc.hpp"
#include "chaoslab/replicate.hpp"
#include "chaoslab/stats.hpp"

namespace chaoslab {

inline constexpr double kInfiniteRange = std::numeric_limits<double>::infinity();

/// A Poisson functional F with its add-one and remove-one costs.
///
/// The defaults compute costs by re-evaluation. Models override the batch
/// forms with local computations that must agree exactly. Implementations are
/// pure and may be called concurrently.
class Functional {
 public:
  virtual ~Functional() = default;
  virtual std::string name() const = 0;
  virtual double evaluate(const PointPattern& mu) const = 0;

  /// D_x F(mu) for every location in `xs`.
  virtual std::vector<double> add_one_costs(const PointPattern& mu, const PointPattern& xs) const;
  /// D^-_x F(mu) for every point x of mu, in point order.
  virtual std::vector<double> remove_one_costs(const PointPattern& mu) const;

  double add_one_cost(std::span<const double> x, const PointPattern& mu) const;
  double remove_one_cost(std::size_t i, const PointPattern& mu) const;

  /// Indices of the chaotic set A(mu); by default {x : D^-_x F(mu) != 0}.
  virtual std::vector<std::size_t> chaotic_set(const PointPattern& mu) const;

  /// Sum-of-scores representation F(mu) = sum_x f(x, mu), when available.
  virtual bool has_score() const { return false; }
  virtual std::vector<double> scores(const PointPattern& mu) const;
  /// f(x, mu + delta_x) for every location in `xs`.
  virtual std::vector<double> inserted_scores(const PointPattern& mu, const PointPattern& xs) const;
  /// (f(x, mu + dx + dy), f(y, mu + dx + dy)).
  virtual std::pair<double, double> pair_inserted_scores(const PointPattern& mu, std::span<const double> x,
                                                         std::span<const double> y) const;

  /// Radius R such that D_x F(mu) depends on mu only through B(x, R).
  virtual double interaction_range() const { return kInfiniteRange; }
};

/// Costs computed by plain re-evaluation, the reference for model overrides.
double reevaluated_add_one_cost(const Functional& f, std::span<const double> x, const PointPattern& mu);
double reevaluated_remove_one_cost(const Functional& f, std::size_t i, const PointPattern& mu);

/// A nonnegative local function g(x, mu), x not a point of mu.
class LocalFunction {
 public:
  virtual ~LocalFunction() = default;
  virtual std::string name() const = 0;
  /// g(x_i, mu - delta_{x_i}) for every point x_i of mu.
  virtual std::vector<double> at_points(const PointPattern& mu) const;
  /// g(x, mu) for every location in `xs`.
  virtual std::vector<double> at_locations(const PointPattern& mu, const PointPattern& xs) const = 0;
  /// Radius R such that g(x, mu) depends on mu only through B(x, R).
  virtual double interaction_range() const { return kInfiniteRange; }
  /// Whether D_y g(x, mu) <= 0 is claimed for all x, y, mu.
  virtual bool claims_nonincreasing() const { return false; }
};

using FunctionalPtr = std::shared_ptr<const Functional>;
using LocalFunctionPtr = std::shared_ptr<const LocalFunction>;

/// g = c.
LocalFunctionPtr constant_function(double c);
/// g(x, mu) = 1(mu(B(x, r)) = 0); as a Mecke integrand, h(x, mu) = 1(mu(B(x,r)) = 1).
LocalFunctionPtr void_indicator(double r);
/// g(x, mu) = (D_x F(mu))^2; as a Mecke integrand, h = (D^-_x F)^2.
LocalFunctionPtr squared_add_one(FunctionalPtr f);
/// g = (D F)_+ and g = (D F)_-.
LocalFunctionPtr positive_part(FunctionalPtr f);
LocalFunctionPtr negative_part(FunctionalPtr f);

/// F = a * G + b.
FunctionalPtr affine(FunctionalPtr g, double a, double b);

/// Per-replication draws of F(eta) and sum_x (D^-_x F(eta))^2 on one pattern.
struct PoincareSample {
  double value = 0.0;
  double rhs = 0.0;
};

std::vector<PoincareSample> poincare_samples(const Functional& f, const Intensity& intensity, const RunSpec& run);

Estimate estimate_mean(const Functional& f, const Intensity& intensity, const RunSpec& run);
Estimate estimate_variance(const Functional& f, const Intensity& intensity, const RunSpec& run);
/// E sum_x (D^-_x F)^2, equal to E int (D_x F)^2 lambda(dx) by the Mecke formula.
Estimate poincare_rhs(const Functional& f, const Intensity& intensity, const RunSpec& run);
/// Var / Poincare bound with a delta-method standard error.
Estimate superconcentration_ratio(const Functional& f, const Intensity& intensity, const RunSpec& run);

struct MeckeReport {
  Estimate point_sum;
  Estimate insertion;
  double z = 0.0;  // |difference| / combined s.e.
  bool agree = false;
};

inline constexpr std::size_t kDefaultInsertions = 32;

/// Both sides of the Mecke formula for h(x, mu) = g(x, mu - delta_x):
/// E sum_{x in eta} h(x, eta) and int E h(x, eta + delta_x) lambda(dx), the
/// latter from `insertions` uniform locations per pattern.
MeckeReport mecke_check(const LocalFunction& g, const Intensity& intensity, const RunSpec& run,
                        std::size_t insertions = kDefaultInsertions);

void to_json(nlohmann::json& j, const MeckeReport& r);

/// Estimates carry the master stream; fills the seed field.
void stamp(Estimate& e, const RunSpec& run);

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

/// Uniform point in the Euclidean ball B(center, r); it may leave the window.
void sample_in_ball(std::span<const double> center, double r, Engine& eng, std::span<double> out);

/// Wraps torus coordinates into [0,1); returns false if a box point is outside.
bool fold_into_window(const Window& w, std::span<double> x);

}  // namespace chaoslab
