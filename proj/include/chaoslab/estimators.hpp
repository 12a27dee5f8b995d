#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "chaoslab/functional.hpp"
#include "chaoslab/models.hpp"

namespace chaoslab {

/// Increasing time nodes starting at 0. Integrals over [0, tmax] use an
/// exponentially fitted trapezoid rule: e^t f(t) is interpolated linearly on
/// each interval and integrated exactly against e^{-t}, which is exact when
/// f is proportional to e^{-t}.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> nodes);
  /// {0, delta, delta q, ..., tmax} with `nodes` entries in total, plus extras.
  static TimeGrid geometric(double delta = 0.01, std::size_t nodes = 40, double tmax = 10.0,
                            std::vector<double> extra = {});

  const std::vector<double>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  double tmax() const { return nodes_.back(); }
  /// Index of a node equal to t up to 1e-12, or size() if absent.
  std::size_t find(double t) const;

  std::vector<double> trapezoid_weights() const;
  std::vector<double> fitted_weights() const;

 private:
  std::vector<double> nodes_;
};

void to_json(nlohmann::json& j, const TimeGrid& g);
TimeGrid time_grid_from_json(const nlohmann::json& j);

/// Integral of a tabulated curve over the grid with its error indicators.
struct Quadrature {
  double value = 0.0;
  double error = 0.0;  // |plain trapezoid - fitted|
  double tail = 0.0;   // e^{-tmax} * curve(0)
};

Quadrature integrate(const TimeGrid& grid, std::span<const double> curve);

/// Per-point field evaluated on a slice, one value per point in point order.
using PointField = std::function<std::vector<double>(const PointPattern&)>;

/// Coupled point sums S_t = sum over x in eta ∩ eta^t of u(x, eta) v(x, eta^t),
/// with u = fields[first] and v = fields[second].
struct FieldPair {
  std::size_t first = 0;
  std::size_t second = 0;
};

struct CoupledDraw {
  std::vector<std::vector<double>> sums;  // [pair][node]
  double value = 0.0;                     // `at_zero` on the initial pattern
};

struct SweepOptions {
  std::function<double(const PointPattern&)> at_zero;
  /// Called with every field's values on each slice; may throw to reject.
  std::function<void(const std::vector<std::vector<double>>&)> on_slice;
};

/// One stationary birth-death trajectory per replication, sliced at every node.
std::vector<CoupledDraw> coupled_sweep(const Intensity& intensity, const TimeGrid& grid, const RunSpec& run,
                                       const std::vector<PointField>& fields, const std::vector<FieldPair>& pairs,
                                       const SweepOptions& options = {});

/// Paired check of a curve against monotone decrease: the first node i where
/// mean(c_{i+1} - c_i) exceeds 3 s.e. of the paired difference.
struct MonotoneCheck {
  bool holds = true;
  std::size_t first_violation = 0;  // node index i+1, valid when !holds
  double worst_z = 0.0;
};

MonotoneCheck check_nonincreasing(const std::vector<std::vector<double>>& per_rep_curves);

void to_json(nlohmann::json& j, const MonotoneCheck& m);

// ---------------------------------------------------------------------------

struct OverlapCurve {
  std::vector<double> t;
  std::vector<Estimate> values;   // E|A^0 ∩ B^t|
  std::vector<Estimate> damped;   // e^{-t} E|A^0 ∩ B^t| / E|A^0|
  std::vector<Estimate> grown;    // e^{t} E|A^0 ∩ B^t| / E|A^0|
  MonotoneCheck damped_monotone;
  MonotoneCheck grown_monotone;
  std::string first_kind;
  std::string second_kind;
};

void to_json(nlohmann::json& j, const OverlapCurve& c);

/// Identifier-level overlaps of A (at time 0) with B (at time t) along shared
/// trajectories. B defaults to A.
OverlapCurve overlap_curve(const SetExtractor& first, const Intensity& intensity, const TimeGrid& grid,
                           const RunSpec& run, const SetExtractor& second = {}, std::string first_kind = "",
                           std::string second_kind = "");

struct IdentityReport {
  Estimate lhs;  // sample variance
  Estimate rhs;  // quadrature of the coupled integrand
  double tail_bound = 0.0;
  double quadrature_error = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;  // 3 combined s.e. + quadrature error + tail bound
  bool agree = false;
  std::vector<double> t;
  std::vector<Estimate> integrand;
  MonotoneCheck integrand_monotone;  // of e^t times the integrand
};

void to_json(nlohmann::json& j, const IdentityReport& r);

IdentityReport variance_identity_check(const Functional& f, const Intensity& intensity, const TimeGrid& grid,
                                       const RunSpec& run);

/// e^t E sum_{x in eta ∩ eta^t} D^-F(eta) D^-F(eta^t) / E sum_x (D^-F(eta))^2.
Estimate chaos_coefficient(const Functional& f, const Intensity& intensity, double t, const RunSpec& run);

struct ChaosCurve {
  std::vector<double> t;
  std::vector<Estimate> coefficient;
  MonotoneCheck monotone;
};

void to_json(nlohmann::json& j, const ChaosCurve& c);

ChaosCurve chaos_curve(const Functional& f, const Intensity& intensity, const TimeGrid& grid, const RunSpec& run);

/// D_x F = g1(x, .) - g2(x, .) with g1, g2 >= 0.
struct Decomposition {
  std::string name;
  LocalFunctionPtr g1;
  LocalFunctionPtr g2;
  bool require_disjoint = true;
};

/// g1 = (DF)_+, g2 = (DF)_-.
Decomposition sign_split(FunctionalPtr f);
/// g1 = small-degree score, g2 = degree loss of the neighbours.
Decomposition kiso_score_split(int k, double r, int d);

struct DecompositionReport {
  std::string name;
  Estimate t1, t2, t3;
  Estimate combined;  // T1 + T2 - 2 T3
  Estimate variance;
  double quadrature_error = 0.0;
  double tail_bound = 0.0;
  double residual = 0.0;
  double tolerance = 0.0;
  bool closes = false;
};

void to_json(nlohmann::json& j, const DecompositionReport& r);

DecompositionReport decomposition_terms(const Functional& f, const Decomposition& split, const Intensity& intensity,
                                        const TimeGrid& grid, const RunSpec& run);

struct BoundCheck {
  Estimate lhs;
  Estimate rhs;
  double tolerance = 0.0;
  bool holds = false;
  bool checked = false;
  std::string note;
};

void to_json(nlohmann::json& j, const BoundCheck& b);

struct L1L2Report {
  std::string g;
  BoundCheck plain;
  BoundCheck log_improved;
  bool nonincreasing_claimed = false;
  bool nonincreasing_confirmed = false;
  std::size_t monotonicity_probes = 0;
  std::size_t monotonicity_counterexamples = 0;
  Estimate l1;  // integral of E g
  Estimate l2;  // integral of E g^2
};

void to_json(nlohmann::json& j, const L1L2Report& r);

struct BoundOptions {
  std::size_t insertions = kDefaultInsertions;
  /// Fixed locations per pattern for location-wise norms on a box.
  std::size_t box_locations = 64;
};

/// Integrated coupled correlation of g against the L^2 bound and, when g is
/// nonincreasing, the log-improved bound 2 sum_x ||g_x||_2^2 / (1 + log(||g_x||_2 / ||g_x||_1) / 2).
L1L2Report l1l2_bound_check(const LocalFunction& g, const Intensity& intensity, const TimeGrid& grid,
                            const RunSpec& run, const BoundOptions& options = {});

struct LowerBoundReport {
  std::string g;
  Estimate alpha;  // E int int (D_y g)^2 / E int g^2
  BoundCheck bound;
};

void to_json(nlohmann::json& j, const LowerBoundReport& r);

/// Insertion estimate of alpha, with y uniform in B(x, R) for finite range R.
Estimate estimate_alpha(const LocalFunction& g, const Intensity& intensity, const RunSpec& run,
                        std::size_t insertions = kDefaultInsertions);

LowerBoundReport variance_lower_bound_check(const LocalFunction& g, const Intensity& intensity, const TimeGrid& grid,
                                            const RunSpec& run, const BoundOptions& options = {});

enum class SupMode { pooled, sampled };

struct ScoresReport {
  Estimate t_s;          // two-point insertion estimate
  Estimate score_norm;   // int E f(x, eta + dx)^2
  Estimate a1_ratio;     // t_s / score_norm
  Estimate epsilon;      // (A2) ratio, pooled or max over locations
  std::string sup_mode;
  std::size_t locations = 0;
};

void to_json(nlohmann::json& j, const ScoresReport& r);

struct ScoresOptions {
  std::size_t insertions = kDefaultInsertions;
  SupMode sup = SupMode::pooled;
  std::size_t sup_locations = 64;
};

ScoresReport sums_of_scores_conditions(const Functional& f, const Intensity& intensity, const RunSpec& run,
                                       const ScoresOptions& options = {});

}  // namespace chaoslab
