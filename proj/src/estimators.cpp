#include "chaoslab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chaoslab/error.hpp"

namespace chaoslab {

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  CHAOSLAB_REQUIRE(nodes_.size() >= 2, "time grid needs at least two nodes");
  CHAOSLAB_REQUIRE(nodes_.front() == 0.0, "time grid must start at 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    CHAOSLAB_REQUIRE(std::isfinite(nodes_[i]) && nodes_[i] > nodes_[i - 1], "time grid must be strictly increasing");
  }
}

TimeGrid TimeGrid::geometric(double delta, std::size_t nodes, double tmax, std::vector<double> extra) {
  CHAOSLAB_REQUIRE(nodes >= 3, "geometric grid needs at least three nodes");
  CHAOSLAB_REQUIRE(std::isfinite(delta) && std::isfinite(tmax) && delta > 0.0 && tmax > delta,
                   "geometric grid needs 0 < delta < tmax");
  std::vector<double> t{0.0};
  const double q = std::pow(tmax / delta, 1.0 / static_cast<double>(nodes - 2));
  for (std::size_t i = 0; i + 1 < nodes; ++i) t.push_back(i + 2 == nodes ? tmax : delta * std::pow(q, i));
  for (double e : extra) {
    CHAOSLAB_REQUIRE(std::isfinite(e) && e > 0.0 && e < tmax, "extra grid nodes must lie in (0, tmax)");
    t.push_back(e);
  }
  std::sort(t.begin(), t.end());
  std::vector<double> out;
  for (double v : t) {
    if (out.empty() || v - out.back() > 1e-12) out.push_back(v);
  }
  return TimeGrid(std::move(out));
}

std::size_t TimeGrid::find(double t) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (std::abs(nodes_[i] - t) <= 1e-12) return i;
  }
  return nodes_.size();
}

std::vector<double> TimeGrid::trapezoid_weights() const {
  std::vector<double> w(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

std::vector<double> TimeGrid::fitted_weights() const {
  std::vector<double> w(nodes_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    w[i] += (h + std::expm1(-h)) / h;
    w[i + 1] += (std::expm1(h) - h) / h;
  }
  return w;
}

void to_json(nlohmann::json& j, const TimeGrid& g) { j = {{"points", g.nodes()}}; }

TimeGrid time_grid_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object(), "t_grid must be an object");
  if (j.contains("points")) return TimeGrid(j.at("points").get<std::vector<double>>());
  const double delta = j.value("delta", 0.01);
  const double tmax = j.value("tmax", 10.0);
  const auto nodes = j.value("nodes", std::size_t{40});
  const auto extra = j.value("extra", std::vector<double>{});
  return TimeGrid::geometric(delta, nodes, tmax, extra);
}

Quadrature integrate(const TimeGrid& grid, std::span<const double> curve) {
  CHAOSLAB_REQUIRE(curve.size() == grid.size(), "curve and grid sizes differ");
  const auto wf = grid.fitted_weights();
  const auto wt = grid.trapezoid_weights();
  Quadrature q;
  double plain = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    q.value += wf[i] * curve[i];
    plain += wt[i] * curve[i];
  }
  q.error = std::abs(plain - q.value);
  q.tail = std::exp(-grid.tmax()) * std::abs(curve[0]);
  return q;
}

namespace {

double dot(std::span<const double> w, std::span<const double> c) {
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * c[i];
  return acc;
}

std::vector<double> column(const std::vector<CoupledDraw>& draws, std::size_t pair, std::size_t node) {
  std::vector<double> out;
  out.reserve(draws.size());
  for (const auto& d : draws) out.push_back(d.sums[pair][node]);
  return out;
}

std::vector<double> mean_curve(const std::vector<CoupledDraw>& draws, std::size_t pair) {
  const std::size_t nodes = draws.front().sums[pair].size();
  std::vector<double> out(nodes, 0.0);
  for (const auto& d : draws) {
    for (std::size_t g = 0; g < nodes; ++g) out[g] += d.sums[pair][g];
  }
  for (double& v : out) v /= static_cast<double>(draws.size());
  return out;
}

Estimate stamped(Estimate e, const RunSpec& run) {
  stamp(e, run);
  return e;
}

void check_run(const RunSpec& run) {
  CHAOSLAB_REQUIRE(run.replications >= 2, "at least two replications are required");
}

}  // namespace

std::vector<CoupledDraw> coupled_sweep(const Intensity& intensity, const TimeGrid& grid, const RunSpec& run,
                                       const std::vector<PointField>& fields, const std::vector<FieldPair>& pairs,
                                       const SweepOptions& options) {
  check_run(run);
  CHAOSLAB_REQUIRE(!fields.empty() && !pairs.empty(), "coupled sweep needs fields and pairs");
  std::vector<std::uint8_t> needed(fields.size(), options.on_slice ? 1 : 0);
  for (const auto& p : pairs) {
    CHAOSLAB_REQUIRE(p.first < fields.size() && p.second < fields.size(), "field pair out of range");
    needed[p.second] = 1;
  }
  const auto& nodes = grid.nodes();
  return replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const BirthDeathTrajectory traj = simulate_trajectory(intensity, grid.tmax(), eng);
    CoupledDraw draw;
    draw.sums.assign(pairs.size(), std::vector<double>(nodes.size(), 0.0));
    const Slice s0 = traj.slice(0.0);
    std::vector<std::vector<double>> u(fields.size());
    for (std::size_t f = 0; f < fields.size(); ++f) {
      u[f] = fields[f](s0.pattern);
      CHAOSLAB_REQUIRE(u[f].size() == s0.pattern.size(), "field returned the wrong number of values");
    }
    if (options.at_zero) draw.value = options.at_zero(s0.pattern);
    if (options.on_slice) options.on_slice(u);
    std::vector<std::vector<double>> v(fields.size());
    for (std::size_t g = 0; g < nodes.size(); ++g) {
      const Slice st = nodes[g] == 0.0 ? s0 : traj.slice(nodes[g]);
      if (nodes[g] == 0.0) {
        v = u;
      } else {
        for (std::size_t f = 0; f < fields.size(); ++f) {
          if (!needed[f]) continue;
          v[f] = fields[f](st.pattern);
          CHAOSLAB_REQUIRE(v[f].size() == st.pattern.size(), "field returned the wrong number of values");
        }
        if (options.on_slice) options.on_slice(v);
      }
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto& a = u[pairs[p].first];
        const auto& b = v[pairs[p].second];
        double acc = 0.0;
        for (std::size_t j = 0; j < st.survivors; ++j) acc += a[st.ids[j]] * b[j];
        draw.sums[p][g] = acc;
      }
    }
    return draw;
  });
}

MonotoneCheck check_nonincreasing(const std::vector<std::vector<double>>& curves) {
  MonotoneCheck m;
  if (curves.size() < 2) return m;
  const std::size_t nodes = curves.front().size();
  std::vector<double> diff(curves.size());
  for (std::size_t i = 0; i + 1 < nodes; ++i) {
    double scale = 0.0;
    for (std::size_t r = 0; r < curves.size(); ++r) {
      diff[r] = curves[r][i + 1] - curves[r][i];
      scale = std::max(scale, std::abs(curves[r][i]));
    }
    const Estimate e = mean_estimate(diff);
    bool bad = false;
    if (e.se > 0.0) {
      const double z = e.value / e.se;
      m.worst_z = std::max(m.worst_z, z);
      bad = z > 3.0;
    } else {
      bad = e.value > 1e-12 * std::max(scale, 1.0);
    }
    if (bad && m.holds) {
      m.holds = false;
      m.first_violation = i + 1;
    }
  }
  return m;
}

void to_json(nlohmann::json& j, const MonotoneCheck& m) {
  j = {{"holds", m.holds}, {"worst_z", m.worst_z}};
  if (!m.holds) j["first_violation"] = m.first_violation;
}

// ---------------------------------------------------------------------------

namespace {

PointField indicator_field(SetExtractor extract) {
  return [extract = std::move(extract)](const PointPattern& mu) {
    std::vector<double> out(mu.size(), 0.0);
    for (std::size_t i : extract(mu)) {
      CHAOSLAB_REQUIRE(i < mu.size(), "set extractor returned an index out of range");
      out[i] = 1.0;
    }
    return out;
  };
}

}  // namespace

OverlapCurve overlap_curve(const SetExtractor& first, const Intensity& intensity, const TimeGrid& grid,
                           const RunSpec& run, const SetExtractor& second, std::string first_kind,
                           std::string second_kind) {
  CHAOSLAB_REQUIRE(static_cast<bool>(first), "overlap curve needs a set extractor");
  std::vector<PointField> fields{indicator_field(first)};
  std::vector<FieldPair> pairs{{0, 0}};
  if (second) {
    fields.push_back(indicator_field(second));
    pairs[0] = {0, 1};
  }
  SweepOptions opts;
  opts.at_zero = [&first](const PointPattern& mu) { return static_cast<double>(first(mu).size()); };
  const auto draws = coupled_sweep(intensity, grid, run, fields, pairs, opts);

  OverlapCurve c;
  c.t = grid.nodes();
  c.first_kind = first_kind.empty() ? "A" : std::move(first_kind);
  c.second_kind = second ? (second_kind.empty() ? "B" : std::move(second_kind)) : c.first_kind;
  std::vector<double> size0;
  for (const auto& d : draws) size0.push_back(d.value);
  std::vector<std::vector<double>> damped(draws.size()), grown(draws.size());
  for (std::size_t g = 0; g < c.t.size(); ++g) {
    const auto o = column(draws, 0, g);
    c.values.push_back(stamped(mean_estimate(o), run));
    std::vector<double> dn(o.size()), up(o.size());
    for (std::size_t r = 0; r < o.size(); ++r) {
      dn[r] = std::exp(-c.t[g]) * o[r];
      up[r] = std::exp(c.t[g]) * o[r];
      damped[r].push_back(dn[r]);
      grown[r].push_back(up[r]);
    }
    c.damped.push_back(stamped(ratio_of_means(dn, size0), run));
    c.grown.push_back(stamped(ratio_of_means(up, size0), run));
  }
  // Both normalised curves share the denominator, so monotonicity is a
  // property of the paired numerators.
  c.damped_monotone = check_nonincreasing(damped);
  c.grown_monotone = check_nonincreasing(grown);
  return c;
}

void to_json(nlohmann::json& j, const OverlapCurve& c) {
  j = {{"t", c.t},
       {"sets", {c.first_kind, c.second_kind}},
       {"overlap", c.values},
       {"damped", c.damped},
       {"grown", c.grown},
       {"damped_monotone", c.damped_monotone},
       {"grown_monotone", c.grown_monotone}};
}

IdentityReport variance_identity_check(const Functional& f, const Intensity& intensity, const TimeGrid& grid,
                                       const RunSpec& run) {
  std::vector<PointField> fields{[&f](const PointPattern& mu) { return f.remove_one_costs(mu); }};
  SweepOptions opts;
  opts.at_zero = [&f](const PointPattern& mu) { return f.evaluate(mu); };
  const auto draws = coupled_sweep(intensity, grid, run, fields, {{0, 0}}, opts);

  IdentityReport r;
  r.t = grid.nodes();
  const auto w = grid.fitted_weights();
  std::vector<double> values, quad;
  std::vector<std::vector<double>> curves;
  for (const auto& d : draws) {
    values.push_back(d.value);
    quad.push_back(dot(w, d.sums[0]));
    curves.push_back(d.sums[0]);
  }
  r.lhs = stamped(variance_estimate(values), run);
  r.rhs = stamped(mean_estimate(quad), run);
  for (std::size_t g = 0; g < r.t.size(); ++g) r.integrand.push_back(stamped(mean_estimate(column(draws, 0, g)), run));
  const Quadrature q = integrate(grid, mean_curve(draws, 0));
  r.tail_bound = q.tail;
  r.quadrature_error = q.error;
  r.residual = std::abs(r.lhs.value - r.rhs.value);
  r.tolerance = 3.0 * combined_se(r.lhs.se, r.rhs.se) + r.quadrature_error + r.tail_bound;
  r.agree = r.residual <= r.tolerance;
  r.integrand_monotone = check_nonincreasing(curves);
  return r;
}

void to_json(nlohmann::json& j, const IdentityReport& r) {
  j = {{"lhs", r.lhs},
       {"rhs", r.rhs},
       {"tail_bound", r.tail_bound},
       {"quadrature_error", r.quadrature_error},
       {"residual", r.residual},
       {"tolerance", r.tolerance},
       {"agree", r.agree},
       {"t", r.t},
       {"integrand", r.integrand},
       {"integrand_monotone", r.integrand_monotone}};
}

namespace {

ChaosCurve chaos_from_draws(const std::vector<CoupledDraw>& draws, const std::vector<double>& t, const RunSpec& run) {
  ChaosCurve c;
  c.t = t;
  const auto denom = column(draws, 0, 0);
  std::vector<std::vector<double>> grown(draws.size());
  for (std::size_t g = 0; g < t.size(); ++g) {
    auto num = column(draws, 0, g);
    for (std::size_t r = 0; r < num.size(); ++r) {
      num[r] *= std::exp(t[g]);
      grown[r].push_back(num[r]);
    }
    c.coefficient.push_back(stamped(ratio_of_means(num, denom), run));
  }
  c.monotone = check_nonincreasing(grown);
  return c;
}

std::vector<CoupledDraw> cost_sweep(const Functional& f, const Intensity& intensity, const TimeGrid& grid,
                                    const RunSpec& run) {
  std::vector<PointField> fields{[&f](const PointPattern& mu) { return f.remove_one_costs(mu); }};
  return coupled_sweep(intensity, grid, run, fields, {{0, 0}});
}

}  // namespace

Estimate chaos_coefficient(const Functional& f, const Intensity& intensity, double t, const RunSpec& run) {
  CHAOSLAB_REQUIRE(std::isfinite(t) && t >= 0.0, "chaos time must be a finite t >= 0");
  const TimeGrid grid(t > 0.0 ? std::vector<double>{0.0, t} : std::vector<double>{0.0, 1.0});
  const auto draws = cost_sweep(f, intensity, grid, run);
  const auto c = chaos_from_draws(draws, grid.nodes(), run);
  return t > 0.0 ? c.coefficient[1] : c.coefficient[0];
}

ChaosCurve chaos_curve(const Functional& f, const Intensity& intensity, const TimeGrid& grid, const RunSpec& run) {
  return chaos_from_draws(cost_sweep(f, intensity, grid, run), grid.nodes(), run);
}

void to_json(nlohmann::json& j, const ChaosCurve& c) {
  j = {{"t", c.t}, {"coefficient", c.coefficient}, {"monotone", c.monotone}};
}

// ---------------------------------------------------------------------------

Decomposition sign_split(FunctionalPtr f) {
  const std::string name = "sign_split(" + f->name() + ")";
  return {name, positive_part(f), negative_part(f), true};
}

Decomposition kiso_score_split(int k, double r, int d) {
  return {"kiso_score_split", kiso_small_degree(k, r, d), kiso_degree_loss(k, r, d), true};
}

DecompositionReport decomposition_terms(const Functional& f, const Decomposition& split, const Intensity& intensity,
                                        const TimeGrid& grid, const RunSpec& run) {
  CHAOSLAB_REQUIRE(split.g1 != nullptr && split.g2 != nullptr, "decomposition parts are null");
  std::vector<PointField> fields{[&](const PointPattern& mu) { return split.g1->at_points(mu); },
                                 [&](const PointPattern& mu) { return split.g2->at_points(mu); }};
  SweepOptions opts;
  opts.at_zero = [&f](const PointPattern& mu) { return f.evaluate(mu); };
  if (split.require_disjoint) {
    opts.on_slice = [&split](const std::vector<std::vector<double>>& v) {
      for (std::size_t i = 0; i < v[0].size(); ++i) {
        if (v[0][i] != 0.0 && v[1][i] != 0.0) {
          throw InvalidInput("decomposition " + split.name + " has overlapping supports");
        }
      }
    };
  }
  const auto draws = coupled_sweep(intensity, grid, run, fields, {{0, 0}, {1, 1}, {0, 1}, {1, 0}}, opts);

  const auto w = grid.fitted_weights();
  std::vector<double> q1, q2, q3, qc, values;
  for (const auto& d : draws) {
    const double a = dot(w, d.sums[0]), b = dot(w, d.sums[1]), c = dot(w, d.sums[2]), e = dot(w, d.sums[3]);
    q1.push_back(a);
    q2.push_back(b);
    q3.push_back(0.5 * (c + e));
    qc.push_back(a + b - c - e);
    values.push_back(d.value);
  }
  DecompositionReport r;
  r.name = split.name;
  r.t1 = stamped(mean_estimate(q1), run);
  r.t2 = stamped(mean_estimate(q2), run);
  r.t3 = stamped(mean_estimate(q3), run);
  r.combined = stamped(mean_estimate(qc), run);
  r.variance = stamped(variance_estimate(values), run);
  std::vector<double> curve(grid.size(), 0.0);
  const auto c1 = mean_curve(draws, 0), c2 = mean_curve(draws, 1), c3 = mean_curve(draws, 2), c4 = mean_curve(draws, 3);
  for (std::size_t g = 0; g < curve.size(); ++g) curve[g] = c1[g] + c2[g] - c3[g] - c4[g];
  const Quadrature q = integrate(grid, curve);
  r.quadrature_error = q.error;
  r.tail_bound = q.tail;
  r.residual = std::abs(r.combined.value - r.variance.value);
  r.tolerance = 3.0 * combined_se(r.combined.se, r.variance.se) + q.error + q.tail;
  r.closes = r.residual <= r.tolerance;
  return r;
}

void to_json(nlohmann::json& j, const DecompositionReport& r) {
  j = {{"name", r.name},
       {"t1", r.t1},
       {"t2", r.t2},
       {"t3", r.t3},
       {"combined", r.combined},
       {"variance", r.variance},
       {"quadrature_error", r.quadrature_error},
       {"tail_bound", r.tail_bound},
       {"residual", r.residual},
       {"tolerance", r.tolerance},
       {"closes", r.closes}};
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const BoundCheck& b) {
  j = {{"checked", b.checked}};
  if (b.checked) {
    j["lhs"] = b.lhs;
    j["rhs"] = b.rhs;
    j["tolerance"] = b.tolerance;
    j["holds"] = b.holds;
  }
  if (!b.note.empty()) j["note"] = b.note;
}

void to_json(nlohmann::json& j, const L1L2Report& r) {
  j = {{"g", r.g},
       {"plain", r.plain},
       {"log_improved", r.log_improved},
       {"nonincreasing_claimed", r.nonincreasing_claimed},
       {"nonincreasing_confirmed", r.nonincreasing_confirmed},
       {"monotonicity_probes", r.monotonicity_probes},
       {"monotonicity_counterexamples", r.monotonicity_counterexamples},
       {"l1", r.l1},
       {"l2", r.l2}};
}

void to_json(nlohmann::json& j, const LowerBoundReport& r) {
  j = {{"g", r.g}, {"alpha", r.alpha}, {"bound", r.bound}};
}

namespace {

struct GgSweep {
  std::vector<double> lhs;  // per-replication quadrature
  std::vector<double> at0;  // per-replication sum_x g(x, eta - dx)^2
  Quadrature quad;
};

GgSweep gg_sweep(const LocalFunction& g, const Intensity& intensity, const TimeGrid& grid, const RunSpec& run) {
  std::vector<PointField> fields{[&g](const PointPattern& mu) {
    auto v = g.at_points(mu);
    for (double x : v) CHAOSLAB_REQUIRE(x >= 0.0 && std::isfinite(x), "g must be finite and nonnegative");
    return v;
  }};
  const auto draws = coupled_sweep(intensity, grid, run, fields, {{0, 0}});
  const auto w = grid.fitted_weights();
  GgSweep s;
  for (const auto& d : draws) {
    s.lhs.push_back(dot(w, d.sums[0]));
    s.at0.push_back(d.sums[0][0]);
  }
  s.quad = integrate(grid, mean_curve(draws, 0));
  return s;
}

// Range-aware partner location for x: uniform in B(x, R) when that ball is a
// proper neighbourhood, otherwise uniform in the window. Returns the weight
// |region| * rate, or 0 if the draw left a box window.
double partner(const Intensity& intensity, double range, std::span<const double> x, Engine& eng,
               std::span<double> y) {
  const Window& w = intensity.window();
  const int d = w.dimension();
  const bool ball = std::isfinite(range) && range > 0.0 && (!w.is_torus() || range < 0.5);
  if (!ball) {
    sample_uniform(w, eng, y);
    return intensity.mass();
  }
  sample_in_ball(x, range, eng, y);
  if (!fold_into_window(w, y)) return 0.0;
  return intensity.rate() * unit_ball_volume(d) * std::pow(range, d);
}

PointPattern single(const Window& w, std::span<const double> x) {
  PointPattern p(w);
  p.push_back(x);
  return p;
}

double log_term(double m1, double m2) {
  if (m1 <= 0.0 || m2 <= 0.0) return 0.0;
  return m2 / (1.0 + 0.5 * std::log(std::sqrt(m2) / m1));
}

}  // namespace

L1L2Report l1l2_bound_check(const LocalFunction& g, const Intensity& intensity, const TimeGrid& grid,
                            const RunSpec& run, const BoundOptions& options) {
  CHAOSLAB_REQUIRE(options.insertions >= 1 && options.box_locations >= 1, "insertion counts must be positive");
  const GgSweep s = gg_sweep(g, intensity, grid, run);
  L1L2Report r;
  r.g = g.name();

  std::vector<double> diff(s.lhs.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = s.lhs[i] - s.at0[i];
  const Estimate d = mean_estimate(diff);
  r.plain.checked = true;
  r.plain.lhs = stamped(mean_estimate(s.lhs), run);
  r.plain.rhs = stamped(mean_estimate(s.at0), run);
  r.plain.tolerance = 3.0 * d.se + s.quad.error;
  r.plain.holds = d.value <= r.plain.tolerance;

  // Location-wise moments of g and sampled monotonicity probes on independent
  // patterns.
  const Window& w = intensity.window();
  const int dim = w.dimension();
  const RunSpec norms{run.replications, run.rng.child("norms"), run.threads};
  PointPattern fixed(w);
  if (!w.is_torus()) {
    const auto m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(options.box_locations), 1.0 / dim)));
    std::vector<std::size_t> digit(dim, 0);
    std::vector<double> x(dim);
    while (true) {
      for (int a = 0; a < dim; ++a) x[a] = w.lower(a) + (static_cast<double>(digit[a]) + 0.5) * w.side(a) / m;
      fixed.push_back(x);
      int a = 0;
      while (a < dim && ++digit[a] == m) digit[a++] = 0;
      if (a == dim) break;
    }
  }
  r.nonincreasing_claimed = g.claims_nonincreasing();
  struct Moments {
    std::vector<double> m1, m2;
    std::size_t probes = 0, counter = 0;
  };
  const std::size_t locs = w.is_torus() ? 1 : fixed.size();
  const auto moments = replicate(norms, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const PointPattern eta = sample_poisson(intensity, eng);
    auto loc_eng = stream.child("locations").engine();
    Moments m;
    m.m1.assign(locs, 0.0);
    m.m2.assign(locs, 0.0);
    if (w.is_torus()) {
      const PointPattern xs = sample_uniform_points(w, options.insertions, loc_eng);
      for (double v : g.at_locations(eta, xs)) {
        m.m1[0] += v / static_cast<double>(xs.size());
        m.m2[0] += v * v / static_cast<double>(xs.size());
      }
    } else {
      const auto v = g.at_locations(eta, fixed);
      for (std::size_t j = 0; j < locs; ++j) {
        m.m1[j] = v[j];
        m.m2[j] = v[j] * v[j];
      }
    }
    if (r.nonincreasing_claimed) {
      const PointPattern xs = sample_uniform_points(w, options.insertions, loc_eng);
      const auto base = g.at_locations(eta, xs);
      std::vector<double> y(dim);
      for (std::size_t j = 0; j < xs.size(); ++j) {
        if (partner(intensity, g.interaction_range(), xs[j], loc_eng, y) == 0.0) continue;
        const double after = g.at_locations(eta.with(y), single(w, xs[j]))[0];
        ++m.probes;
        if (after > base[j] + 1e-12 * std::max(1.0, std::abs(base[j]))) ++m.counter;
      }
    }
    return m;
  });
  std::vector<double> l1(moments.size()), l2(moments.size());
  for (std::size_t i = 0; i < moments.size(); ++i) {
    for (std::size_t j = 0; j < locs; ++j) {
      l1[i] += intensity.mass() * moments[i].m1[j] / static_cast<double>(locs);
      l2[i] += intensity.mass() * moments[i].m2[j] / static_cast<double>(locs);
    }
    r.monotonicity_probes += moments[i].probes;
    r.monotonicity_counterexamples += moments[i].counter;
  }
  r.l1 = stamped(mean_estimate(l1), norms);
  r.l2 = stamped(mean_estimate(l2), norms);
  r.nonincreasing_confirmed = r.nonincreasing_claimed && r.monotonicity_counterexamples == 0;

  if (!r.nonincreasing_claimed) {
    r.log_improved.note = "g is not claimed nonincreasing";
    return r;
  }
  if (!r.nonincreasing_confirmed) {
    r.log_improved.note = "nonincreasing claim withdrawn after a sampled counterexample";
    return r;
  }
  auto rhs_over = [&](std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t j = 0; j < locs; ++j) {
      double a = 0.0, b = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        a += moments[i].m1[j];
        b += moments[i].m2[j];
      }
      const double n = static_cast<double>(hi - lo);
      acc += log_term(a / n, b / n);
    }
    return 2.0 * intensity.mass() * acc / static_cast<double>(locs);
  };
  Estimate rhs;
  rhs.n = moments.size();
  rhs.value = rhs_over(0, moments.size());
  const auto bounds = batch_bounds(moments.size());
  if (bounds.size() >= 4) {
    std::vector<double> vals;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) vals.push_back(rhs_over(bounds[i], bounds[i + 1]));
    rhs.se = mean_estimate(vals).se;
  } else {
    rhs.se = std::numeric_limits<double>::quiet_NaN();
  }
  stamp(rhs, norms);
  r.log_improved.checked = true;
  r.log_improved.lhs = r.plain.lhs;
  r.log_improved.rhs = rhs;
  r.log_improved.tolerance = 3.0 * combined_se(r.plain.lhs.se, rhs.se) + s.quad.error;
  r.log_improved.holds = r.plain.lhs.value - rhs.value <= r.log_improved.tolerance;
  return r;
}

Estimate estimate_alpha(const LocalFunction& g, const Intensity& intensity, const RunSpec& run,
                        std::size_t insertions) {
  check_run(run);
  CHAOSLAB_REQUIRE(insertions >= 1, "at least one insertion pair per pattern is required");
  const Window& w = intensity.window();
  struct Draw {
    double num = 0.0, den = 0.0;
  };
  const auto draws = replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const PointPattern eta = sample_poisson(intensity, eng);
    auto loc_eng = stream.child("locations").engine();
    const PointPattern xs = sample_uniform_points(w, insertions, loc_eng);
    const auto base = g.at_locations(eta, xs);
    std::vector<double> y(w.dimension());
    Draw d;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      d.den += intensity.mass() * base[j] * base[j];
      const double weight = partner(intensity, g.interaction_range(), xs[j], loc_eng, y);
      if (weight == 0.0) continue;
      const double diff = g.at_locations(eta.with(y), single(w, xs[j]))[0] - base[j];
      d.num += intensity.mass() * weight * diff * diff;
    }
    d.num /= static_cast<double>(xs.size());
    d.den /= static_cast<double>(xs.size());
    return d;
  });
  std::vector<double> num, den;
  for (const auto& d : draws) {
    num.push_back(d.num);
    den.push_back(d.den);
  }
  return stamped(ratio_of_means(num, den), run);
}

LowerBoundReport variance_lower_bound_check(const LocalFunction& g, const Intensity& intensity, const TimeGrid& grid,
                                            const RunSpec& run, const BoundOptions& options) {
  const GgSweep s = gg_sweep(g, intensity, grid, run);
  LowerBoundReport r;
  r.g = g.name();
  const RunSpec alpha_run{run.replications, run.rng.child("alpha"), run.threads};
  r.alpha = estimate_alpha(g, intensity, alpha_run, options.insertions);
  r.bound.lhs = stamped(mean_estimate(s.lhs), run);
  if (!r.alpha.defined) {
    r.bound.note = "alpha undefined: " + r.alpha.note;
    return r;
  }
  const Estimate l2 = mean_estimate(s.at0);
  const double a1 = r.alpha.value + 1.0;
  Estimate rhs;
  rhs.n = l2.n;
  rhs.value = l2.value / a1;
  rhs.se = std::sqrt(std::pow(l2.se / a1, 2) + std::pow(l2.value * r.alpha.se / (a1 * a1), 2));
  r.bound.rhs = stamped(rhs, run);
  r.bound.checked = true;
  // The truncated quadrature can only underestimate the left side.
  r.bound.tolerance = 3.0 * combined_se(r.bound.lhs.se, rhs.se) + s.quad.error + s.quad.tail;
  r.bound.holds = rhs.value - r.bound.lhs.value <= r.bound.tolerance;
  return r;
}

// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const ScoresReport& r) {
  j = {{"t_s", r.t_s},     {"score_norm", r.score_norm}, {"a1_ratio", r.a1_ratio},
       {"epsilon", r.epsilon}, {"sup_mode", r.sup_mode},  {"locations", r.locations}};
}

ScoresReport sums_of_scores_conditions(const Functional& f, const Intensity& intensity, const RunSpec& run,
                                       const ScoresOptions& options) {
  check_run(run);
  CHAOSLAB_REQUIRE(f.has_score(), "functional " + f.name() + " has no score representation");
  CHAOSLAB_REQUIRE(options.insertions >= 1 && options.sup_locations >= 1, "insertion counts must be positive");
  const Window& w = intensity.window();
  const int dim = w.dimension();
  const double range = f.interaction_range();
  const bool pooled = options.sup == SupMode::pooled;
  PointPattern sup_locs(w);
  if (!pooled) {
    auto eng = run.rng.child("sup_locations").engine();
    sup_locs = sample_uniform_points(w, options.sup_locations, eng);
  }
  const std::size_t locs = pooled ? 1 : sup_locs.size();

  struct Draw {
    double ts = 0.0, norm = 0.0;
    std::vector<double> num, den;
  };
  const auto draws = replicate(run, [&](const RngStream& stream) {
    auto eng = stream.engine();
    const PointPattern eta = sample_poisson(intensity, eng);
    auto indep_eng = stream.child("independent").engine();
    const PointPattern eta2 = sample_poisson(intensity, indep_eng);
    auto loc_eng = stream.child("locations").engine();
    const std::size_t m = options.insertions;
    const PointPattern xs = sample_uniform_points(w, m, loc_eng);
    PointPattern ys(w);
    std::vector<double> weights, y(dim);
    std::vector<std::size_t> kept;
    for (std::size_t j = 0; j < m; ++j) {
      const double wt = partner(intensity, 2.0 * range, xs[j], loc_eng, y);
      if (wt == 0.0) continue;
      ys.push_back(y);
      weights.push_back(wt);
      kept.push_back(j);
    }
    Draw d;
    const auto fx = f.inserted_scores(eta, xs);
    const auto fy2 = f.inserted_scores(eta2, ys);
    for (double v : fx) d.norm += intensity.mass() * v * v / static_cast<double>(m);
    for (std::size_t q = 0; q < kept.size(); ++q) {
      const auto [a, b] = f.pair_inserted_scores(eta, xs[kept[q]], ys[q]);
      d.ts += intensity.mass() * weights[q] * (a * b - fx[kept[q]] * fy2[q]) / static_cast<double>(m);
    }
    // (A2): E f(y, eta + dy)^2 against E (D_y F - f(y, eta + dy))^2.
    const PointPattern pts = pooled ? sample_uniform_points(w, m, loc_eng) : sup_locs;
    const auto fins = f.inserted_scores(eta, pts);
    const auto dys = f.add_one_costs(eta, pts);
    d.num.assign(locs, 0.0);
    d.den.assign(locs, 0.0);
    for (std::size_t j = 0; j < pts.size(); ++j) {
      const std::size_t slot = pooled ? 0 : j;
      const double scale = pooled ? 1.0 / static_cast<double>(pts.size()) : 1.0;
      const double rest = dys[j] - fins[j];
      d.num[slot] += scale * fins[j] * fins[j];
      d.den[slot] += scale * rest * rest;
    }
    return d;
  });

  ScoresReport r;
  std::vector<double> ts, norm;
  for (const auto& d : draws) {
    ts.push_back(d.ts);
    norm.push_back(d.norm);
  }
  r.t_s = stamped(mean_estimate(ts), run);
  r.score_norm = stamped(mean_estimate(norm), run);
  r.a1_ratio = stamped(ratio_of_means(ts, norm), run);
  r.sup_mode = pooled ? "pooled" : "sampled";
  r.locations = pooled ? options.insertions : locs;
  std::size_t undefined = 0;
  bool have = false;
  for (std::size_t j = 0; j < locs; ++j) {
    std::vector<double> num, den;
    for (const auto& d : draws) {
      num.push_back(d.num[j]);
      den.push_back(d.den[j]);
    }
    Estimate e = ratio_of_means(num, den);
    if (!e.defined) {
      ++undefined;
      continue;
    }
    if (!have || e.value > r.epsilon.value) {
      r.epsilon = e;
      have = true;
    }
  }
  if (!have) {
    r.epsilon.defined = false;
    r.epsilon.value = r.epsilon.se = std::numeric_limits<double>::quiet_NaN();
    r.epsilon.n = run.replications;
    r.epsilon.note = "(A2) denominator indistinguishable from zero";
  } else if (undefined > 0) {
    r.epsilon.note = std::to_string(undefined) + " locations with an undefined ratio skipped";
  }
  stamp(r.epsilon, run);
  return r;
}

}  // namespace chaoslab
