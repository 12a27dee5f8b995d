// Acceptance run: one PASS/FAIL line per criterion.
//
// Every criterion runs twice, single-threaded and with --threads workers, into
// separate directories; verdicts come from the first run and criterion 11
// compares the two directories byte for byte. Tolerances and budgets below are
// fixed; do not tune them to a particular seed.
//
// Exit status is 0 when every failing check is one of the documented
// infeasible ones (marked in the check call). Those still print FAIL.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "chaoslab/estimators.hpp"
#include "chaoslab/experiment.hpp"
#include "chaoslab/models.hpp"
#include "support/oracles.hpp"

using namespace chaoslab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr double kZ = 3.0;  // s.e. multiplier everywhere

// Feasible stand-in for the s r^d grids of criteria 5 and 8: kiso and K2 at
// s = 1000 on the torus [0,1)^2, a = s r^2.
const std::vector<double> kFeasibleGrid{0.5, 1.0, 1.5, 2.0};
constexpr double kFeasibleS = 1000.0;
// Crossing boxes for the chaos and bound checks.
const std::vector<double> kCrossingGrid{2.0, 4.0, 8.0};
constexpr double kLambda = 0.359;

struct Context {
  int threads = 1;
  fs::path dir;
};

struct Check {
  std::string name;
  bool pass = false;
  bool infeasible = false;  // a documented infeasible check; its failure does not fail the run
};

struct Outcome {
  std::vector<Check> checks;
  std::vector<std::string> info;
  json files = json::object();  // name -> content, written by the driver

  void check(std::string name, bool pass, bool infeasible = false) {
    checks.push_back({std::move(name), pass, infeasible});
  }
  void note(const std::string& s) { info.push_back(s); }
  bool pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
  bool expected() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || c.infeasible; });
  }
};

RunSpec spec(const Context& c, std::size_t n, const std::string& label) {
  return RunSpec{n, RngStream(kSeed, label), c.threads};
}

TimeGrid default_grid() { return TimeGrid::geometric(0.01, 40, 10.0, {0.5}); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string fmt(const Estimate& e) { return fmt(e.value) + " ± " + fmt(e.se); }

bool agree(const Estimate& a, const Estimate& b, double extra = 0.0) {
  return std::abs(a.value - b.value) <= kZ * combined_se(a.se, b.se) + extra;
}

Model kiso_model(double a, int k = 1) {
  ModelConfig m;
  m.model = "kiso";
  m.k = k;
  m.d = 2;
  m.s = kFeasibleS;
  m.r = std::sqrt(a / kFeasibleS);
  return build_model(m);
}

Model crossing_model(double box) {
  ModelConfig m;
  m.model = "crossing";
  m.lambda = kLambda;
  m.box_s = box;
  return build_model(m);
}

Model k2_model(double a, double s = kFeasibleS) {
  ModelConfig m;
  m.model = "gamma";
  m.gamma = SmallGraph(2, {{0, 1}});
  m.d = 2;
  m.s = s;
  m.r = std::sqrt(a / s);
  return build_model(m);
}

// ---------------------------------------------------------------------------

Outcome exact_tight_case(const Context& c) {
  Outcome o;
  const CountFunctional n;
  const Intensity in(100.0, Window::torus(2));
  const RunSpec run = spec(c, 100000, "c1");
  const Estimate var = estimate_variance(n, in, run);
  const Estimate ratio = superconcentration_ratio(n, in, run);
  const IdentityReport id = variance_identity_check(n, in, default_grid(), spec(c, 100000, "c1-identity"));
  const double var_ratio = var.value / in.mass();
  o.check("variance / mass in [0.97, 1.03]", var_ratio >= 0.97 && var_ratio <= 1.03);
  o.check("Poincare ratio in [0.97, 1.03]", ratio.value >= 0.97 && ratio.value <= 1.03);
  o.check("identity residual <= 3 combined s.e.", agree(id.lhs, id.rhs));
  o.note("var/mass " + fmt(var_ratio) + ", ratio " + fmt(ratio) + ", identity " + fmt(id.lhs) + " vs " +
         fmt(id.rhs));
  o.files["c1.json"] = {{"variance", var}, {"ratio", ratio}, {"identity", id}};
  return o;
}

Outcome mecke(const Context& c) {
  Outcome o;
  json out = json::array();
  const auto count = std::make_shared<CountFunctional>();
  for (double mass : {50.0, 500.0}) {
    const Intensity in(mass, Window::torus(2));
    const std::vector<std::pair<std::string, LocalFunctionPtr>> hs{
        {"constant", constant_function(1.0)},
        {"void", void_indicator(0.05)},
        {"squared_add_one_count", squared_add_one(count)},
    };
    for (const auto& [name, h] : hs) {
      const MeckeReport r = mecke_check(*h, in, spec(c, 2000, "c2-" + name + "-" + fmt(mass)));
      o.check(name + " at mass " + fmt(mass), agree(r.point_sum, r.insertion));
      o.note(name + " mass " + fmt(mass) + ": z = " + fmt(r.z));
      out.push_back({{"h", name}, {"mass", mass}, {"report", r}});
    }
  }
  o.files["c2.json"] = out;
  return o;
}

Outcome ou_coupling(const Context& c) {
  Outcome o;
  const Intensity in(50.0, Window::torus(2));
  const std::vector<double> ts{0.1, 0.5, std::log(2.0), 1.0, 2.0};
  const std::size_t half_life = 2;
  struct Draw {
    std::vector<std::size_t> counts;
    std::size_t initial = 0;
    std::size_t survivors = 0;
  };
  const auto draws = replicate(spec(c, 100000, "c3"), [&](const RngStream& rng) {
    const BirthDeathTrajectory tr = simulate_trajectory(in, ts.back(), rng);
    Draw d;
    d.initial = tr.initial().size();
    for (std::size_t j = 0; j < ts.size(); ++j) {
      const Slice s = tr.slice(ts[j]);
      d.counts.push_back(s.pattern.size());
      if (j == half_life) d.survivors = s.survivors;
    }
    return d;
  });
  double initial = 0.0, survivors = 0.0;
  for (const auto& d : draws) {
    initial += static_cast<double>(d.initial);
    survivors += static_cast<double>(d.survivors);
  }
  const double fraction = survivors / initial;
  o.check("survivor fraction at ln 2 in [0.49, 0.51]", fraction >= 0.49 && fraction <= 0.51);
  json pvalues = json::array();
  for (std::size_t j = 0; j < ts.size(); ++j) {
    std::vector<std::size_t> counts;
    counts.reserve(draws.size());
    for (const auto& d : draws) counts.push_back(d.counts[j]);
    const double p = oracle::poisson_chi_square_p(counts, in.mass());
    o.check("count at t = " + fmt(ts[j]) + " is Poisson (p >= 0.01)", p >= 0.01);
    o.note("t = " + fmt(ts[j]) + ": chi-square p = " + fmt(p));
    pvalues.push_back({{"t", ts[j]}, {"p", p}});
  }
  o.note("survivor fraction " + fmt(fraction));
  o.files["c3.json"] = {{"survivor_fraction", fraction}, {"poisson", pvalues}};
  return o;
}

Outcome kiso_mean(const Context& c) {
  Outcome o;
  json out = json::array();
  const double s = 2000.0;
  for (int k : {1, 3}) {
    for (double mean_degree : {6.0, 10.0}) {
      const double r = std::sqrt(mean_degree / (M_PI * s));
      const KIsoFunctional f(k, r, 2);
      const Estimate m = estimate_mean(f, Intensity(s, Window::torus(2)),
                                       spec(c, 20000, "c4-" + std::to_string(k) + "-" + fmt(mean_degree)));
      const double exact = kiso_expected_count(s, r, 2, k);
      const std::string label = "k = " + std::to_string(k) + ", kappa s r^2 = " + fmt(mean_degree);
      o.check(label, std::abs(m.value - exact) <= kZ * m.se);
      o.note(label + ": " + fmt(m) + " vs " + fmt(exact));
      out.push_back({{"k", k}, {"r", r}, {"estimate", m}, {"exact", exact}});
    }
  }
  o.files["c4.json"] = out;
  return o;
}

// Log-log slope of the Poincare ratio; undefined ratios leave the fit undefined.
struct RatioScan {
  std::vector<double> x;
  std::vector<Estimate> ratios;
  bool defined = true;
  LinearFit fit;
};

RatioScan ratio_scan(const Context& c, const std::vector<double>& xs, const std::function<Model(double)>& model,
                     std::size_t reps, const std::string& label) {
  RatioScan out;
  out.x = xs;
  for (double x : xs) {
    const Model m = model(x);
    out.ratios.push_back(superconcentration_ratio(*m.f, m.intensity, spec(c, reps, label + "-" + fmt(x))));
    out.defined = out.defined && out.ratios.back().defined && out.ratios.back().value > 0.0;
  }
  if (out.defined) {
    std::vector<double> ys;
    for (const auto& e : out.ratios) ys.push_back(e.value);
    out.fit = fit_loglog(out.x, ys);
  }
  return out;
}

json to_json(const RatioScan& s) {
  return {{"x", s.x}, {"ratios", s.ratios}, {"defined", s.defined}, {"fit", s.fit}};
}

Outcome kiso_trend(const Context& c) {
  Outcome o;
  RunConfig cfg;
  cfg.model.model = "kiso";
  cfg.model.d = 2;
  cfg.scan.parameter = "srd";
  cfg.scan.hold = "count";
  const std::vector<double> grid{8.0, 16.0, 32.0, 64.0};
  const RatioScan big = ratio_scan(
      c, grid, [&](double a) { return build_model(scan_point(cfg, a)); }, 100, "c5");
  for (double a : grid) {
    const ModelConfig m = scan_point(cfg, a);
    o.note("s r^2 = " + fmt(a) + ": s = " + fmt(m.s) + ", expected small-degree count " +
           fmt(kiso_expected_count(m.s, m.r, 2, 1)) + " (target 20 needs s = " +
           fmt(20.0 / kiso_expected_count(1.0, std::sqrt(a), 2, 1)) + ")");
  }
  o.check("log-log slope over {8,16,32,64} in [-1.4, -0.6]",
          big.defined && big.fit.slope >= -1.4 && big.fit.slope <= -0.6, true);
  o.note(big.defined ? "slope " + fmt(big.fit.slope) : "ratio undefined on the grid, no fit");

  const RatioScan small = ratio_scan(c, kFeasibleGrid, [](double a) { return kiso_model(a); }, 4000, "c5-feasible");
  std::string ratios;
  for (const auto& e : small.ratios) ratios += " " + fmt(e);
  o.note("feasible grid s r^2 in {0.5,1,1.5,2} at s = 1000: ratios" + ratios +
         (small.defined ? ", slope " + fmt(small.fit.slope) + " ± " + fmt(small.fit.slope_se) : ""));
  o.files["c5.json"] = {{"grid", to_json(big)}, {"feasible", to_json(small)}};
  return o;
}

Outcome kiso_decomposition(const Context& c) {
  Outcome o;
  json out = json::array();
  const TimeGrid grid = default_grid();
  DecompositionReport last;
  for (double a : kFeasibleGrid) {
    const Model m = kiso_model(a);
    last = decomposition_terms(*m.f, m.split, m.intensity, grid, spec(c, 2000, "c6-" + fmt(a)));
    o.check("T1 + T2 - 2 T3 = Var at s r^2 = " + fmt(a), agree(last.combined, last.variance));
    o.note("s r^2 = " + fmt(a) + ": T1 " + fmt(last.t1) + ", T2 " + fmt(last.t2) + ", T3 " + fmt(last.t3) +
           ", sum " + fmt(last.combined) + ", Var " + fmt(last.variance));
    out.push_back({{"srd", a}, {"report", last}});
  }
  o.check("T2 > T1 at the largest grid point", last.t2.value > last.t1.value);
  o.files["c6.json"] = out;
  return o;
}

Outcome crossing(const Context& c) {
  Outcome o;
  json out = json::array();
  const TimeGrid grid = default_grid();
  for (double box : {4.0, 8.0}) {
    const auto f = std::make_shared<CrossingFunctional>(box);
    const Intensity in(kLambda, CrossingFunctional::sampling_window(box));
    const std::string tag = fmt(box);

    // 10^4 insertions: 1000 patterns, 10 locations each.
    const auto bad = replicate(spec(c, 1000, "c7-add-" + tag), [&](const RngStream& rng) {
      Engine eng = rng.engine();
      const PointPattern mu = sample_poisson(in, eng);
      const PointPattern xs = sample_uniform_points(in.window(), 10, eng);
      std::size_t violations = 0;
      for (double v : f->add_one_costs(mu, xs)) violations += (v == 0.0 || v == 2.0) ? 0 : 1;
      return violations;
    });
    std::size_t violations = 0;
    for (auto v : bad) violations += v;
    o.check("s = " + tag + ": D_x F in {0, 2} on 10^4 insertions", violations == 0);

    const IdentityReport id = variance_identity_check(*f, in, grid, spec(c, 10000, "c7-identity-" + tag));
    o.check("s = " + tag + ": Var = 4 x quadrature of E|P^0 ∩ P^t|", agree(id.lhs, id.rhs, id.tail_bound));
    o.note("s = " + tag + ": Var " + fmt(id.lhs) + ", quadrature " + fmt(id.rhs) + ", tail " +
           fmt(id.tail_bound) + ", quadrature error " + fmt(id.quadrature_error));

    const RunSpec patterns = spec(c, 1000, "c7-pivotal-" + tag);
    const auto mismatch = replicate(patterns, [&](const RngStream& rng) {
      Engine eng = rng.engine();
      const PointPattern mu = sample_poisson(in, eng);
      return f->pivotal_set(mu) == oracle::pivotal_by_removal(mu, box) ? 0 : 1;
    });
    const auto mismatches = static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), 1));
    o.check("s = " + tag + ": pivotal set equals removal oracle on 10^3 patterns", mismatches == 0);
    out.push_back({{"box_s", box}, {"add_one_violations", violations}, {"identity", id},
                   {"pivotal_mismatches", mismatches}});
  }
  o.files["c7.json"] = out;
  return o;
}

Outcome gamma_components(const Context& c) {
  Outcome o;
  const std::vector<std::pair<std::string, SmallGraph>> graphs{
      {"K2", SmallGraph(2, {{0, 1}})},
      {"P3", SmallGraph(3, {{0, 1}, {1, 2}})},
      {"K3", SmallGraph(3, {{0, 1}, {1, 2}, {0, 2}})},
  };
  json counts = json::array();
  for (const auto& [name, g] : graphs) {
    const double r = 0.12;
    const GammaFunctional f(g, r, 2);
    const auto mismatch = replicate(spec(c, 1000, "c8-" + name), [&](const RngStream& rng) {
      Engine eng = rng.engine();
      const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 60)(eng);
      const PointPattern mu = sample_uniform_points(Window::torus(2), n, eng);
      return f.evaluate(mu) * oracle::factorial(g.order()) == oracle::gamma_tuple_count(mu, g, r) ? 0 : 1;
    });
    const auto mismatches = static_cast<std::size_t>(std::count(mismatch.begin(), mismatch.end(), 1));
    o.check(name + ": component scan equals tuple count / k! on 10^3 patterns", mismatches == 0);
    counts.push_back({{"gamma", name}, {"mismatches", mismatches}});
  }

  // The grid point s r^2 = 8 already needs s near 10^12 for a nonzero K2
  // count; run at the s cap and report what comes out.
  const double s_cap = ScanConfig{}.s_max;
  const RatioScan big = ratio_scan(
      c, {8.0, 16.0, 32.0}, [&](double a) { return k2_model(a, s_cap); }, 100, "c8-trend");
  const bool decreasing = big.defined && big.ratios[1].value < big.ratios[0].value &&
                          big.ratios[2].value < big.ratios[1].value;
  o.check("K2 ratio decreases over s r^2 in {8,16,32}", decreasing, true);
  for (const auto& e : big.ratios) o.note("K2 at s = " + fmt(s_cap) + ": ratio " + fmt(e) + " " + e.note);

  const RatioScan small = ratio_scan(c, kFeasibleGrid, [](double a) { return k2_model(a); }, 4000, "c8-feasible");
  std::string ratios;
  bool small_decreasing = small.defined;
  for (std::size_t i = 0; i < small.ratios.size(); ++i) {
    ratios += " " + fmt(small.ratios[i]);
    if (i > 0) small_decreasing = small_decreasing && small.ratios[i].value < small.ratios[i - 1].value;
  }
  o.note("feasible grid s r^2 in {0.5,1,1.5,2} at s = 1000: ratios" + ratios +
         (small_decreasing ? " (decreasing)" : " (not decreasing)"));
  o.files["c8.json"] = {{"counts", counts}, {"trend", to_json(big)}, {"feasible", to_json(small)}};
  return o;
}

Outcome chaos_curves(const Context& c) {
  Outcome o;
  const TimeGrid grid = default_grid();
  const std::size_t at_half = grid.find(0.5);
  json out = json::object();
  auto sweep = [&](const std::string& name, const std::vector<double>& xs, const std::function<Model(double)>& build,
                   std::size_t reps) {
    json rows = json::array();
    std::vector<double> at;
    for (double x : xs) {
      const Model m = build(x);
      const SetExtractor sets = make_set_extractor(m.set_kind, m.f);
      const OverlapCurve curve = overlap_curve(sets, m.intensity, grid, spec(c, reps, "c9-" + name + "-" + fmt(x)),
                                               {}, to_string(m.set_kind));
      o.check(name + " at " + fmt(x) + ": damped curve non-increasing", curve.damped_monotone.holds);
      at.push_back(curve.damped[at_half].value);
      o.note(name + " at " + fmt(x) + ": value at t = 0.5 " + fmt(curve.damped[at_half]) + ", worst z " +
             fmt(curve.damped_monotone.worst_z));
      rows.push_back({{"x", x}, {"curve", curve}});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < at.size(); ++i) decreasing = decreasing && at[i] < at[i - 1];
    o.check(name + ": value at t = 0.5 decreases along the scan", decreasing);
    out[name] = rows;
  };
  sweep("kiso N_k, s r^2", kFeasibleGrid, [](double a) { return kiso_model(a); }, 1000);
  sweep("crossing pivotal, s", kCrossingGrid, crossing_model, 1000);
  o.files["c9.json"] = out;
  return o;
}

Outcome bound_checks(const Context& c) {
  Outcome o;
  const TimeGrid grid = default_grid();
  json out = json::array();
  auto run_all = [&](const std::string& name, const std::vector<double>& xs, const std::function<Model(double)>& build) {
    for (double x : xs) {
      const auto start = std::chrono::steady_clock::now();
      const Model m = build(x);
      for (const auto& g : m.g) {
        const std::string tag = name + " " + fmt(x) + " " + g->name();
        const L1L2Report l = l1l2_bound_check(*g, m.intensity, grid, spec(c, 500, "c10-l1l2-" + tag));
        const LowerBoundReport lb = variance_lower_bound_check(*g, m.intensity, grid, spec(c, 500, "c10-lb-" + tag));
        const bool ok = (!l.plain.checked || l.plain.holds) && (!l.log_improved.checked || l.log_improved.holds) &&
                        (!lb.bound.checked || lb.bound.holds);
        o.check(tag + ": no bound violation", ok);
        out.push_back({{"model", name}, {"x", x}, {"g", g->name()}, {"l1l2", l}, {"lower_bound", lb}});
      }
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      o.note(name + " " + fmt(x) + ": bound checks took " + fmt(secs) + " s");
    }
  };
  run_all("kiso", kFeasibleGrid, [](double a) { return kiso_model(a); });
  run_all("gamma_K2", kFeasibleGrid, [](double a) { return k2_model(a); });
  run_all("crossing", kCrossingGrid, crossing_model);

  std::vector<double> alphas;
  json alpha_rows = json::array();
  for (double a : kFeasibleGrid) {
    const double r = std::sqrt(a / kFeasibleS);
    const Estimate alpha = estimate_alpha(*kiso_pivotal_degree(1, r, 2), Intensity(kFeasibleS, Window::torus(2)),
                                          spec(c, 1000, "c10-alpha-" + fmt(a)));
    alphas.push_back(alpha.value);
    alpha_rows.push_back({{"srd", a}, {"alpha", alpha}});
    o.note("alpha for N_k at s r^2 = " + fmt(a) + ": " + fmt(alpha));
  }
  const LinearFit fit = fit_line(kFeasibleGrid, alphas);
  o.check("alpha for N_k linear in s r^2 (R^2 >= 0.9, slope > 0)", fit.r2 >= 0.9 && fit.slope > 0.0);
  o.note("alpha fit slope " + fmt(fit.slope) + ", R^2 " + fmt(fit.r2));
  o.files["c10.json"] = {{"bounds", out}, {"alpha", alpha_rows}, {"alpha_fit", fit}};
  return o;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<Outcome(const Context&)> run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "exact tight case (F = N)", 60, exact_tight_case},
      {2, "Mecke identity", 120, mecke},
      {3, "OU coupling law", 120, ou_coupling},
      {4, "kiso analytic mean", 300, kiso_mean},
      {5, "kiso superconcentration trend", 1200, kiso_trend},
      {6, "kiso variance identity and decomposition", 900, kiso_decomposition},
      {7, "crossing model", 1200, crossing},
      {8, "Gamma-components", 900, gamma_components},
      {9, "chaos curves", 900, chaos_curves},
      {10, "bound checks", 900, bound_checks},
  };
  return all;
}

struct Timed {
  Outcome outcome;
  double seconds = 0.0;
  std::string error;
};

Timed run_one(const Criterion& cr, const Context& ctx) {
  Timed t;
  const auto start = std::chrono::steady_clock::now();
  try {
    t.outcome = cr.run(ctx);
    for (const auto& [name, content] : t.outcome.files.items()) {
      std::ofstream(ctx.dir / name, std::ios::binary) << content.dump(2) << '\n';
    }
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  t.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return t;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chaoslab acceptance run"};
  std::string out = "acceptance_out";
  int threads = 3;
  std::vector<int> only;
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker count of the second run")->check(CLI::Range(2, 64));
  app.add_option("--only", only, "criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const Context first{1, fs::path(out) / "threads_1"};
  const Context second{threads, fs::path(out) / ("threads_" + std::to_string(threads))};
  for (const auto& dir : {first.dir, second.dir}) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }

  bool expected = true;
  std::vector<int> ran;
  for (const Criterion& cr : criteria()) {
    if (!only.empty() && std::find(only.begin(), only.end(), cr.id) == only.end()) continue;
    ran.push_back(cr.id);
    const Timed t = run_one(cr, first);
    const Timed again = run_one(cr, second);
    (void)again;
    const Outcome& o = t.outcome;
    const bool in_budget = t.seconds <= cr.budget_seconds;
    const bool pass = t.error.empty() && o.pass() && in_budget;
    expected = expected && t.error.empty() && o.expected() && in_budget;
    std::printf("%s %d %s (%.1f s, budget %.0f s)\n", pass ? "PASS" : "FAIL", cr.id, cr.title.c_str(), t.seconds,
                cr.budget_seconds);
    if (!t.error.empty()) std::printf("  error: %s\n", t.error.c_str());
    for (const auto& ch : o.checks) {
      if (!ch.pass) std::printf("  failed: %s%s\n", ch.name.c_str(), ch.infeasible ? " [infeasible]" : "");
    }
    for (const auto& line : o.info) std::printf("  info: %s\n", line.c_str());
    std::fflush(stdout);
  }

  // Byte comparison of every file of both runs.
  std::set<std::string> names;
  for (const auto& dir : {first.dir, second.dir}) {
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
  }
  std::vector<std::string> differing;
  for (const auto& name : names) {
    const fs::path a = first.dir / name, b = second.dir / name;
    if (!fs::exists(a) || !fs::exists(b) || slurp(a) != slurp(b)) differing.push_back(name);
  }
  const bool identical = differing.empty() && !names.empty();
  expected = expected && identical;
  std::printf("%s 11 determinism across 1 and %d threads (%zu files)\n", identical ? "PASS" : "FAIL", threads,
              names.size());
  for (const auto& name : differing) std::printf("  differs: %s\n", name.c_str());
  return expected ? 0 : 1;
}
