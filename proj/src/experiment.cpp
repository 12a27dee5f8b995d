#include "chaoslab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "chaoslab/error.hpp"

namespace chaoslab {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class T>
T get_as(const nlohmann::json& j, const char* key, const char* kind) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw InvalidInput(std::string("config key \"") + key + "\" must be " + kind);
  }
}

double get_real(const nlohmann::json& j, const char* key) {
  CHAOSLAB_REQUIRE(j.at(key).is_number(), std::string("config key \"") + key + "\" must be a number");
  return j.at(key).get<double>();
}

std::size_t get_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  CHAOSLAB_REQUIRE(v.is_number_integer() && v.get<std::int64_t>() >= 0,
                   std::string("config key \"") + key + "\" must be a nonnegative integer");
  return v.get<std::size_t>();
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object(), "config must be a JSON object");
  static const std::set<std::string> known{"model", "k",       "r",          "d",         "s",       "gamma",
                                           "lambda", "box_s",  "clipped",    "diagnostics", "t_grid", "reps",
                                           "seed",  "threads", "out",        "scan",      "plots",   "chaos_t",
                                           "delta", "insertions", "sets",    "sup",       "evolve_times"};
  for (const auto& [key, value] : j.items()) {
    CHAOSLAB_REQUIRE(known.count(key) == 1, "unknown config key \"" + key + "\"");
  }
  RunConfig c;
  auto& m = c.model;
  if (j.contains("model")) m.model = get_as<std::string>(j, "model", "a string");
  CHAOSLAB_REQUIRE(m.model == "count" || m.model == "kiso" || m.model == "gamma" || m.model == "crossing",
                   "model must be one of count, kiso, gamma, crossing");
  if (j.contains("k")) {
    CHAOSLAB_REQUIRE(j.at("k").is_number_integer(), "config key \"k\" must be an integer");
    m.k = j.at("k").get<int>();
  }
  if (j.contains("r")) m.r = get_real(j, "r");
  if (j.contains("d")) {
    CHAOSLAB_REQUIRE(j.at("d").is_number_integer(), "config key \"d\" must be an integer");
    m.d = j.at("d").get<int>();
  }
  if (j.contains("s")) m.s = get_real(j, "s");
  if (j.contains("gamma")) m.gamma = small_graph_from_json(j.at("gamma"));
  if (j.contains("lambda")) m.lambda = get_real(j, "lambda");
  if (j.contains("box_s")) m.box_s = get_real(j, "box_s");
  if (j.contains("clipped")) m.clipped = get_as<bool>(j, "clipped", "a boolean");
  if (j.contains("diagnostics")) c.diagnostics = get_as<std::vector<std::string>>(j, "diagnostics", "a list of names");
  for (const auto& name : c.diagnostics) {
    const auto& all = known_diagnostics();
    CHAOSLAB_REQUIRE(std::find(all.begin(), all.end(), name) != all.end(), "unknown diagnostic \"" + name + "\"");
  }
  if (j.contains("t_grid")) c.t_grid = j.at("t_grid");
  if (j.contains("reps")) c.reps = get_count(j, "reps");
  CHAOSLAB_REQUIRE(c.reps >= 2, "reps must be at least 2");
  if (j.contains("seed")) {
    CHAOSLAB_REQUIRE(j.at("seed").is_number_unsigned(), "config key \"seed\" must be an unsigned integer");
    c.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("threads")) {
    CHAOSLAB_REQUIRE(j.at("threads").is_number_integer(), "config key \"threads\" must be an integer");
    c.threads = j.at("threads").get<int>();
  }
  if (j.contains("out")) c.out = get_as<std::string>(j, "out", "a string");
  if (j.contains("scan")) {
    const auto& s = j.at("scan");
    CHAOSLAB_REQUIRE(s.is_object(), "scan must be an object");
    for (const auto& [key, value] : s.items()) {
      CHAOSLAB_REQUIRE(key == "parameter" || key == "values" || key == "hold" || key == "target_count" ||
                           key == "s_max",
                       "unknown scan key \"" + key + "\"");
    }
    if (s.contains("parameter")) c.scan.parameter = get_as<std::string>(s, "parameter", "a string");
    if (s.contains("values")) c.scan.values = get_as<std::vector<double>>(s, "values", "a list of numbers");
    if (s.contains("hold")) c.scan.hold = get_as<std::string>(s, "hold", "a string");
    if (s.contains("target_count")) c.scan.target_count = get_real(s, "target_count");
    if (s.contains("s_max")) c.scan.s_max = get_real(s, "s_max");
    static const std::set<std::string> params{"s", "r", "k", "d", "srd", "lambda", "box_s"};
    CHAOSLAB_REQUIRE(c.scan.parameter.empty() || params.count(c.scan.parameter) == 1,
                     "scan parameter must be one of s, r, k, d, srd, lambda, box_s");
    CHAOSLAB_REQUIRE(c.scan.hold == "s" || c.scan.hold == "r" || c.scan.hold == "count",
                     "scan hold must be s, r or count");
    CHAOSLAB_REQUIRE(c.scan.target_count > 0.0 && c.scan.s_max > 0.0, "scan target_count and s_max must be positive");
    for (double v : c.scan.values) CHAOSLAB_REQUIRE(std::isfinite(v), "scan values must be finite");
  }
  if (j.contains("plots")) c.plots = get_as<bool>(j, "plots", "a boolean");
  if (j.contains("chaos_t")) c.chaos_t = get_real(j, "chaos_t");
  if (j.contains("delta")) c.delta = get_real(j, "delta");
  CHAOSLAB_REQUIRE(c.chaos_t > 0.0 && c.delta > 0.0, "chaos_t and delta must be positive");
  if (j.contains("insertions")) c.insertions = get_count(j, "insertions");
  CHAOSLAB_REQUIRE(c.insertions >= 1, "insertions must be at least 1");
  if (j.contains("sets")) c.sets = get_as<std::string>(j, "sets", "a string");
  if (!c.sets.empty()) chaotic_set_kind_from_string(c.sets);
  if (j.contains("sup")) c.sup = get_as<std::string>(j, "sup", "a string");
  CHAOSLAB_REQUIRE(c.sup == "pooled" || c.sup == "sampled", "sup must be pooled or sampled");
  if (j.contains("evolve_times")) c.evolve_times = get_as<std::vector<double>>(j, "evolve_times", "a list of times");

  // Surface grid and model constraint violations as configuration errors.
  const TimeGrid grid = build_time_grid(c);
  for (double t : c.evolve_times) {
    CHAOSLAB_REQUIRE(t >= 0.0 && t <= grid.tmax(), "evolve_times must lie in [0, tmax]");
  }
  if (c.scan.values.empty()) build_model(c.model, c.sets);
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["model"] = c.model.model;
  j["k"] = c.model.k;
  j["r"] = c.model.r;
  j["d"] = c.model.d;
  j["s"] = c.model.s;
  j["gamma"] = c.model.gamma;
  j["lambda"] = c.model.lambda;
  j["box_s"] = c.model.box_s;
  j["clipped"] = c.model.clipped;
  j["diagnostics"] = c.diagnostics;
  j["t_grid"] = c.t_grid;
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  if (!c.scan.parameter.empty()) {
    j["scan"] = {{"parameter", c.scan.parameter},
                 {"values", c.scan.values},
                 {"hold", c.scan.hold},
                 {"target_count", c.scan.target_count},
                 {"s_max", c.scan.s_max}};
  }
  j["plots"] = c.plots;
  j["chaos_t"] = c.chaos_t;
  j["delta"] = c.delta;
  j["insertions"] = c.insertions;
  j["sets"] = c.sets;
  j["sup"] = c.sup;
  j["evolve_times"] = c.evolve_times;
  return j;
}

Model build_model(const ModelConfig& m, const std::string& set_kind) {
  Model out{nullptr, Intensity(1.0, Window::torus(1)), {}, {}, ChaoticSetKind::cost_support, kNaN};
  if (m.model == "count") {
    out.f = std::make_shared<CountFunctional>();
    CHAOSLAB_REQUIRE(std::isfinite(m.s) && m.s > 0.0, "s must be positive");
    out.intensity = Intensity(m.s, Window::torus(m.d));
    out.g = {constant_function(1.0), squared_add_one(out.f)};
    if (std::isfinite(m.r) && m.r > 0.0 && m.r < 0.5) out.g.push_back(void_indicator(m.r));
    out.split = sign_split(out.f);
    out.expected_mean = m.s;
  } else if (m.model == "kiso") {
    auto f = std::make_shared<KIsoFunctional>(m.k, m.r, m.d);
    CHAOSLAB_REQUIRE(std::isfinite(m.s) && m.s > 0.0, "s must be positive");
    out.f = f;
    out.intensity = Intensity(m.s, Window::torus(m.d));
    out.g = {kiso_small_degree(m.k, m.r, m.d), kiso_degree_loss(m.k, m.r, m.d), kiso_pivotal_degree(m.k, m.r, m.d)};
    out.split = kiso_score_split(m.k, m.r, m.d);
    out.set_kind = ChaoticSetKind::pivotal_degree;
    out.expected_mean = kiso_expected_count(m.s, m.r, m.d, m.k);
  } else if (m.model == "gamma") {
    out.f = std::make_shared<GammaFunctional>(m.gamma, m.r, m.d);
    CHAOSLAB_REQUIRE(std::isfinite(m.s) && m.s > 0.0, "s must be positive");
    out.intensity = Intensity(m.s, Window::torus(m.d));
    out.g = {positive_part(out.f), negative_part(out.f)};
    out.split = sign_split(out.f);
    out.set_kind = ChaoticSetKind::gamma_membership;
  } else if (m.model == "crossing") {
    auto f = std::make_shared<CrossingFunctional>(m.box_s, m.clipped);
    CHAOSLAB_REQUIRE(std::isfinite(m.lambda) && m.lambda > 0.0, "lambda must be positive");
    out.f = f;
    out.intensity = Intensity(m.lambda, CrossingFunctional::sampling_window(m.box_s));
    out.g = {crossing_pivotal(f)};
    out.split = sign_split(out.f);
    out.set_kind = ChaoticSetKind::pivotal;
  } else {
    throw InvalidInput("model must be one of count, kiso, gamma, crossing");
  }
  if (!set_kind.empty()) out.set_kind = chaotic_set_kind_from_string(set_kind);
  make_set_extractor(out.set_kind, out.f);  // rejects kinds the model lacks
  return out;
}

TimeGrid build_time_grid(const RunConfig& c) {
  const TimeGrid base = time_grid_from_json(c.t_grid);
  std::vector<double> nodes = base.nodes();
  for (double t : {c.chaos_t, c.delta}) {
    if (t < base.tmax() && base.find(t) == base.size()) nodes.push_back(t);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return TimeGrid(std::move(nodes));
}

// ---------------------------------------------------------------------------

namespace {

RunSpec spec_for(const RunConfig& c, const std::string& label) {
  return RunSpec{c.reps, RngStream(c.seed, label), c.threads};
}

Estimate undefined_estimate(std::size_t n, const std::string& note) {
  Estimate e;
  e.value = e.se = kNaN;
  e.n = n;
  e.defined = false;
  e.note = note;
  return e;
}

/// a / b for (approximately) independent estimates.
Estimate quotient(const Estimate& a, const Estimate& b) {
  if (!a.defined || !b.defined) return undefined_estimate(a.n, "operand undefined");
  if (!(std::abs(b.value) > 3.0 * b.se) || b.value == 0.0) {
    return undefined_estimate(a.n, "denominator indistinguishable from zero");
  }
  Estimate e;
  e.n = a.n;
  e.seed = a.seed;
  e.value = a.value / b.value;
  const double ra = a.value != 0.0 ? a.se / a.value : 0.0;
  e.se = std::abs(e.value) * std::sqrt(ra * ra + std::pow(b.se / b.value, 2));
  if (a.value == 0.0) e.se = a.se / std::abs(b.value);
  return e;
}

DiagnosticRow row(std::string quantity, Estimate value, std::string status) {
  DiagnosticRow r;
  r.quantity = std::move(quantity);
  r.value = std::move(value);
  r.status = std::move(status);
  return r;
}

DiagnosticRow row(std::string quantity, Estimate value, Estimate ratio, std::string status) {
  DiagnosticRow r = row(std::move(quantity), std::move(value), std::move(status));
  r.ratio = std::move(ratio);
  r.has_ratio = true;
  return r;
}

std::size_t nearest_node(const std::vector<double>& t, double target) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs(t[i] - target) < std::abs(t[best] - target)) best = i;
  }
  return best;
}

void run_named(const std::string& name, const RunConfig& c, const Model& model, const TimeGrid& grid,
               DiagnosticResult& out) {
  const Functional& f = *model.f;
  const Intensity& in = model.intensity;
  if (name == "mean") {
    const Estimate m = estimate_mean(f, in, spec_for(c, "mean"));
    out.detail = {{"mean", m}};
    if (std::isfinite(model.expected_mean)) {
      Estimate exact;
      exact.value = model.expected_mean;
      exact.n = m.n;
      Estimate ratio = m;
      ratio.value = m.value / model.expected_mean;
      ratio.se = m.se / model.expected_mean;
      const bool ok = std::abs(m.value - model.expected_mean) <= 3.0 * m.se ||
                      (m.se == 0.0 && std::abs(m.value - model.expected_mean) <= 1e-9);
      out.detail["expected"] = model.expected_mean;
      out.rows.push_back(row("mean", m, ratio, ok ? "ok" : "deviates"));
    } else {
      out.rows.push_back(row("mean", m, "ok"));
    }
  } else if (name == "variance") {
    const RunSpec spec = spec_for(c, "variance");
    const Estimate v = estimate_variance(f, in, spec);
    const Estimate m = estimate_mean(f, in, spec);
    out.detail = {{"variance", v}, {"mean", m}};
    out.rows.push_back(row("variance", v, quotient(v, m), "ok"));
  } else if (name == "poincare") {
    const RunSpec spec = spec_for(c, "poincare");
    const auto samples = poincare_samples(f, in, spec);
    std::vector<double> vals, rhs;
    for (const auto& s : samples) {
      vals.push_back(s.value);
      rhs.push_back(s.rhs);
    }
    Estimate v = variance_estimate(vals), b = mean_estimate(rhs), ratio = variance_ratio(vals, rhs);
    stamp(v, spec);
    stamp(b, spec);
    stamp(ratio, spec);
    const bool holds = v.value <= b.value + 3.0 * combined_se(v.se, b.se);
    out.detail = {{"variance", v}, {"rhs", b}, {"ratio", ratio}, {"holds", holds}};
    out.rows.push_back(row("rhs", b, ratio, !holds ? "violated" : (ratio.defined ? "ok" : "undefined")));
  } else if (name == "identity") {
    const IdentityReport r = variance_identity_check(f, in, grid, spec_for(c, "identity"));
    out.detail = r;
    out.rows.push_back(row("quadrature", r.rhs, quotient(r.rhs, r.lhs), r.agree ? "ok" : "disagrees"));
  } else if (name == "mecke") {
    out.detail = nlohmann::json::object();
    for (const auto& g : model.g) {
      const MeckeReport r = mecke_check(*g, in, spec_for(c, "mecke/" + g->name()), c.insertions);
      out.detail[g->name()] = r;
      out.rows.push_back(row(g->name(), r.point_sum, quotient(r.insertion, r.point_sum), r.agree ? "ok" : "disagrees"));
    }
  } else if (name == "chaos") {
    const ChaosCurve curve = chaos_curve(f, in, grid, spec_for(c, "chaos"));
    const std::size_t i = nearest_node(curve.t, c.chaos_t);
    out.detail = curve;
    out.detail["headline_t"] = curve.t[i];
    out.rows.push_back(row("coefficient", curve.coefficient[i], curve.monotone.holds ? "ok" : "nonmonotone"));
  } else if (name == "overlap") {
    const SetExtractor sets = make_set_extractor(model.set_kind, model.f);
    const std::string kind = to_string(model.set_kind);
    const OverlapCurve curve = overlap_curve(sets, in, grid, spec_for(c, "overlap"), {}, kind);
    const std::size_t i = nearest_node(curve.t, c.chaos_t);
    out.detail = curve;
    out.detail["headline_t"] = curve.t[i];
    out.rows.push_back(row(kind, curve.values[i], curve.damped[i], curve.damped_monotone.holds ? "ok" : "nonmonotone"));
  } else if (name == "decomposition") {
    const DecompositionReport r = decomposition_terms(f, model.split, in, grid, spec_for(c, "decomposition"));
    out.detail = r;
    out.rows.push_back(row("t1+t2-2t3", r.combined, quotient(r.combined, r.variance), r.closes ? "ok" : "disagrees"));
  } else if (name == "l1l2") {
    out.detail = nlohmann::json::object();
    BoundOptions opts;
    opts.insertions = c.insertions;
    for (const auto& g : model.g) {
      const L1L2Report r = l1l2_bound_check(*g, in, grid, spec_for(c, "l1l2/" + g->name()), opts);
      out.detail[g->name()] = r;
      const bool ok = r.plain.holds && (!r.log_improved.checked || r.log_improved.holds);
      out.rows.push_back(row(g->name(), r.plain.lhs, quotient(r.plain.lhs, r.plain.rhs), ok ? "ok" : "violated"));
    }
  } else if (name == "lower_bound") {
    out.detail = nlohmann::json::object();
    BoundOptions opts;
    opts.insertions = c.insertions;
    for (const auto& g : model.g) {
      const LowerBoundReport r = variance_lower_bound_check(*g, in, grid, spec_for(c, "lower_bound/" + g->name()), opts);
      out.detail[g->name()] = r;
      const std::string status = !r.bound.checked ? "undefined" : (r.bound.holds ? "ok" : "violated");
      out.rows.push_back(row(g->name(), r.alpha,
                             r.bound.checked ? quotient(r.bound.lhs, r.bound.rhs) : undefined_estimate(c.reps, r.bound.note),
                             status));
    }
  } else if (name == "scores") {
    ScoresOptions opts;
    opts.insertions = c.insertions;
    opts.sup = c.sup == "sampled" ? SupMode::sampled : SupMode::pooled;
    const ScoresReport r = sums_of_scores_conditions(f, in, spec_for(c, "scores"), opts);
    out.detail = r;
    out.rows.push_back(row("epsilon", r.epsilon, r.a1_ratio, r.epsilon.defined ? "ok" : "undefined"));
  } else if (name == "equivalence") {
    const RunSpec spec = spec_for(c, "equivalence");
    const Estimate ratio = superconcentration_ratio(f, in, spec);
    const Estimate coeff = chaos_coefficient(f, in, c.delta, spec_for(c, "equivalence/chaos"));
    Estimate bound = coeff;
    bound.value = coeff.value + c.delta;
    std::string status = "undefined";
    if (ratio.defined && coeff.defined) {
      status = ratio.value <= bound.value + 3.0 * combined_se(ratio.se, coeff.se) ? "ok" : "violated";
    }
    out.detail = {{"ratio", ratio}, {"chaos_coefficient", coeff}, {"delta", c.delta}, {"bound", bound}};
    out.rows.push_back(row("bound", bound, quotient(ratio, bound), status));
  } else {
    throw InvalidInput("unknown diagnostic \"" + name + "\"");
  }
}

}  // namespace

DiagnosticResult run_diagnostic(const std::string& name, const RunConfig& c, const Model& model,
                                const TimeGrid& grid) {
  DiagnosticResult out;
  out.name = name;
  try {
    run_named(name, c, model, grid, out);
  } catch (const EvaluationError& e) {
    out.ok = false;
    out.error = e.what();
    out.seed = e.seed();
    out.rows.clear();
    out.detail = nullptr;
  } catch (const InvalidInput& e) {
    out.ok = false;
    out.error = e.what();
    out.rows.clear();
    out.detail = nullptr;
  }
  return out;
}

nlohmann::json diagnostics_json(const std::vector<DiagnosticResult>& results) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& r : results) {
    nlohmann::json d;
    if (!r.ok) {
      d["error"] = r.error;
      if (!r.seed.empty()) d["seed"] = r.seed;
    } else {
      auto rows = nlohmann::json::array();
      for (const auto& x : r.rows) {
        nlohmann::json rj = {{"quantity", x.quantity}, {"value", x.value}, {"status", x.status}};
        if (x.has_ratio) rj["ratio"] = x.ratio;
        rows.push_back(rj);
      }
      d["rows"] = rows;
      d["detail"] = r.detail;
    }
    j[r.name] = d;
  }
  return j;
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string estimate_cells(const Estimate& e) { return format_number(e.value) + "," + format_number(e.se); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

bool all_failed(const std::vector<DiagnosticResult>& r) {
  if (r.empty()) return false;
  return std::none_of(r.begin(), r.end(), [](const DiagnosticResult& d) { return d.ok; });
}

}  // namespace

DiagnoseReport diagnose(const RunConfig& c) {
  DiagnoseReport r;
  r.config = to_json(c);
  const Model model = build_model(c.model, c.sets);
  const TimeGrid grid = build_time_grid(c);
  for (const auto& name : c.diagnostics) r.results.push_back(run_diagnostic(name, c, model, grid));
  return r;
}

std::string diagnose_csv(const DiagnoseReport& r) {
  std::ostringstream os;
  os << "diagnostic,quantity,value,se,n,ratio,ratio_se,status,seed\n";
  for (const auto& d : r.results) {
    if (!d.ok) {
      os << csv_field(d.name) << ",,nan,nan,0,nan,nan,error," << csv_field(d.seed) << '\n';
      continue;
    }
    for (const auto& x : d.rows) {
      os << csv_field(d.name) << ',' << csv_field(x.quantity) << ',' << estimate_cells(x.value) << ',' << x.value.n
         << ',' << (x.has_ratio ? estimate_cells(x.ratio) : std::string(",")) << ',' << csv_field(x.status) << ',' << csv_field(x.value.seed) << '\n';
    }
  }
  return os.str();
}

nlohmann::json diagnose_json(const DiagnoseReport& r) {
  return {{"command", "diagnose"}, {"config", r.config}, {"diagnostics", diagnostics_json(r.results)}};
}

// ---------------------------------------------------------------------------

ModelConfig scan_point(const RunConfig& c, double v) {
  ModelConfig m = c.model;
  const std::string& p = c.scan.parameter;
  auto as_int = [&](const char* what) {
    CHAOSLAB_REQUIRE(v == std::floor(v), std::string("scan values of ") + what + " must be integers");
    return static_cast<int>(v);
  };
  if (p == "s") {
    m.s = v;
  } else if (p == "r") {
    m.r = v;
  } else if (p == "k") {
    m.k = as_int("k");
  } else if (p == "d") {
    m.d = as_int("d");
  } else if (p == "lambda") {
    m.lambda = v;
  } else if (p == "box_s") {
    m.box_s = v;
  } else if (p == "srd") {
    CHAOSLAB_REQUIRE(v > 0.0, "s r^d must be positive");
    CHAOSLAB_REQUIRE(m.model == "kiso" || m.model == "gamma" || m.model == "count",
                     "s r^d scans need a torus model");
    if (c.scan.hold == "s") {
      m.r = std::pow(v / m.s, 1.0 / m.d);
    } else if (c.scan.hold == "r") {
      m.s = v / std::pow(m.r, m.d);
    } else {
      CHAOSLAB_REQUIRE(m.model == "kiso", "hold = count needs the kiso model");
      // Small-degree probability depends on s r^d alone.
      const double p_small = kiso_expected_count(1.0, std::pow(v, 1.0 / m.d), m.d, m.k);
      m.s = std::min(c.scan.target_count / p_small, c.scan.s_max);
      m.r = std::pow(v / m.s, 1.0 / m.d);
    }
  } else {
    throw InvalidInput("scan needs a parameter");
  }
  return m;
}

namespace {

nlohmann::json point_params(const ModelConfig& m) {
  if (m.model == "crossing") return {{"lambda", m.lambda}, {"box_s", m.box_s}};
  nlohmann::json j = {{"s", m.s}, {"r", m.r}, {"d", m.d}, {"srd", m.s * std::pow(m.r, m.d)}};
  if (m.model == "kiso") {
    j["k"] = m.k;
    j["expected_small_degree"] = kiso_expected_count(m.s, m.r, m.d, m.k);
  }
  return j;
}

std::vector<std::string> param_columns(const ModelConfig& m) {
  if (m.model == "crossing") return {"lambda", "box_s"};
  std::vector<std::string> cols{"s", "r", "d", "srd"};
  if (m.model == "kiso") {
    cols.push_back("k");
    cols.push_back("expected_small_degree");
  }
  return cols;
}

std::string column_key(const DiagnosticResult& d, const DiagnosticRow& x) {
  return d.rows.size() == 1 ? d.name : d.name + ":" + x.quantity;
}

struct Column {
  std::string key;
  bool ratio = false;
};

std::vector<Column> scan_columns(const ScanReport& r) {
  std::vector<Column> cols;
  std::set<std::string> seen;
  for (const auto& row : r.rows) {
    for (const auto& d : row.results) {
      for (const auto& x : d.rows) {
        const std::string key = column_key(d, x);
        if (seen.insert(key).second) cols.push_back({key, x.has_ratio});
      }
    }
  }
  return cols;
}

const DiagnosticRow* find_cell(const ScanRow& row, const std::string& key) {
  for (const auto& d : row.results) {
    for (const auto& x : d.rows) {
      if (column_key(d, x) == key) return &x;
    }
  }
  return nullptr;
}

}  // namespace

ScanReport scan(const RunConfig& c) {
  CHAOSLAB_REQUIRE(!c.scan.parameter.empty() && !c.scan.values.empty(), "scan needs a parameter and a nonempty grid");
  ScanReport r;
  r.config = to_json(c);
  r.parameter = c.scan.parameter;
  const TimeGrid grid = build_time_grid(c);
  for (double v : c.scan.values) {
    ScanRow row;
    row.x = v;
    try {
      const ModelConfig m = scan_point(c, v);
      row.params = point_params(m);
      if (c.scan.parameter == "srd" && c.scan.hold == "count" && m.s >= c.scan.s_max) row.params["s_capped"] = true;
      const Model model = build_model(m, c.sets);
      for (const auto& name : c.diagnostics) row.results.push_back(run_diagnostic(name, c, model, grid));
    } catch (const InvalidInput& e) {
      row.error = e.what();
    }
    r.rows.push_back(std::move(row));
  }
  if (r.rows.size() >= 3) {
    for (const auto& col : scan_columns(r)) {
      for (int which = 0; which < (col.ratio ? 2 : 1); ++which) {
        ScanFit fit;
        fit.column = col.key + (which == 0 ? "_value" : "_ratio");
        std::vector<double> xs, ys;
        bool complete = true, positive = true;
        for (const auto& row : r.rows) {
          const DiagnosticRow* cell = find_cell(row, col.key);
          const Estimate* e = cell == nullptr ? nullptr : (which == 0 ? &cell->value : &cell->ratio);
          if (e == nullptr || !e->defined || !std::isfinite(e->value)) {
            complete = false;
            break;
          }
          xs.push_back(row.x);
          ys.push_back(e->value);
          positive = positive && row.x > 0.0 && e->value > 0.0;
        }
        if (!complete) {
          fit.kind = "undefined";
        } else if (positive) {
          fit.kind = "loglog";
          fit.fit = fit_loglog(xs, ys);
        } else {
          fit.kind = "linear";
          fit.fit = fit_line(xs, ys);
        }
        r.fits.push_back(fit);
      }
    }
  }
  return r;
}

std::string scan_csv(const ScanReport& r) {
  const auto cols = scan_columns(r);
  ModelConfig shape;
  shape.model = r.config.at("model").get<std::string>();
  auto params = param_columns(shape);
  params.erase(std::remove(params.begin(), params.end(), r.parameter), params.end());
  std::ostringstream os;
  os << csv_field(r.parameter);
  for (const auto& p : params) os << ',' << p;
  for (const auto& c : cols) {
    os << ',' << csv_field(c.key + "_value") << ',' << csv_field(c.key + "_se");
    if (c.ratio) os << ',' << csv_field(c.key + "_ratio") << ',' << csv_field(c.key + "_ratio_se");
  }
  os << ",error\n";
  for (const auto& row : r.rows) {
    os << format_number(row.x);
    for (const auto& p : params) {
      os << ',';
      if (row.params.is_object() && row.params.contains(p)) os << format_number(row.params.at(p).get<double>());
    }
    for (const auto& c : cols) {
      const DiagnosticRow* cell = find_cell(row, c.key);
      os << ',' << (cell ? estimate_cells(cell->value) : std::string(","));
      if (c.ratio) os << ',' << (cell && cell->has_ratio ? estimate_cells(cell->ratio) : std::string(","));
    }
    std::string err = row.error;
    for (const auto& d : row.results) {
      if (!d.ok) err += (err.empty() ? "" : "; ") + d.name + ": " + d.error;
    }
    os << ',' << csv_field(err) << '\n';
  }
  if (!r.fits.empty()) {
    os << "\nfit_column,fit_kind,slope,intercept,r2,slope_se\n";
    for (const auto& f : r.fits) {
      os << csv_field(f.column) << ',' << f.kind;
      if (f.kind == "undefined") {
        os << ",nan,nan,nan,nan\n";
      } else {
        os << ',' << format_number(f.fit.slope) << ',' << format_number(f.fit.intercept) << ','
           << format_number(f.fit.r2) << ',' << format_number(f.fit.slope_se) << '\n';
      }
    }
  }
  return os.str();
}

nlohmann::json scan_json(const ScanReport& r) {
  auto rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = {{"x", row.x}, {"params", row.params}};
    if (!row.error.empty()) {
      j["error"] = row.error;
    } else {
      j["diagnostics"] = diagnostics_json(row.results);
    }
    rows.push_back(j);
  }
  auto fits = nlohmann::json::array();
  for (const auto& f : r.fits) {
    nlohmann::json j = {{"column", f.column}, {"kind", f.kind}};
    if (f.kind != "undefined") j["fit"] = f.fit;
    fits.push_back(j);
  }
  return {{"command", "scan"}, {"config", r.config}, {"parameter", r.parameter}, {"rows", rows}, {"fits", fits}};
}

// ---------------------------------------------------------------------------

void cmd_sample(const RunConfig& c) {
  const Model model = build_model(c.model, c.sets);
  const PointPattern p = sample_poisson(model.intensity, RngStream(c.seed, "sample"));
  const fs::path dir = ensure_dir(c.out);
  write_file(dir / "pattern.json", nlohmann::json(p).dump(2) + "\n");
}

void cmd_evolve(const RunConfig& c) {
  const Model model = build_model(c.model, c.sets);
  const TimeGrid grid = build_time_grid(c);
  const auto traj = simulate_trajectory(model.intensity, grid.tmax(), RngStream(c.seed, "evolve"));
  const fs::path dir = ensure_dir(c.out);
  write_file(dir / "trajectory.json", nlohmann::json(traj).dump(2) + "\n");
  std::vector<double> times = c.evolve_times;
  if (times.empty()) {
    for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}) {
      if (t <= grid.tmax()) times.push_back(t);
    }
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Slice s = traj.slice(times[i]);
    const nlohmann::json j = {{"t", times[i]}, {"survivors", s.survivors}, {"ids", s.ids}, {"pattern", s.pattern}};
    write_file(dir / ("slice_" + std::to_string(i) + ".json"), j.dump(2) + "\n");
  }
}

bool cmd_diagnose(const RunConfig& c) {
  const DiagnoseReport r = diagnose(c);
  const fs::path dir = ensure_dir(c.out);
  write_file(dir / "diagnose.csv", diagnose_csv(r));
  write_file(dir / "diagnose.json", diagnose_json(r).dump(2) + "\n");
  if (c.plots) cmd_plot((dir / "diagnose.json").string(), dir.string());
  return !all_failed(r.results);
}

bool cmd_scan(const RunConfig& c) {
  const ScanReport r = scan(c);
  const fs::path dir = ensure_dir(c.out);
  write_file(dir / "scan.csv", scan_csv(r));
  write_file(dir / "scan.json", scan_json(r).dump(2) + "\n");
  if (c.plots) cmd_plot((dir / "scan.json").string(), dir.string());
  if (c.diagnostics.empty()) return true;
  for (const auto& row : r.rows) {
    if (row.error.empty() && !all_failed(row.results)) return true;
  }
  return false;
}

}  // namespace chaoslab
