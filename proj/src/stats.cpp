#include "chaoslab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chaoslab/error.hpp"

namespace chaoslab {

void to_json(nlohmann::json& j, const Estimate& e) {
  j = {{"value", e.value}, {"se", e.se}, {"n", e.n}, {"seed", e.seed}};
  if (!e.defined) j["defined"] = false;
  if (!e.note.empty()) j["note"] = e.note;
}

namespace {

double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double var_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

double cov_of(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2) return 0.0;
  const double ma = mean_of(a), mb = mean_of(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - ma) * (b[i] - mb);
  return acc / static_cast<double>(a.size() - 1);
}

}  // namespace

std::vector<std::size_t> batch_bounds(std::size_t n) {
  const std::size_t b = std::min<std::size_t>(kBatches, n / 2);
  std::vector<std::size_t> bounds;
  if (b < 2) return bounds;
  const std::size_t m = n / b;
  for (std::size_t i = 0; i < b; ++i) bounds.push_back(i * m);
  bounds.push_back(n);
  return bounds;
}

Estimate mean_estimate(std::span<const double> xs) {
  CHAOSLAB_REQUIRE(xs.size() >= 2, "at least two replications are required");
  Estimate e;
  e.n = xs.size();
  e.value = mean_of(xs);
  e.se = std::sqrt(var_of(xs) / static_cast<double>(xs.size()));
  return e;
}

Estimate variance_estimate(std::span<const double> xs) {
  CHAOSLAB_REQUIRE(xs.size() >= 2, "at least two replications are required");
  Estimate e;
  e.n = xs.size();
  e.value = var_of(xs);
  const auto bounds = batch_bounds(xs.size());
  if (bounds.size() < 4) {
    e.se = std::sqrt(2.0 / static_cast<double>(xs.size() - 1)) * e.value;
    return e;
  }
  std::vector<double> vb;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) vb.push_back(var_of(xs.subspan(bounds[i], bounds[i + 1] - bounds[i])));
  e.se = std::sqrt(var_of(vb) / static_cast<double>(vb.size()));
  return e;
}

Estimate ratio_of_means(std::span<const double> a, std::span<const double> b) {
  CHAOSLAB_REQUIRE(a.size() == b.size() && a.size() >= 2, "ratio needs paired samples");
  const Estimate mb = mean_estimate(b);
  Estimate e;
  e.n = a.size();
  if (!(std::abs(mb.value) > 3.0 * mb.se) || mb.value == 0.0) {
    e.defined = false;
    e.note = "denominator indistinguishable from zero";
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.se = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  const double r = mean_of(a) / mb.value;
  std::vector<double> resid(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) resid[i] = a[i] - r * b[i];
  e.value = r;
  e.se = std::sqrt(var_of(resid) / static_cast<double>(a.size())) / std::abs(mb.value);
  return e;
}

Estimate variance_ratio(std::span<const double> f, std::span<const double> rhs) {
  CHAOSLAB_REQUIRE(f.size() == rhs.size() && f.size() >= 2, "ratio needs paired samples");
  const Estimate v = variance_estimate(f);
  const Estimate m = mean_estimate(rhs);
  Estimate e;
  e.n = f.size();
  if (!(m.value > 3.0 * m.se) || m.value <= 0.0) {
    e.defined = false;
    e.note = "Poincare bound indistinguishable from zero";
    e.value = std::numeric_limits<double>::quiet_NaN();
    e.se = std::numeric_limits<double>::quiet_NaN();
    return e;
  }
  const double r = v.value / m.value;
  e.value = r;
  const auto bounds = batch_bounds(f.size());
  if (bounds.size() < 4) {
    e.se = r * std::sqrt(std::pow(v.se / v.value, 2) + std::pow(m.se / m.value, 2));
    return e;
  }
  std::vector<double> vb, mb;
  for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
    const std::size_t len = bounds[i + 1] - bounds[i];
    vb.push_back(var_of(f.subspan(bounds[i], len)));
    mb.push_back(mean_of(rhs.subspan(bounds[i], len)));
  }
  const double b = static_cast<double>(vb.size());
  const double var_r = (var_of(vb) - 2.0 * r * cov_of(vb, mb) + r * r * var_of(mb)) / (b * m.value * m.value);
  e.se = std::sqrt(std::max(var_r, 0.0));
  return e;
}

double combined_se(double se1, double se2) { return std::sqrt(se1 * se1 + se2 * se2); }

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  CHAOSLAB_REQUIRE(x.size() == y.size() && x.size() >= 2, "a line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHAOSLAB_REQUIRE(sxx > 0.0, "a line fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  if (x.size() > 2) {
    const double sse = std::max(syy - fit.slope * sxy, 0.0);
    fit.slope_se = std::sqrt(sse / (n - 2.0) / sxx);
  }
  return fit;
}

LinearFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHAOSLAB_REQUIRE(x[i] > 0.0 && y[i] > 0.0, "log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  return fit_line(lx, ly);
}

void to_json(nlohmann::json& j, const LinearFit& f) {
  j = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"slope_se", f.slope_se}};
}

}  // namespace chaoslab
