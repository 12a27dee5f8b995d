#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace chaoslab {

/// Monte-Carlo result. `defined` is false when the quantity could not be
/// distinguished from a degenerate case (e.g. a ratio over a zero estimate);
/// `note` then says why.
struct Estimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t n = 0;
  std::string seed;
  bool defined = true;
  std::string note;
};

void to_json(nlohmann::json& j, const Estimate& e);

inline constexpr std::size_t kBatches = 30;

/// Sample mean with standard error sd / sqrt(n).
Estimate mean_estimate(std::span<const double> xs);

/// Unbiased sample variance; standard error from the spread of per-batch
/// variances over min(30, n/2) contiguous batches.
Estimate variance_estimate(std::span<const double> xs);

/// mean(a) / mean(b) with a delta-method standard error.
Estimate ratio_of_means(std::span<const double> a, std::span<const double> b);

/// Var(f) / mean(rhs) over paired replications, delta-method standard error
/// from batch covariances. Undefined when mean(rhs) < 3 s.e.
Estimate variance_ratio(std::span<const double> f, std::span<const double> rhs);

double combined_se(double se1, double se2);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);
/// Fit of log(y) on log(x); requires positive data.
LinearFit fit_loglog(std::span<const double> x, std::span<const double> y);

void to_json(nlohmann::json& j, const LinearFit& f);

/// Contiguous batch boundaries used by every batch-means computation.
std::vector<std::size_t> batch_bounds(std::size_t n);

}  // namespace chaoslab
