#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "chaoslab/functional.hpp"

namespace chaoslab {

/// F(mu) = number of points.
class CountFunctional final : public Functional {
 public:
  std::string name() const override { return "count"; }
  double evaluate(const PointPattern& mu) const override { return static_cast<double>(mu.size()); }
  std::vector<double> add_one_costs(const PointPattern&, const PointPattern& xs) const override {
    return std::vector<double>(xs.size(), 1.0);
  }
  std::vector<double> remove_one_costs(const PointPattern& mu) const override {
    return std::vector<double>(mu.size(), 1.0);
  }
  bool has_score() const override { return true; }
  std::vector<double> scores(const PointPattern& mu) const override { return std::vector<double>(mu.size(), 1.0); }
  std::vector<double> inserted_scores(const PointPattern&, const PointPattern& xs) const override {
    return std::vector<double>(xs.size(), 1.0);
  }
  std::pair<double, double> pair_inserted_scores(const PointPattern&, std::span<const double>,
                                                 std::span<const double>) const override {
    return {1.0, 1.0};
  }
  double interaction_range() const override { return 0.0; }
};

// ---------------------------------------------------------------------------
// Small-degree vertex counts on the torus.

/// Number of points whose closed r-ball holds at most k points (itself
/// included), i.e. RGG vertices with degree below k.
class KIsoFunctional final : public Functional {
 public:
  KIsoFunctional(int k, double r, int d);

  int k() const { return k_; }
  double r() const { return r_; }
  int dimension() const { return d_; }

  std::string name() const override { return "kiso"; }
  double evaluate(const PointPattern& mu) const override;
  std::vector<double> add_one_costs(const PointPattern& mu, const PointPattern& xs) const override;
  std::vector<double> remove_one_costs(const PointPattern& mu) const override;
  /// The pivotal-degree set N_k.
  std::vector<std::size_t> chaotic_set(const PointPattern& mu) const override;
  bool has_score() const override { return true; }
  std::vector<double> scores(const PointPattern& mu) const override;
  std::vector<double> inserted_scores(const PointPattern& mu, const PointPattern& xs) const override;
  std::pair<double, double> pair_inserted_scores(const PointPattern& mu, std::span<const double> x,
                                                 std::span<const double> y) const override;
  double interaction_range() const override { return 2.0 * r_; }

  /// |B(x, r) ∩ mu| for every point, counting the point itself.
  std::vector<std::uint32_t> occupancies(const PointPattern& mu) const;

  struct Sets {
    std::vector<std::size_t> small_degree;    // M_k: occupancy <= k
    std::vector<std::size_t> pivotal_degree;  // N_k: a neighbour has occupancy k + 1
  };
  Sets extract_sets(const PointPattern& mu) const;

  void check_pattern(const PointPattern& mu) const;

 private:
  int k_;
  double r_;
  int d_;
};

/// s * P(Poisson(kappa_d s r^d) <= k - 1), the exact torus mean for r < 1/2.
double kiso_expected_count(double s, double r, int d, int k);

/// g1(x, mu) = f(x, mu + delta_x) = 1(|B(x,r) ∩ mu| <= k - 1).
LocalFunctionPtr kiso_small_degree(int k, double r, int d);
/// g2(x, mu) = #{y in mu ∩ B(x,r) : |B(y,r) ∩ mu| = k}, so D_x I = g1 - g2.
LocalFunctionPtr kiso_degree_loss(int k, double r, int d);
/// Indicator of g2 > 0; at points of mu this is membership of N_k.
LocalFunctionPtr kiso_pivotal_degree(int k, double r, int d);

// ---------------------------------------------------------------------------
// Gamma-components.

/// Simple graph on at most 8 vertices, adjacency as bit rows.
class SmallGraph {
 public:
  static constexpr int kMaxVertices = 8;

  SmallGraph() = default;
  SmallGraph(int k, const std::vector<std::pair<int, int>>& edges);

  int order() const { return k_; }
  bool adjacent(int u, int v) const { return (adj_[u] >> v) & 1u; }
  void add_edge(int u, int v);
  int degree(int u) const;
  int edge_count() const;
  bool connected() const;
  std::vector<std::pair<int, int>> edges() const;
  /// Same graph with vertex v renamed perm[v].
  SmallGraph relabeled(const std::vector<int>& perm) const;

 private:
  int k_ = 0;
  std::array<std::uint8_t, kMaxVertices> adj_{};
};

/// Degree-sequence prefilter, then backtracking over vertex bijections.
bool isomorphic(const SmallGraph& a, const SmallGraph& b);

void to_json(nlohmann::json& j, const SmallGraph& g);
SmallGraph small_graph_from_json(const nlohmann::json& j);

/// J(Gamma): the number of connected components of RGG(mu, r) whose induced
/// graph is isomorphic to Gamma.
class GammaFunctional final : public Functional {
 public:
  GammaFunctional(SmallGraph gamma, double r, int d);

  const SmallGraph& gamma() const { return gamma_; }
  double r() const { return r_; }
  int dimension() const { return d_; }

  std::string name() const override { return "gamma"; }
  double evaluate(const PointPattern& mu) const override;
  std::vector<double> add_one_costs(const PointPattern& mu, const PointPattern& xs) const override;
  std::vector<double> remove_one_costs(const PointPattern& mu) const override;
  bool has_score() const override { return true; }
  /// 1(component of x is a Gamma-component) / k.
  std::vector<double> scores(const PointPattern& mu) const override;

  /// Points lying in Gamma-components.
  std::vector<std::size_t> members(const PointPattern& mu) const;
  /// A k-point component meeting B(x, r) lies in B(x, k r); telling it from
  /// a larger one needs one more step.
  double interaction_range() const override { return (gamma_.order() + 1) * r_; }

 private:
  struct State;
  State prepare(const PointPattern& mu) const;
  bool matches(const PointPattern& mu, std::span<const std::size_t> vertices,
               std::span<const double> extra = {}) const;

  SmallGraph gamma_;
  double r_;
  int d_;
};

// ---------------------------------------------------------------------------
// Boolean-model box crossing.

/// +1 if unit disks centred at the points connect the left and right edges
/// of W_s = [-s, s]^2, -1 otherwise. Patterns live on [-(s+1), s+1]^2.
///
/// Default: a chain of disks that each meet W_s, consecutive centres at
/// distance <= 2. Clipped: consecutive disks must overlap inside W_s, so the
/// crossing is realised by Occ(mu) ∩ W_s itself.
class CrossingFunctional final : public Functional {
 public:
  explicit CrossingFunctional(double s, bool clipped = false);

  double half_side() const { return s_; }
  bool clipped() const { return clipped_; }
  static Window sampling_window(double s);

  std::string name() const override { return clipped_ ? "crossing_clipped" : "crossing"; }
  double evaluate(const PointPattern& mu) const override;
  std::vector<double> add_one_costs(const PointPattern& mu, const PointPattern& xs) const override;
  /// 2 on the pivotal set, 0 elsewhere.
  std::vector<double> remove_one_costs(const PointPattern& mu) const override;
  std::vector<std::size_t> chaotic_set(const PointPattern& mu) const override { return pivotal_set(mu); }

  /// Points whose removal destroys the crossing.
  std::vector<std::size_t> pivotal_set(const PointPattern& mu) const;

  bool meets_box(std::span<const double> c) const;
  bool touches_left(std::span<const double> c) const;
  bool touches_right(std::span<const double> c) const;
  /// Whether disks at a and b (both meeting W_s) are linked.
  bool linked(std::span<const double> a, std::span<const double> b) const;

 private:
  struct State;
  State prepare(const PointPattern& mu) const;
  void check_pattern(const PointPattern& mu) const;

  double s_;
  bool clipped_;
};

/// g(x, mu) = 1(D_x F(mu) != 0) for the crossing functional.
LocalFunctionPtr crossing_pivotal(std::shared_ptr<const CrossingFunctional> f);

// ---------------------------------------------------------------------------

enum class ChaoticSetKind { pivotal, small_degree, pivotal_degree, gamma_membership, cost_support };

ChaoticSetKind chaotic_set_kind_from_string(const std::string& s);
std::string to_string(ChaoticSetKind k);

using SetExtractor = std::function<std::vector<std::size_t>(const PointPattern&)>;

/// Extractor of the given kind for a model; rejects kinds the model lacks.
SetExtractor make_set_extractor(ChaoticSetKind kind, const FunctionalPtr& model);

}  // namespace chaoslab
