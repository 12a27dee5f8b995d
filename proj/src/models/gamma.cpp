#include <algorithm>
#include <bit>
#include <cmath>

#include "chaoslab/error.hpp"
#include "chaoslab/geometry.hpp"
#include "chaoslab/models.hpp"

namespace chaoslab {

SmallGraph::SmallGraph(int k, const std::vector<std::pair<int, int>>& edges) : k_(k) {
  CHAOSLAB_REQUIRE(k >= 1 && k <= kMaxVertices, "graph order must be in [1, 8]");
  for (auto [u, v] : edges) add_edge(u, v);
}

void SmallGraph::add_edge(int u, int v) {
  CHAOSLAB_REQUIRE(u >= 0 && v >= 0 && u < k_ && v < k_, "edge endpoint out of range");
  CHAOSLAB_REQUIRE(u != v, "self-loops are not allowed");
  adj_[u] |= static_cast<std::uint8_t>(1u << v);
  adj_[v] |= static_cast<std::uint8_t>(1u << u);
}

int SmallGraph::degree(int u) const { return std::popcount(static_cast<unsigned>(adj_[u])); }

int SmallGraph::edge_count() const {
  int e = 0;
  for (int u = 0; u < k_; ++u) e += degree(u);
  return e / 2;
}

bool SmallGraph::connected() const {
  if (k_ == 0) return false;
  unsigned seen = 1u, frontier = 1u;
  while (frontier) {
    unsigned next = 0;
    for (int u = 0; u < k_; ++u) {
      if (frontier & (1u << u)) next |= adj_[u];
    }
    frontier = next & ~seen;
    seen |= next;
  }
  return seen == (1u << k_) - 1u;
}

std::vector<std::pair<int, int>> SmallGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < k_; ++u) {
    for (int v = u + 1; v < k_; ++v) {
      if (adjacent(u, v)) out.emplace_back(u, v);
    }
  }
  return out;
}

SmallGraph SmallGraph::relabeled(const std::vector<int>& perm) const {
  CHAOSLAB_REQUIRE(static_cast<int>(perm.size()) == k_, "permutation size mismatch");
  SmallGraph g;
  g.k_ = k_;
  for (auto [u, v] : edges()) g.add_edge(perm[u], perm[v]);
  return g;
}

namespace {

bool extend(const SmallGraph& a, const SmallGraph& b, int u, std::array<int, SmallGraph::kMaxVertices>& map,
            unsigned used) {
  if (u == a.order()) return true;
  for (int v = 0; v < b.order(); ++v) {
    if (used & (1u << v)) continue;
    if (a.degree(u) != b.degree(v)) continue;
    bool ok = true;
    for (int w = 0; w < u && ok; ++w) ok = a.adjacent(u, w) == b.adjacent(v, map[w]);
    if (!ok) continue;
    map[u] = v;
    if (extend(a, b, u + 1, map, used | (1u << v))) return true;
  }
  return false;
}

}  // namespace

bool isomorphic(const SmallGraph& a, const SmallGraph& b) {
  if (a.order() != b.order() || a.edge_count() != b.edge_count()) return false;
  std::vector<int> da, db;
  for (int u = 0; u < a.order(); ++u) {
    da.push_back(a.degree(u));
    db.push_back(b.degree(u));
  }
  std::sort(da.begin(), da.end());
  std::sort(db.begin(), db.end());
  if (da != db) return false;
  std::array<int, SmallGraph::kMaxVertices> map{};
  return extend(a, b, 0, map, 0u);
}

void to_json(nlohmann::json& j, const SmallGraph& g) {
  auto edges = nlohmann::json::array();
  for (auto [u, v] : g.edges()) edges.push_back({u, v});
  j = {{"k", g.order()}, {"edges", edges}};
}

SmallGraph small_graph_from_json(const nlohmann::json& j) {
  CHAOSLAB_REQUIRE(j.is_object() && j.contains("k") && j.contains("edges"), "graph needs \"k\" and \"edges\"");
  CHAOSLAB_REQUIRE(j.at("k").is_number_integer(), "graph \"k\" must be an integer");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j.at("edges")) {
    CHAOSLAB_REQUIRE(e.is_array() && e.size() == 2, "each edge must be a pair of vertex indices");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  return SmallGraph(j.at("k").get<int>(), edges);
}

// ---------------------------------------------------------------------------

struct GammaFunctional::State {
  std::unique_ptr<SpatialIndex> index;
  Components comps;
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::uint8_t> is_gamma;  // per component
  double total = 0.0;
};

GammaFunctional::GammaFunctional(SmallGraph gamma, double r, int d) : gamma_(std::move(gamma)), r_(r), d_(d) {
  CHAOSLAB_REQUIRE(gamma_.order() >= 2, "Gamma needs at least two vertices");
  CHAOSLAB_REQUIRE(gamma_.connected(), "Gamma must be connected");
  CHAOSLAB_REQUIRE(d >= 1 && d <= kMaxDimension, "dimension must be in [1, 8]");
  CHAOSLAB_REQUIRE(std::isfinite(r) && r > 0.0 && r < 0.5, "radius must lie in (0, 1/2) on the unit torus");
}

bool GammaFunctional::matches(const PointPattern& mu, std::span<const std::size_t> vertices,
                              std::span<const double> extra) const {
  const int k = static_cast<int>(vertices.size()) + (extra.empty() ? 0 : 1);
  if (k != gamma_.order()) return false;
  SmallGraph g(k, {});
  auto point = [&](int u) { return u < static_cast<int>(vertices.size()) ? mu[vertices[u]] : extra; };
  for (int u = 0; u < k; ++u) {
    for (int v = u + 1; v < k; ++v) {
      if (within_radius(mu.window().squared_distance(point(u), point(v)), r_)) g.add_edge(u, v);
    }
  }
  return isomorphic(g, gamma_);
}

GammaFunctional::State GammaFunctional::prepare(const PointPattern& mu) const {
  CHAOSLAB_REQUIRE(mu.window().is_torus() && mu.dimension() == d_,
                   "gamma needs a pattern on the unit torus of dimension " + std::to_string(d_));
  State st;
  st.index = std::make_unique<SpatialIndex>(mu, r_);
  st.comps = connected_components(*st.index, r_);
  st.groups = st.comps.groups();
  st.is_gamma.assign(st.comps.count, 0);
  for (std::size_t c = 0; c < st.comps.count; ++c) {
    if (static_cast<int>(st.groups[c].size()) == gamma_.order() && matches(mu, st.groups[c])) {
      st.is_gamma[c] = 1;
      st.total += 1.0;
    }
  }
  return st;
}

double GammaFunctional::evaluate(const PointPattern& mu) const { return prepare(mu).total; }

std::vector<double> GammaFunctional::scores(const PointPattern& mu) const {
  const State st = prepare(mu);
  std::vector<double> out(mu.size());
  for (std::size_t i = 0; i < mu.size(); ++i) out[i] = st.is_gamma[st.comps.label[i]] ? 1.0 / gamma_.order() : 0.0;
  return out;
}

std::vector<std::size_t> GammaFunctional::members(const PointPattern& mu) const {
  const State st = prepare(mu);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (st.is_gamma[st.comps.label[i]]) out.push_back(i);
  }
  return out;
}

std::vector<double> GammaFunctional::remove_one_costs(const PointPattern& mu) const {
  const State st = prepare(mu);
  const auto k = static_cast<std::size_t>(gamma_.order());
  std::vector<double> out(mu.size(), 0.0);

  std::vector<std::size_t> nbrs, piece, queue, scratch;
  std::vector<std::uint32_t> mark(mu.size(), 0), owner(mu.size(), 0);
  std::uint32_t stamp = 0, piece_id = 0;
  // A vertex of degree > k keeps degree >= k after one removal, so its piece
  // has more than k points.
  std::vector<std::size_t> degree(mu.size(), 0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (st.groups[st.comps.label[i]].size() <= k) continue;
    st.index->neighbors_within(mu[i], r_, i, nbrs);
    degree[i] = nbrs.size();
  }
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const std::size_t size = st.groups[st.comps.label[i]].size();
    if (size < k) continue;
    if (size == k) {
      out[i] = st.is_gamma[st.comps.label[i]];
      continue;
    }
    // The component survives as pieces of C \ {x_i}; count the pieces that
    // are Gamma-components. Exploration stops once a piece exceeds k points;
    // a later piece touching an abandoned one is the same piece.
    st.index->neighbors_within(mu[i], r_, i, nbrs);
    ++stamp;
    mark[i] = stamp;
    owner[i] = 0;
    double created = 0.0;
    for (std::size_t start : nbrs) {
      if (mark[start] == stamp || degree[start] > k) continue;
      ++piece_id;
      piece.clear();
      queue.assign(1, start);
      mark[start] = stamp;
      owner[start] = piece_id;
      bool too_big = false;
      for (std::size_t q = 0; q < queue.size() && !too_big; ++q) {
        piece.push_back(queue[q]);
        st.index->neighbors_within(mu[queue[q]], r_, queue[q], scratch);
        for (std::size_t v : scratch) {
          if (mark[v] == stamp) {
            if (v != i && owner[v] != piece_id) {
              too_big = true;
              break;
            }
            continue;
          }
          mark[v] = stamp;
          owner[v] = piece_id;
          queue.push_back(v);
          if (queue.size() > k || degree[v] > k) {
            too_big = true;
            break;
          }
        }
      }
      if (!too_big && piece.size() == k && matches(mu, piece)) created += 1.0;
    }
    out[i] = -created;
  }
  return out;
}

std::vector<double> GammaFunctional::add_one_costs(const PointPattern& mu, const PointPattern& xs) const {
  const State st = prepare(mu);
  const auto k = static_cast<std::size_t>(gamma_.order());
  std::vector<double> out(xs.size(), 0.0);
  std::vector<std::size_t> nbrs, labels, merged;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    st.index->neighbors_within(xs[j], r_, kNoExclude, nbrs);
    labels.clear();
    for (std::size_t v : nbrs) labels.push_back(st.comps.label[v]);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    double destroyed = 0.0;
    std::size_t size = 1;
    for (std::size_t c : labels) {
      destroyed += st.is_gamma[c];
      size += st.groups[c].size();
    }
    double created = 0.0;
    if (size == k) {
      merged.clear();
      for (std::size_t c : labels) merged.insert(merged.end(), st.groups[c].begin(), st.groups[c].end());
      created = matches(mu, merged, xs[j]) ? 1.0 : 0.0;
    }
    out[j] = created - destroyed;
  }
  return out;
}

}  // namespace chaoslab
