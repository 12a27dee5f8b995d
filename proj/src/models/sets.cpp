#include "chaoslab/error.hpp"
#include "chaoslab/models.hpp"

namespace chaoslab {

ChaoticSetKind chaotic_set_kind_from_string(const std::string& s) {
  if (s == "pivotal") return ChaoticSetKind::pivotal;
  if (s == "small_degree") return ChaoticSetKind::small_degree;
  if (s == "pivotal_degree") return ChaoticSetKind::pivotal_degree;
  if (s == "gamma_membership") return ChaoticSetKind::gamma_membership;
  if (s == "cost_support") return ChaoticSetKind::cost_support;
  throw InvalidInput("unknown chaotic set kind \"" + s + "\"");
}

std::string to_string(ChaoticSetKind k) {
  switch (k) {
    case ChaoticSetKind::pivotal: return "pivotal";
    case ChaoticSetKind::small_degree: return "small_degree";
    case ChaoticSetKind::pivotal_degree: return "pivotal_degree";
    case ChaoticSetKind::gamma_membership: return "gamma_membership";
    case ChaoticSetKind::cost_support: return "cost_support";
  }
  return "";
}

SetExtractor make_set_extractor(ChaoticSetKind kind, const FunctionalPtr& model) {
  CHAOSLAB_REQUIRE(model != nullptr, "model is null");
  switch (kind) {
    case ChaoticSetKind::cost_support:
      return [model](const PointPattern& mu) { return model->chaotic_set(mu); };
    case ChaoticSetKind::pivotal: {
      auto f = std::dynamic_pointer_cast<const CrossingFunctional>(model);
      CHAOSLAB_REQUIRE(f != nullptr, "pivotal sets need the crossing model");
      return [f](const PointPattern& mu) { return f->pivotal_set(mu); };
    }
    case ChaoticSetKind::small_degree:
    case ChaoticSetKind::pivotal_degree: {
      auto f = std::dynamic_pointer_cast<const KIsoFunctional>(model);
      CHAOSLAB_REQUIRE(f != nullptr, to_string(kind) + " sets need the kiso model");
      const bool small = kind == ChaoticSetKind::small_degree;
      return [f, small](const PointPattern& mu) {
        auto sets = f->extract_sets(mu);
        return small ? sets.small_degree : sets.pivotal_degree;
      };
    }
    case ChaoticSetKind::gamma_membership: {
      auto f = std::dynamic_pointer_cast<const GammaFunctional>(model);
      CHAOSLAB_REQUIRE(f != nullptr, "gamma_membership sets need the gamma model");
      return [f](const PointPattern& mu) { return f->members(mu); };
    }
  }
  throw InvalidInput("unknown chaotic set kind");
}

}  // namespace chaoslab
