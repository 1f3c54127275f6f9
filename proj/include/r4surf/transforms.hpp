#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "r4surf/sections.hpp"

namespace r4surf {

enum class TransformKind { kEvolute, kEnvelope, kOrthogonal, kParallel, kShift };

/// One pipeline stage. Z (parallel and shift) is the parallel normal section
/// through `z_seed` at the base node.
struct TransformSpec {
  TransformKind kind = TransformKind::kEvolute;
  double t = 0.0;
  double t1 = 0.0, t2 = 0.0;
  std::optional<Vec4> z_seed;

  static TransformSpec evolute() { return make(TransformKind::kEvolute); }
  static TransformSpec envelope() { return make(TransformKind::kEnvelope); }
  static TransformSpec orthogonal(double t) {
    TransformSpec s = make(TransformKind::kOrthogonal);
    s.t = t;
    return s;
  }
  static TransformSpec parallel(double t1, double t2, std::optional<Vec4> z = std::nullopt) {
    TransformSpec s = make(TransformKind::kParallel);
    s.t1 = t1;
    s.t2 = t2;
    s.z_seed = z;
    return s;
  }
  static TransformSpec shift(const Vec4& z) {
    TransformSpec s = make(TransformKind::kShift);
    s.z_seed = z;
    return s;
  }
  static TransformSpec make(TransformKind k) {
    TransformSpec s;
    s.kind = k;
    return s;
  }

  /// Images with df(T M) inside the normal planes of M.
  bool orthogonal_type() const;
  /// Parameter of the orthogonal family this stage belongs to (evolute 1, envelope 0).
  double family_t() const;
  bool needs_flat() const;
  bool needs_semiumbilical() const;
  std::string describe() const;
};

/// Image of one stage, sampled on the source lattice.
struct TransformedSurface {
  TransformSpec spec;
  LatticeJets image;                 // order >= 2; fd set when built from node values
  std::vector<RankInfo> rank;        // per node
  std::vector<std::uint8_t> masked;  // per node: some ingredient undefined

  std::vector<Vec4> points() const { return image.node_values(); }
  int count_rank(int r) const;
};

TransformedSurface evolute(SurfaceContext& m);
/// `e` defaults to the context's own e.
TransformedSurface envelope(SurfaceContext& m, const LatticeJets* e = nullptr);
/// id + t c - (1 - t) e; t = 1 and t = 0 reproduce evolute and envelope bit for bit.
TransformedSurface orthogonal_transform(SurfaceContext& m, double t);
/// id + t1 (e - k) + t2 (c - j) + Z. Throws GeometryError when Z is not a
/// parallel normal section.
TransformedSurface parallel_transform(SurfaceContext& m, double t1, double t2,
                                      const SectionField* z = nullptr);
TransformedSurface apply(SurfaceContext& m, const TransformSpec& spec);

/// Closed-form sections of the orthogonal image, indexed by source nodes:
/// c' = (1 - t) e - t j and e' = t c - (1 - t) k.
struct PulledBack {
  SectionField c;
  std::optional<SectionField> e;
};
/// `with_e` needs k, which exists only for t != 1.
PulledBack pullback_sections(SurfaceContext& m, double t, bool with_e = true);

/// Rank of df predicted from the sections: df(t_i) = w^i b_i with
/// w = t j - (1 - t) e in the asymptotic frame. Orthogonal-type stages only;
/// -1 where the ingredients are missing.
std::vector<int> predicted_rank(SurfaceContext& m, const TransformSpec& spec);

/// A stage together with the context of its image (the next stage's source).
struct Stage {
  TransformedSurface result;
  std::unique_ptr<SurfaceContext> image;
};
Stage run_stage(SurfaceContext& source, const TransformSpec& spec);

/// Two composite orthogonal routes and the closed formula, compared at nodes.
struct Permutability {
  double t1 = 0.0, t2 = 0.0;
  std::vector<Vec4> route_a, route_b, route_c;  // t1 then t2, t2 then t1, closed formula
  std::vector<std::uint8_t> valid;
  SectionField delta;  // route_a - route_b
  /// Per node: tangential size and normal-derivative size of the differences.
  std::vector<std::optional<double>> delta_tangential, delta_parallel;
  std::vector<std::optional<double>> ac_tangential, ac_parallel;
  std::vector<std::optional<double>> bc_tangential, bc_parallel;
  double parallel_defect = 0.0;  // max of delta_parallel
};
Permutability permutability_defect(SurfaceContext& m, double t1, double t2);

}  // namespace r4surf
