#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dyadic/grid.hpp"
#include "dyadic/mesh.hpp"

namespace dyadic {

/// Maximal median of a distribution: the largest c with |{f > c}| <= |Q|/2
/// and |{f < c}| <= |Q|/2. Atoms must cover the region (total measure |Q|).
double median(std::span<const Atom> atoms);
double median(const MeshFunction& f, const Box& q);

/// inf_c ((f - c) χ_Q)^*(λ|Q|): half the width of the narrowest closed value
/// interval carrying measure >= (1 - λ)|Q|.
double local_oscillation(std::span<const Atom> atoms, double lambda);
/// Mesh version; rejects λ|Q| below one cell.
double local_oscillation(const MeshFunction& f, const Box& q, double lambda);

/// Smallest dyadic level k' such that λ 2^{-nk'} is at least one cell.
int finest_oscillation_level(const MeshFunction& f, double lambda);

/// m^{#,d}_{λ;Q0} f on the cells of Q0 (zero elsewhere): the max of ω_λ(f;Q')
/// over Q' ∈ D(Q0) containing the cell, down to finest_oscillation_level.
MeshFunction local_sharp_maximal(const MeshFunction& f, const DyadicCube& q0, double lambda);

struct DecompositionReport {
  double lambda = 0.0;
  double median_q0 = 0.0;
  std::map<int, std::vector<DyadicCube>> family;  // generation -> cubes, Q0 is generation 0
  bool family_sparse = true;
  std::string sparse_violation;
  /// C1 needed when C2 = 2, and C2 needed when C1 = 4 (0 when LHS vanishes).
  double c1_min = 0.0;
  double c2_min = 0.0;
  /// Smallest t with LHS <= t (4 m^# + 2 Σ ω χ); pass iff t <= 1.
  double scale = 0.0;
  bool pass = true;
  std::optional<std::size_t> witness_cell;
  double witness_lhs = 0.0;
  double witness_sharp = 0.0;
  double witness_sum = 0.0;
};

/// Builds the stopping family from Q0 (children of a selected Q are the
/// maximal Q' ∈ D(Q) with |m_f(Q') - m_f(Q)| > 2 ω_λ(f;Q)) and checks
/// |f - m_f(Q0)| <= 4 m^{#,d}_{λ;Q0} f + 2 Σ ω_λ(f;Q_j^k) χ_{Q_j^k} cell-wise.
/// A non-positive lambda selects 1/2^{n+2}.
DecompositionReport decomposition_check(const MeshFunction& f, const DyadicCube& q0,
                                        double lambda = 0.0);

}  // namespace dyadic
