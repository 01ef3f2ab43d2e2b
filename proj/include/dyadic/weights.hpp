#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dyadic/grid.hpp"
#include "dyadic/mesh.hpp"

namespace dyadic {

/// Conjugate exponent p' = p / (p - 1).
double conjugate(double p);

/// m weights w_i with exponents P = (p_1..p_m), 1/p = Σ 1/p_i, dual weights
/// σ_i = w_i^{1-p_i'} and the product weight ν = ∏ w_i^{p/p_i}.
struct WeightSystem {
  std::vector<double> P;
  double p = 1.0;
  std::vector<Density> w;
  std::vector<Density> sigma;
  Density nu;

  static WeightSystem make(std::vector<Density> weights, std::vector<double> exponents);
  int m() const { return static_cast<int>(P.size()); }
  DomainBox domain() const { return domain_of(w.front()); }
};

/// w^{1 - p_i'}, cell-wise or exponent-wise.
Density dual_weight(const Density& w, double p_i);

/// A supremum over a policy, with the lexicographically smallest attaining cube.
struct ConstantReport {
  std::string name;
  double value = 0.0;
  std::optional<DyadicCube> attained;
  std::string policy;
};

/// (avg_Q w)(avg_Q w^{1-p'})^{p-1}.
double ap_on_cube(const Density& w, const Density& w_dual, double p, const Box& q);
/// (avg_Q ν) ∏ (avg_Q σ_i)^{p/p_i'}.
double apvec_on_cube(const WeightSystem& ws, const Box& q);

ConstantReport ap_constant(const Density& w, double p, const CubePolicy& policy);
ConstantReport apvec_constant(const WeightSystem& ws, const CubePolicy& policy);

/// Fujii-Wilson functional max_Q (1/w(Q)) ∫_Q M(w χ_Q).
///
/// Mesh weights: the inner M at a cell is the max over policy cubes R (every
/// policy grid) containing the cell of w(R ∩ Q)/|R|. Power weights: the inner
/// M runs over the dyadic subcubes of Q, sampled on 2^sublevels subcells,
/// with the shell series summed in closed form for cubes anchored at 0.
ConstantReport ainfty_constant(const Density& w, const CubePolicy& policy, int sublevels = 10);

/// (1/w(Q)) ∫_Q M(w χ_Q) for a single cube, as used by ainfty_constant.
double ainfty_on_cube(const MeshFunction& w, const DyadicCube& q, const CubePolicy& policy);

/// Reverse Hölder exponent r = 1 + 1/(τ_n [w]_{A_∞}) with τ_n = 2^{11+n}.
double reverse_holder_exponent(double ainfty, int n);

struct ReverseHolderCube {
  double lhs = 0.0;  // (avg_Q w^r)^{1/r}
  double rhs = 0.0;  // 2 avg_Q w
  bool pass() const { return lhs <= rhs; }
};
ReverseHolderCube reverse_holder_on_cube(const MeshFunction& w, const Box& q, double r);

struct ReverseHolderReport {
  double ainfty = 0.0;
  double r = 1.0;
  bool pass = true;
  double worst_ratio = 0.0;  // max lhs / rhs
  std::optional<DyadicCube> worst_cube;
  bool fallback_used = false;
  double fallback_r = 1.0;
  bool fallback_pass = true;
  /// Smallest r at which some policy cube fails, and the matching τ.
  double empirical_r_limit = 0.0;
  double empirical_tau = 0.0;
};
ReverseHolderReport reverse_holder_check(const MeshFunction& w, const CubePolicy& policy);

/// A_q(σ; Q) = (avg σ)(avg σ^{1-q'})^{q-1}.
double aq_on_cube(const Density& sigma, double q, const Box& cube);

struct Lemma31Report {
  int j = 0;
  double sigma_aq = 0.0;         // [σ_j]_{A_{m p_j'}}
  double apvec_power = 0.0;      // [w]_{A_P}^{p_j'/p}
  double worst_cube_ratio = 0.0; // max over cubes of A_q(σ_j;Q) / A_P(w;Q)^{p_j'/p}
  std::size_t cubes = 0;
  std::size_t violations = 0;
  bool pass() const { return violations == 0; }
};
/// Per-cube check of A_{m p_j'}(σ_j;Q) <= A_P(w;Q)^{p_j'/p}; j is 1-based.
Lemma31Report lemma31_check(const WeightSystem& ws, int j, const CubePolicy& policy);

/// Relative slack used when a floating-point evaluation of an inequality that
/// holds exactly in real arithmetic is compared.
inline constexpr double kExactSlack = 1e-12;

}  // namespace dyadic
