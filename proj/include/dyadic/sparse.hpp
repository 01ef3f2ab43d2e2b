#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dyadic/grid.hpp"
#include "dyadic/mesh.hpp"

namespace dyadic {

/// Generations {Q_j^k} of cubes from one grid. Cubes may reach beyond the
/// domain; functions are extended by zero there.
struct SparseFamily {
  GridId grid;
  DomainBox domain;
  int level = 0;   // mesh level of the data the family was built from
  double a = 0.0;  // level constant c_n, 0 when not built by the CZ rule
  std::map<int, std::vector<DyadicCube>> generations;

  std::size_t size() const;
  bool empty() const { return size() == 0; }
  /// All cubes, generation ascending then j lexicographic.
  std::vector<DyadicCube> cubes() const;
};

struct SparseReport {
  bool pass = true;
  std::string invariant;  // first violated: disjoint, nested, half-overlap, kernel
  std::string detail;
  std::size_t cubes = 0;
  double worst_overlap = 0.0;  // max |Ω_{k+1} ∩ Q| / |Q|
};

/// Exact check of the four sparseness invariants (power-of-two measures).
SparseReport verify_sparse(const SparseFamily& s);

/// c_n^k < ∏ avg_Q f_i <= 2^{mn} c_n^k for every cube of generation k.
struct GenerationBoundReport {
  bool pass = true;
  double min_lower_ratio = 0.0;  // min ∏avg / c_n^k, must exceed 1
  double max_upper_ratio = 0.0;  // max ∏avg / (2^{mn} c_n^k), must not exceed 1
  std::string witness;
};
GenerationBoundReport check_generation_bounds(const SparseFamily& s,
                                              std::span<const MeshFunction> fs);

/// CZ family for Ω_k = {M^{D_α}(f⃗) > c_n^k}, c_n = 2^{m(n+1)}: generation k
/// holds the maximal grid cubes with ∏ avg > c_n^k, at scales up to
/// min(policy.kmax, L). Generations run from the largest k with c_n^k below
/// the minimum of M^{D_α}(f⃗) on the domain to the last nonempty one.
SparseFamily build_cz_sparse(std::span<const MeshFunction> fs, GridId alpha,
                             const CubePolicy& policy);

/// Subfamily of cubes inside the domain, starting at the first generation
/// with such cubes; later cubes are kept when their container in the previous
/// generation is kept. Sparseness is preserved.
SparseFamily restrict_to_domain(const SparseFamily& s);

/// Header "SPF 1" / "grid n K L a" / count, then "k j_1 .. j_n scale" lines.
std::string format_family(const SparseFamily& s);
SparseFamily parse_family(const std::string& text);

/// value · χ_box.
struct BoxTerm {
  Box box;
  double value = 0.0;
};

/// Cell averages of Σ value χ_box on the mesh of `shape`.
MeshFunction project_terms(std::span<const BoxTerm> terms, const MeshFunction& shape);
/// Exact distribution of Σ value χ_box on `region`, including the zero set.
std::vector<Atom> term_distribution(std::span<const BoxTerm> terms, const Box& region);

/// A_{D,S}(f⃗) = Σ ∏ avg_Q f_i χ_Q.
std::vector<BoxTerm> sparse_terms(const SparseFamily& s, std::span<const MeshFunction> fs);
MeshFunction sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs);

/// T_{S,l}(f⃗) = Σ ∏ avg_{2^l Q} f_i χ_Q with the dilate clipped to the domain.
std::vector<BoxTerm> dilated_terms(const SparseFamily& s, std::span<const MeshFunction> fs, int l);
MeshFunction dilated_sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs, int l);

/// Cube of S with the grid and cover P ⊇ 2^l Q (clipped), l(P) <= 6 · 2^l l(Q).
struct CoveredCube {
  DyadicCube q;
  GridId alpha;
  DyadicCube cover;
};
/// F_α partition: each cube goes to the first grid that covers its dilate.
/// Cubes must lie in the domain.
std::vector<CoveredCube> cover_partition(const SparseFamily& s, int l);

/// T_{l,α}(f⃗) = Σ_{Q ∈ F_α} ∏ avg_P f_i χ_Q.
std::vector<BoxTerm> covered_terms(std::span<const CoveredCube> part, GridId alpha,
                                   std::span<const MeshFunction> fs);
/// Σ_α T_{l,α}(f⃗); T_{S,l} <= 12^{nm} times this with clipped dilates
/// (6^{nm} for dilates that stay inside the domain).
MeshFunction covered_sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs, int l);

/// M_{l,α}(f⃗_{1..m-1}, g) = Σ_{Q ∈ F_α} ∏_{i<m} avg_P f_i (1/|P|) ∫_Q g χ_P.
std::vector<BoxTerm> aux_form_terms(std::span<const CoveredCube> part, GridId alpha,
                                    std::span<const MeshFunction> fs_head, const MeshFunction& g);
MeshFunction aux_form_apply(const SparseFamily& s, std::span<const MeshFunction> fs_head,
                            const MeshFunction& g, int l, GridId alpha);

struct DualityReport {
  double lhs = 0.0;  // ∫ T_{l,α}(f⃗) g
  double rhs = 0.0;  // ∫ M_{l,α}(f⃗_{1..m-1}, g) f_m
  double relative_error = 0.0;
  std::size_t cubes = 0;
  bool pass = true;
};
DualityReport duality_check(const SparseFamily& s, std::span<const MeshFunction> fs,
                            const MeshFunction& g, int l, GridId alpha);

/// 𝒯_l g = Σ_{Q ∈ F_α} ((1/|P|) ∫_Q g) χ_P.
std::vector<BoxTerm> shifted_avg_terms(std::span<const CoveredCube> part, GridId alpha,
                                       const MeshFunction& g);
MeshFunction shifted_avg_apply(const SparseFamily& s, const MeshFunction& g, int l, GridId alpha);

/// sup_λ λ |{h > λ}| / norm, from an exact distribution.
struct WeakProfile {
  bool defined = false;
  double value = 0.0;
};
WeakProfile weak_l1_profile(std::span<const Atom> dist, double norm);
/// Profile of 𝒯_l g over R^n (the covers may leave the domain), normalized by ‖g‖_1.
WeakProfile shifted_avg_profile(const SparseFamily& s, const MeshFunction& g, int l, GridId alpha);

struct Lemma42Report {
  double lhs = 0.0;       // ω_λ(M_{l,α}(f⃗, g); Q)
  double g_avg = 0.0;
  double f_product = 1.0;
  int l = 0;
  double c_hat = 0.0;
  bool unbounded = false;
};
Lemma42Report lemma42_probe(const SparseFamily& s, std::span<const MeshFunction> fs_head,
                            const MeshFunction& g, int l, GridId alpha, const DyadicCube& q,
                            double lambda);

struct DominationReport {
  double bound = 0.0;      // (2 · 12^n)^m
  double max_ratio = 0.0;  // max_cell M / Σ_α A_α
  bool pass = true;
  std::optional<std::size_t> witness_cell;
  std::vector<std::size_t> family_sizes;
};
DominationReport domination_check(std::span<const MeshFunction> fs, const CubePolicy& policy);

}  // namespace dyadic
