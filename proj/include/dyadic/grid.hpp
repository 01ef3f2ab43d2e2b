#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyadic {

/// Raised when an argument violates a documented precondition.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One of the 2^n shifted dyadic grids. Bit b of `alpha` selects a shift of
/// 1/3 in coordinate b; alpha = 0 is the standard grid.
struct GridId {
  unsigned alpha = 0;

  bool shifted_in(int dim) const { return (alpha >> dim) & 1u; }
  static unsigned count(int n) { return 1u << n; }
  friend bool operator==(GridId, GridId) = default;
  friend auto operator<=>(GridId, GridId) = default;
};

/// Half-open axis-aligned box [lo, hi).
struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  double measure() const;
  bool contains(const Box& other) const;
  std::optional<Box> intersect(const Box& other) const;
  /// Side length of a cube; throws if the box is not a cube.
  double side() const;

  static Box cube(std::vector<double> lo, double side);
};

/// Cube 2^{-k}([0,1)^n + j + (-1)^k t_alpha) of grid `grid`.
struct DyadicCube {
  GridId grid;
  int k = 0;
  std::vector<std::int64_t> j;

  int dim() const { return static_cast<int>(j.size()); }
  double side() const;
  double measure() const;
  Box box() const;

  DyadicCube parent() const;
  std::vector<DyadicCube> children() const;
  /// Ancestor-or-self test within one grid. Cubes of different grids never
  /// compare as nested.
  bool contains(const DyadicCube& other) const;
  DyadicCube ancestor(int level) const;

  /// Cube of `grid` at scale k containing the point x.
  static DyadicCube containing(GridId grid, int k, const std::vector<double>& x);

  friend bool operator==(const DyadicCube&, const DyadicCube&) = default;
  friend auto operator<=>(const DyadicCube&, const DyadicCube&) = default;

  std::string to_string() const;
};

/// Sign (-1)^k of the shift at scale k.
inline int shift_sign(int k) { return (k % 2 == 0) ? 1 : -1; }

/// Lower corner of cube (k, j) along one axis, measured in units of
/// 2^{-level}/3 with level >= k. Exact integer arithmetic.
std::int64_t corner_units(int k, std::int64_t j, bool shifted, int level);

/// The computational domain [0, 2^K)^n.
struct DomainBox {
  int n = 1;
  int K = 0;

  double side() const;
  double measure() const;
  Box box() const;
  bool contains(const Box& b) const;
  bool contains(const DyadicCube& q) const;
  friend bool operator==(const DomainBox&, const DomainBox&) = default;
};

/// Finite cube set standing in for "all cubes": every cube of the listed grids
/// with scale in [kmin, kmax] lying inside the domain.
struct CubePolicy {
  std::vector<GridId> grids;
  int kmin = 0;
  int kmax = 0;

  static CubePolicy all_grids(const DomainBox& d, int kmax);
  static CubePolicy standard(const DomainBox& d, int kmax);
  std::string describe() const;
};

/// Enumerates policy cubes in deterministic order: grid, then k ascending,
/// then j lexicographic.
void for_each_cube(const CubePolicy& policy, const DomainBox& domain,
                   const std::function<void(const DyadicCube&)>& visit);

/// Cubes of `grid` at scale k that lie inside the domain.
void for_each_cube_at(GridId grid, int k, const DomainBox& domain,
                      const std::function<void(const DyadicCube&)>& visit);

std::size_t count_cubes(const CubePolicy& policy, const DomainBox& domain);

/// Smallest cube P of grid alpha with q ⊆ P, provided l(P) <= 6 l(q).
std::optional<DyadicCube> shifted_cover(const Box& q, GridId alpha);

/// Concentric dilate of q by 2^l, clipped to the domain.
Box clipped_dilate(const Box& q, int l, const DomainBox& domain);

struct DilatedCover {
  Box dilate;                     // 2^l Q ∩ domain
  std::optional<DyadicCube> cover;  // P with dilate ⊆ P, l(P) <= 6 * 2^l l(Q)
};

/// Cover of the clipped dilate 2^l Q in grid alpha. Throws DomainError when Q
/// itself leaves the domain.
DilatedCover dilated_cover(const DyadicCube& q, int l, GridId alpha,
                           const DomainBox& domain);

}  // namespace dyadic
