#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dyadic/grid.hpp"
#include "dyadic/mesh.hpp"

namespace dyadic {

/// Maximal operator sampled at mesh resolution. The value on a cell is the
/// maximum over policy cubes that contain the whole cell, so it never exceeds
/// the true operator at any point of the cell.
struct MaximalResult {
  MeshFunction values;
  CubePolicy policy;
};

/// Grid-combined multilinear maximal function: `lower` is the max over all
/// policy grids, `envelope` is 6^{mn} Σ_α M^{D_α}(f).
struct CombinedMaximal {
  MeshFunction lower;
  MeshFunction envelope;
  std::vector<MeshFunction> per_grid;
  CubePolicy policy;
};

/// Cell-resolution maximum of `cube_value` over cubes of the given grids and
/// scales in [kmin, min(kmax, level)] that lie inside the domain. Cells not
/// covered by any cube receive `floor_value`.
MeshFunction cell_maximum(const DomainBox& domain, int level, std::span<const GridId> grids,
                          int kmin, int kmax,
                          const std::function<double(const DyadicCube&)>& cube_value,
                          double floor_value = 0.0);

/// ∏_i avg_Q f_i.
double product_of_averages(std::span<const MeshFunction> fs, const Box& q);

MaximalResult dyadic_multilinear_maximal(std::span<const MeshFunction> fs, GridId alpha,
                                         const CubePolicy& policy);
CombinedMaximal multilinear_maximal(std::span<const MeshFunction> fs, const CubePolicy& policy);

/// sup over grid cubes Q ∋ x of (1/σ(Q)) ∫_Q f.
MaximalResult weighted_dyadic_maximal(const MeshFunction& f, const MeshFunction& sigma,
                                      GridId alpha, const CubePolicy& policy);
/// sup over grid cubes Q ∋ x of ∏_i (1/σ_i(Q)) ∫_Q f_i.
MaximalResult multilinear_weighted_maximal(std::span<const MeshFunction> fs,
                                           std::span<const MeshFunction> sigmas, GridId alpha,
                                           const CubePolicy& policy);

/// Normalized power average (avg_Q |f|^s)^{1/s}, s >= 1.
double power_average(const MeshFunction& f, double s, const Box& q);
/// Maximal operator of power averages over every policy grid.
MaximalResult power_maximal(const MeshFunction& f, double s, const CubePolicy& policy);

/// Both sides of the per-cube factorization used for equal exponents r:
///   ∏ avg_Q f_i = A(w;Q)^{m/(r-1)} [ (|Q|/ν(Q)) (∏ σ_i(Q)^{-1} ∫_Q f_i)^{(r-1)/m} ]^{m/(r-1)}.
struct FactorizationSides {
  double product_of_averages = 0.0;
  double factored = 0.0;
  double relative_error() const;
};
FactorizationSides factorization_sides(std::span<const MeshFunction> fs, const MeshFunction& nu,
                                       std::span<const MeshFunction> sigmas, double r,
                                       const Box& q);

/// ∫_0^h (M^{D(Q)}(f χ_Q))^q · weight for Q = [0, h), where M^{D(Q)} is the
/// multilinear maximal function over the dyadic subcubes of Q and every input
/// is a one-dimensional power function. Inner averages are analytic; the
/// maximal function is sampled on 2^sublevels subcells of [h/2, h) and the
/// remaining shells [h 2^{-i-1}, h 2^{-i}) are summed in closed form using
/// the homogeneity of power functions. Throws DomainError("divergent") when
/// the shell series diverges.
double power_maximal_integral(std::span<const PowerFunction> fs, const PowerFunction& weight,
                              double q, double h, int sublevels);

/// ∫_Q (M^{D(Q)}(f χ_Q))^q · weight for an arbitrary cube Q of any grid, sampled
/// on 2^{sublevels·n} subcells of Q with exact subcube averages.
double local_maximal_integral(std::span<const Density> fs, const Density& weight, double q,
                              const Box& cube, int sublevels);

}  // namespace dyadic
