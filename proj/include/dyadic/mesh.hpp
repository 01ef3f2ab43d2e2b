#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dyadic/grid.hpp"

namespace dyadic {

/// A value carried by a set of given measure. Piecewise-constant functions
/// restricted to a region reduce to finite lists of atoms.
struct Atom {
  double value = 0.0;
  double measure = 0.0;
};

/// Piecewise-constant function on the cells of side 2^{-L} covering
/// [0, 2^K)^n, extended by zero outside the domain. Cells are stored in
/// lexicographic order with the first coordinate most significant.
///
/// A cumulative-integral table is built on construction; integrals over
/// arbitrary axis-aligned boxes are exact up to rounding because the
/// antiderivative is multilinear inside each cell.
class MeshFunction {
 public:
  MeshFunction() = default;
  MeshFunction(DomainBox domain, int level, std::vector<double> values);

  static MeshFunction constant(DomainBox domain, int level, double c);
  /// Cell values from a callback receiving the cell box.
  static MeshFunction from_cells(DomainBox domain, int level,
                                 const std::function<double(const Box&)>& cell_value);

  const DomainBox& domain() const { return domain_; }
  int dim() const { return domain_.n; }
  int level() const { return level_; }
  std::int64_t cells_per_axis() const { return cells_per_axis_; }
  std::size_t size() const { return values_.size(); }
  double cell_measure() const;
  double cell_side() const;
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::vector<std::int64_t> cell_coords(std::size_t index) const;
  std::size_t cell_index(const std::vector<std::int64_t>& coords) const;
  Box cell_box(std::size_t index) const;

  /// Integral over b ∩ domain.
  double integral(const Box& b) const;
  double integral() const;
  /// Average over b (zero extension outside the domain). Throws on |b| = 0.
  double average(const Box& b) const;

  /// (value, overlap measure) for every cell meeting the region.
  std::vector<Atom> atoms(const Box& region) const;

  MeshFunction map(const std::function<double(double)>& fn) const;
  MeshFunction zip(const MeshFunction& other, const std::function<double(double, double)>& fn) const;
  /// Same function on a finer mesh.
  MeshFunction refine(int level) const;
  bool same_mesh(const MeshFunction& other) const;
  bool all_positive() const;

 private:
  long double prefix_at(const std::vector<double>& units) const;

  DomainBox domain_{};
  int level_ = 0;
  std::int64_t cells_per_axis_ = 1;
  std::vector<double> values_;
  std::vector<long double> prefix_;
};

/// c * x^a on (0, 2^K), zero elsewhere; one-dimensional. a > -1 keeps every
/// box integral finite.
struct PowerFunction {
  double coefficient = 1.0;
  double exponent = 0.0;
  int K = 0;

  PowerFunction() = default;
  PowerFunction(double c, double a, int K = 0);

  double operator()(double x) const;
  /// Exact integral over [u, v) ∩ (0, 2^K).
  double integral(double u, double v) const;
  double integral(const Box& b) const;
  double average(const Box& b) const;
  PowerFunction pow(double s) const;
  PowerFunction operator*(const PowerFunction& o) const;
  DomainBox domain() const { return DomainBox{1, K}; }
};

/// A weight or density in either representation.
using Density = std::variant<MeshFunction, PowerFunction>;

double integral(const Density& f, const Box& b);
double average(const Density& f, const Box& b);
int dim_of(const Density& f);
DomainBox domain_of(const Density& f);
/// Pointwise power f^s.
Density pow(const Density& f, double s);

/// Cell average of a power function on a mesh (exact cell integrals).
MeshFunction sample_cell_averages(const PowerFunction& f, int level);

double box_average(const Density& f, const Box& b);

/// (f χ_R)^*(t) = inf{α >= 0 : |{x ∈ R : |f(x)| > α}| <= t}.
double rearrangement_value(const MeshFunction& f, const Box& region, double t);
/// Same quantity for an explicit atom list of total measure `region_measure`.
double rearrangement_value(std::span<const Atom> atoms, double region_measure, double t);

/// (∫ |f|^p w)^{1/p}; meshes are compared on their common refinement.
double weighted_lp_norm(const MeshFunction& f, const MeshFunction& w, double p);
double weighted_lp_norm(const MeshFunction& f, const PowerFunction& w, double p);
/// Analytic path for a pair of power functions; throws DomainError when the
/// combined exponent is <= -1.
double weighted_lp_norm(const PowerFunction& f, const PowerFunction& w, double p);
double lp_norm(const MeshFunction& f, double p);

}  // namespace dyadic
