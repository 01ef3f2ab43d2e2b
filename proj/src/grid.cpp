#include "dyadic/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dyadic {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

double shift_of(GridId g, int dim, int k) {
  return g.shifted_in(dim) ? shift_sign(k) / 3.0 : 0.0;
}

// Iterates the Cartesian product of per-axis index ranges [lo[d], hi[d]].
void for_each_index(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi,
                    const std::function<void(const std::vector<std::int64_t>&)>& visit) {
  const std::size_t n = lo.size();
  for (std::size_t d = 0; d < n; ++d)
    if (hi[d] < lo[d]) return;
  std::vector<std::int64_t> idx = lo;
  while (true) {
    visit(idx);
    std::size_t d = n;
    while (d > 0) {
      --d;
      if (idx[d] < hi[d]) {
        ++idx[d];
        for (std::size_t e = d + 1; e < n; ++e) idx[e] = lo[e];
        break;
      }
      if (d == 0) return;
    }
    if (n == 0) return;
  }
}

std::optional<DyadicCube> cover_box(const Box& b, GridId alpha, double max_side) {
  double extent = 0.0;
  for (int d = 0; d < b.dim(); ++d) extent = std::max(extent, b.hi[d] - b.lo[d]);
  if (!(extent > 0.0)) throw DomainError("cover of a degenerate box");
  int k = static_cast<int>(std::floor(-std::log2(extent)));
  while (std::ldexp(1.0, -k) < extent) --k;
  while (std::ldexp(1.0, -k - 1) >= extent) ++k;
  for (; std::ldexp(1.0, -k) <= max_side; --k) {
    DyadicCube p = DyadicCube::containing(alpha, k, b.lo);
    if (p.box().contains(b)) return p;
  }
  return std::nullopt;
}

}  // namespace

double Box::measure() const {
  double m = 1.0;
  for (int d = 0; d < dim(); ++d) m *= std::max(0.0, hi[d] - lo[d]);
  return m;
}

bool Box::contains(const Box& o) const {
  for (int d = 0; d < dim(); ++d)
    if (o.lo[d] < lo[d] || o.hi[d] > hi[d]) return false;
  return true;
}

std::optional<Box> Box::intersect(const Box& o) const {
  Box r{lo, hi};
  for (int d = 0; d < dim(); ++d) {
    r.lo[d] = std::max(lo[d], o.lo[d]);
    r.hi[d] = std::min(hi[d], o.hi[d]);
    if (!(r.lo[d] < r.hi[d])) return std::nullopt;
  }
  return r;
}

double Box::side() const {
  const double s = hi[0] - lo[0];
  for (int d = 1; d < dim(); ++d)
    if (std::abs(hi[d] - lo[d] - s) > 1e-12 * s) throw DomainError("box is not a cube");
  return s;
}

Box Box::cube(std::vector<double> lo, double side) {
  std::vector<double> hi = lo;
  for (double& h : hi) h += side;
  return Box{std::move(lo), std::move(hi)};
}

double DyadicCube::side() const { return std::ldexp(1.0, -k); }

double DyadicCube::measure() const { return std::ldexp(1.0, -k * dim()); }

Box DyadicCube::box() const {
  Box b;
  b.lo.resize(j.size());
  b.hi.resize(j.size());
  for (int d = 0; d < dim(); ++d) {
    // (3j + b)/3 is rounded once, so a corner shared by cubes of different
    // scales gets the same double.
    const double b3 = grid.shifted_in(d) ? shift_sign(k) : 0.0;
    b.lo[d] = std::ldexp((3.0 * static_cast<double>(j[d]) + b3) / 3.0, -k);
    b.hi[d] = std::ldexp((3.0 * static_cast<double>(j[d] + 1) + b3) / 3.0, -k);
  }
  return b;
}

DyadicCube DyadicCube::parent() const {
  DyadicCube p{grid, k - 1, j};
  const int s = shift_sign(k);
  for (int d = 0; d < dim(); ++d) {
    const std::int64_t b = grid.shifted_in(d) ? s : 0;
    p.j[d] = floor_div(j[d] + b, 2);
  }
  return p;
}

std::vector<DyadicCube> DyadicCube::children() const {
  const int n = dim();
  const int s = shift_sign(k + 1);
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    DyadicCube c{grid, k + 1, j};
    for (int d = 0; d < n; ++d) {
      const std::int64_t b = grid.shifted_in(d) ? s : 0;
      const std::int64_t bit = (mask >> (n - 1 - d)) & 1u;
      c.j[d] = 2 * j[d] + bit - b;
    }
    out.push_back(std::move(c));
  }
  return out;
}

DyadicCube DyadicCube::ancestor(int level) const {
  if (level > k) throw DomainError("ancestor level below the cube");
  DyadicCube a = *this;
  while (a.k > level) a = a.parent();
  return a;
}

bool DyadicCube::contains(const DyadicCube& o) const {
  if (o.grid != grid || o.k < k || o.dim() != dim()) return false;
  return o.ancestor(k) == *this;
}

DyadicCube DyadicCube::containing(GridId grid, int k, const std::vector<double>& x) {
  DyadicCube q{grid, k, std::vector<std::int64_t>(x.size())};
  for (std::size_t d = 0; d < x.size(); ++d) {
    const double t = shift_of(grid, static_cast<int>(d), k);
    q.j[d] = static_cast<std::int64_t>(std::floor(std::ldexp(x[d], k) - t));
  }
  return q;
}

std::string DyadicCube::to_string() const {
  std::ostringstream os;
  os << "grid=" << grid.alpha << " k=" << k << " j=(";
  for (int d = 0; d < dim(); ++d) os << (d ? "," : "") << j[d];
  os << ")";
  return os.str();
}

std::int64_t corner_units(int k, std::int64_t j, bool shifted, int level) {
  if (level < k) throw DomainError("corner_units: level finer than the mesh");
  const std::int64_t scale = std::int64_t{1} << (level - k);
  const std::int64_t b = shifted ? shift_sign(k) : 0;
  return scale * (3 * j + b);
}

double DomainBox::side() const { return std::ldexp(1.0, K); }
double DomainBox::measure() const { return std::ldexp(1.0, K * n); }

Box DomainBox::box() const {
  return Box{std::vector<double>(n, 0.0), std::vector<double>(n, side())};
}

bool DomainBox::contains(const Box& b) const { return box().contains(b); }
bool DomainBox::contains(const DyadicCube& q) const { return contains(q.box()); }

CubePolicy CubePolicy::all_grids(const DomainBox& d, int kmax) {
  CubePolicy p;
  for (unsigned a = 0; a < GridId::count(d.n); ++a) p.grids.push_back(GridId{a});
  p.kmin = -d.K;
  p.kmax = kmax;
  return p;
}

CubePolicy CubePolicy::standard(const DomainBox& d, int kmax) {
  return CubePolicy{{GridId{0}}, -d.K, kmax};
}

std::string CubePolicy::describe() const {
  std::ostringstream os;
  os << "grids=";
  for (std::size_t i = 0; i < grids.size(); ++i) os << (i ? "," : "") << grids[i].alpha;
  os << ";kmin=" << kmin << ";kmax=" << kmax;
  return os.str();
}

void for_each_cube_at(GridId grid, int k, const DomainBox& domain,
                      const std::function<void(const DyadicCube&)>& visit) {
  if (k + domain.K < 0) return;
  const std::int64_t cells = std::int64_t{1} << (k + domain.K);
  std::vector<std::int64_t> lo(domain.n), hi(domain.n);
  for (int d = 0; d < domain.n; ++d) {
    const int sb = grid.shifted_in(d) ? shift_sign(k) : 0;
    lo[d] = (sb == -1) ? 1 : 0;
    hi[d] = (sb == 1) ? cells - 2 : cells - 1;
  }
  DyadicCube q{grid, k, {}};
  for_each_index(lo, hi, [&](const std::vector<std::int64_t>& j) {
    q.j = j;
    visit(q);
  });
}

void for_each_cube(const CubePolicy& policy, const DomainBox& domain,
                   const std::function<void(const DyadicCube&)>& visit) {
  for (GridId g : policy.grids)
    for (int k = policy.kmin; k <= policy.kmax; ++k) for_each_cube_at(g, k, domain, visit);
}

std::size_t count_cubes(const CubePolicy& policy, const DomainBox& domain) {
  std::size_t c = 0;
  for_each_cube(policy, domain, [&](const DyadicCube&) { ++c; });
  return c;
}

std::optional<DyadicCube> shifted_cover(const Box& q, GridId alpha) {
  const double side = q.side();
  if (!(side > 0.0)) throw DomainError("shifted_cover: cube has zero side");
  return cover_box(q, alpha, 6.0 * side);
}

Box clipped_dilate(const Box& q, int l, const DomainBox& domain) {
  Box out = q;
  const double factor = std::ldexp(1.0, l);
  for (int d = 0; d < q.dim(); ++d) {
    const double c = 0.5 * (q.lo[d] + q.hi[d]);
    const double h = 0.5 * (q.hi[d] - q.lo[d]) * factor;
    out.lo[d] = std::max(0.0, c - h);
    out.hi[d] = std::min(domain.side(), c + h);
  }
  return out;
}

DilatedCover dilated_cover(const DyadicCube& q, int l, GridId alpha, const DomainBox& domain) {
  if (l < 0) throw DomainError("dilated_cover: negative dilation exponent");
  const Box b = q.box();
  if (!domain.contains(b)) throw DomainError("out-of-domain: cube " + q.to_string());
  DilatedCover out{clipped_dilate(b, l, domain), std::nullopt};
  out.cover = cover_box(out.dilate, alpha, 6.0 * std::ldexp(q.side(), l));
  return out;
}

}  // namespace dyadic
