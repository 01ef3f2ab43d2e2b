#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "dyadic/maximal.hpp"
#include "dyadic/oscillation.hpp"
#include "dyadic/sparse.hpp"

namespace dyadic {

namespace {

double product_average(std::span<const MeshFunction> fs, const Box& b) {
  double p = 1.0;
  for (const auto& f : fs) p *= f.average(b);
  return p;
}

void require_mesh(std::span<const MeshFunction> fs, const SparseFamily& s) {
  for (const auto& f : fs)
    if (!(f.domain() == s.domain)) throw DomainError("mismatched domains: family and input differ");
}

Box bounding_box(std::span<const BoxTerm> terms, Box start) {
  for (const auto& t : terms)
    for (int d = 0; d < start.dim(); ++d) {
      start.lo[d] = std::min(start.lo[d], t.box.lo[d]);
      start.hi[d] = std::max(start.hi[d], t.box.hi[d]);
    }
  return start;
}

}  // namespace

MeshFunction project_terms(std::span<const BoxTerm> terms, const MeshFunction& shape) {
  const int n = shape.dim();
  const int L = shape.level();
  const std::int64_t N = shape.cells_per_axis();
  const double h = shape.cell_side();
  std::vector<long double> acc(shape.size(), 0.0L);
  std::vector<std::int64_t> lo(n), hi(n);
  for (const auto& t : terms) {
    bool empty = false;
    for (int d = 0; d < n; ++d) {
      lo[d] = std::max<std::int64_t>(static_cast<std::int64_t>(std::floor(std::ldexp(t.box.lo[d], L))), 0);
      hi[d] = std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(std::ldexp(t.box.hi[d], L))), N) - 1;
      if (hi[d] < lo[d]) empty = true;
    }
    if (empty) continue;
    detail::for_each_in_range(lo, hi, [&](const std::vector<std::int64_t>& c) {
      double frac = 1.0;
      for (int d = 0; d < n; ++d) {
        const double a = std::max(t.box.lo[d], c[d] * h);
        const double b = std::min(t.box.hi[d], (c[d] + 1) * h);
        frac *= std::max(0.0, b - a) / h;
      }
      if (frac > 0.0) acc[shape.cell_index(c)] += static_cast<long double>(t.value) * frac;
    });
  }
  std::vector<double> v(acc.begin(), acc.end());
  return MeshFunction(shape.domain(), L, std::move(v));
}

std::vector<Atom> term_distribution(std::span<const BoxTerm> terms, const Box& region) {
  const int n = region.dim();
  std::vector<std::vector<double>> cuts(n);
  for (int d = 0; d < n; ++d) cuts[d] = {region.lo[d], region.hi[d]};
  std::vector<BoxTerm> clipped;
  for (const auto& t : terms) {
    const auto b = t.box.intersect(region);
    if (!b || t.value == 0.0) continue;
    for (int d = 0; d < n; ++d) {
      cuts[d].push_back(b->lo[d]);
      cuts[d].push_back(b->hi[d]);
    }
    clipped.push_back(BoxTerm{*b, t.value});
  }
  std::vector<std::int64_t> ext(n);
  std::size_t count = 1;
  for (int d = 0; d < n; ++d) {
    std::sort(cuts[d].begin(), cuts[d].end());
    cuts[d].erase(std::unique(cuts[d].begin(), cuts[d].end()), cuts[d].end());
    ext[d] = static_cast<std::int64_t>(cuts[d].size()) - 1;
    count *= static_cast<std::size_t>(ext[d]);
  }
  // n-dimensional difference array over the compressed cells, one slot of
  // padding per axis.
  std::vector<std::int64_t> pad(n);
  std::size_t padded = 1;
  for (int d = 0; d < n; ++d) {
    pad[d] = ext[d] + 1;
    padded *= static_cast<std::size_t>(pad[d]);
  }
  std::vector<long double> diff(padded, 0.0L);
  std::vector<std::int64_t> a(n), b(n), c(n);
  for (const auto& t : clipped) {
    for (int d = 0; d < n; ++d) {
      a[d] = std::lower_bound(cuts[d].begin(), cuts[d].end(), t.box.lo[d]) - cuts[d].begin();
      b[d] = std::lower_bound(cuts[d].begin(), cuts[d].end(), t.box.hi[d]) - cuts[d].begin();
    }
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
      std::size_t idx = 0;
      int sign = 1;
      for (int d = 0; d < n; ++d) {
        const bool up = (mask >> d) & 1u;
        idx = idx * pad[d] + static_cast<std::size_t>(up ? b[d] : a[d]);
        if (up) sign = -sign;
      }
      diff[idx] += sign * static_cast<long double>(t.value);
    }
  }
  std::size_t stride = 1;
  for (int d = n - 1; d >= 0; --d) {
    for (std::size_t i = 0; i < padded; ++i)
      if ((i / stride) % pad[d] > 0) diff[i] += diff[i - stride];
    stride *= pad[d];
  }
  std::vector<Atom> out;
  out.reserve(count);
  std::fill(c.begin(), c.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t rest = i;
    for (int d = n - 1; d >= 0; --d) {
      c[d] = static_cast<std::int64_t>(rest % ext[d]);
      rest /= ext[d];
    }
    std::size_t idx = 0;
    double mu = 1.0;
    for (int d = 0; d < n; ++d) {
      idx = idx * pad[d] + static_cast<std::size_t>(c[d]);
      mu *= cuts[d][c[d] + 1] - cuts[d][c[d]];
    }
    out.push_back(Atom{static_cast<double>(diff[idx]), mu});
  }
  return out;
}

std::vector<BoxTerm> sparse_terms(const SparseFamily& s, std::span<const MeshFunction> fs) {
  require_mesh(fs, s);
  std::vector<BoxTerm> out;
  for (const auto& q : s.cubes()) {
    const Box b = q.box();
    out.push_back(BoxTerm{b, product_average(fs, b)});
  }
  return out;
}

MeshFunction sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs) {
  if (fs.empty()) throw DomainError("sparse operator needs at least one function");
  const auto t = sparse_terms(s, fs);
  return project_terms(t, fs[0]);
}

std::vector<BoxTerm> dilated_terms(const SparseFamily& s, std::span<const MeshFunction> fs, int l) {
  require_mesh(fs, s);
  if (l < 0) throw DomainError("negative dilation exponent");
  std::vector<BoxTerm> out;
  for (const auto& q : s.cubes()) {
    const Box b = q.box();
    if (!s.domain.contains(b)) throw DomainError("out-of-domain: cube " + q.to_string());
    out.push_back(BoxTerm{b, product_average(fs, clipped_dilate(b, l, s.domain))});
  }
  return out;
}

MeshFunction dilated_sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs, int l) {
  if (fs.empty()) throw DomainError("sparse operator needs at least one function");
  const auto t = dilated_terms(s, fs, l);
  return project_terms(t, fs[0]);
}

std::vector<CoveredCube> cover_partition(const SparseFamily& s, int l) {
  std::vector<CoveredCube> out;
  for (const auto& q : s.cubes()) {
    bool found = false;
    for (unsigned a = 0; a < GridId::count(s.domain.n) && !found; ++a) {
      const auto c = dilated_cover(q, l, GridId{a}, s.domain);
      if (c.cover) {
        out.push_back(CoveredCube{q, GridId{a}, *c.cover});
        found = true;
      }
    }
    if (!found) throw DomainError("no-cover: no grid covers the dilate of " + q.to_string());
  }
  return out;
}

std::vector<BoxTerm> covered_terms(std::span<const CoveredCube> part, GridId alpha,
                                   std::span<const MeshFunction> fs) {
  std::vector<BoxTerm> out;
  for (const auto& c : part)
    if (c.alpha == alpha) out.push_back(BoxTerm{c.q.box(), product_average(fs, c.cover.box())});
  return out;
}

MeshFunction covered_sparse_apply(const SparseFamily& s, std::span<const MeshFunction> fs, int l) {
  if (fs.empty()) throw DomainError("sparse operator needs at least one function");
  require_mesh(fs, s);
  const auto part = cover_partition(s, l);
  std::vector<BoxTerm> all;
  for (unsigned a = 0; a < GridId::count(s.domain.n); ++a) {
    auto t = covered_terms(part, GridId{a}, fs);
    all.insert(all.end(), t.begin(), t.end());
  }
  return project_terms(all, fs[0]);
}

std::vector<BoxTerm> aux_form_terms(std::span<const CoveredCube> part, GridId alpha,
                                    std::span<const MeshFunction> fs_head, const MeshFunction& g) {
  std::vector<BoxTerm> out;
  for (const auto& c : part) {
    if (c.alpha != alpha) continue;
    const Box p = c.cover.box();
    const double v = product_average(fs_head, p) * g.integral(c.q.box()) / p.measure();
    out.push_back(BoxTerm{p, v});
  }
  return out;
}

MeshFunction aux_form_apply(const SparseFamily& s, std::span<const MeshFunction> fs_head,
                            const MeshFunction& g, int l, GridId alpha) {
  require_mesh(fs_head, s);
  const MeshFunction gs[] = {g};
  require_mesh(gs, s);
  const auto part = cover_partition(s, l);
  const auto t = aux_form_terms(part, alpha, fs_head, g);
  return project_terms(t, g);
}

DualityReport duality_check(const SparseFamily& s, std::span<const MeshFunction> fs,
                            const MeshFunction& g, int l, GridId alpha) {
  if (fs.empty()) throw DomainError("duality needs at least one function");
  require_mesh(fs, s);
  for (const auto& f : fs)
    if (!f.same_mesh(g)) throw DomainError("mismatched domains: inputs live on different meshes");
  const auto part = cover_partition(s, l);
  const auto head = fs.first(fs.size() - 1);
  const MeshFunction& last = fs.back();

  const auto t = project_terms(covered_terms(part, alpha, fs), g);
  const auto m = project_terms(aux_form_terms(part, alpha, head, g), g);
  long double lhs = 0.0L, rhs = 0.0L;
  for (std::size_t i = 0; i < g.size(); ++i) {
    lhs += static_cast<long double>(t[i]) * g[i];
    rhs += static_cast<long double>(m[i]) * last[i];
  }
  DualityReport rep;
  rep.lhs = static_cast<double>(lhs * g.cell_measure());
  rep.rhs = static_cast<double>(rhs * g.cell_measure());
  const double scale = std::max(std::abs(rep.lhs), std::abs(rep.rhs));
  rep.relative_error = scale == 0.0 ? 0.0 : std::abs(rep.lhs - rep.rhs) / scale;
  for (const auto& c : part)
    if (c.alpha == alpha) ++rep.cubes;
  rep.pass = rep.relative_error <= 1e-10;
  return rep;
}

std::vector<BoxTerm> shifted_avg_terms(std::span<const CoveredCube> part, GridId alpha,
                                       const MeshFunction& g) {
  return aux_form_terms(part, alpha, {}, g);
}

MeshFunction shifted_avg_apply(const SparseFamily& s, const MeshFunction& g, int l, GridId alpha) {
  return aux_form_apply(s, {}, g, l, alpha);
}

WeakProfile weak_l1_profile(std::span<const Atom> dist, double norm) {
  WeakProfile out;
  if (!(norm > 0.0)) return out;
  out.defined = true;
  std::vector<Atom> a(dist.begin(), dist.end());
  std::sort(a.begin(), a.end(), [](const Atom& x, const Atom& y) { return x.value > y.value; });
  long double cum = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i].value > 0.0)) break;
    cum += a[i].measure;
    if (i + 1 < a.size() && a[i + 1].value == a[i].value) continue;
    out.value = std::max(out.value, static_cast<double>(a[i].value * cum));
  }
  out.value /= norm;
  return out;
}

WeakProfile shifted_avg_profile(const SparseFamily& s, const MeshFunction& g, int l,
                                GridId alpha) {
  const auto part = cover_partition(s, l);
  const auto terms = shifted_avg_terms(part, alpha, g);
  const auto region = bounding_box(terms, s.domain.box());
  long double norm = 0.0L;
  for (double v : g.values()) norm += std::abs(v);
  return weak_l1_profile(term_distribution(terms, region), static_cast<double>(norm * g.cell_measure()));
}

Lemma42Report lemma42_probe(const SparseFamily& s, std::span<const MeshFunction> fs_head,
                            const MeshFunction& g, int l, GridId alpha, const DyadicCube& q,
                            double lambda) {
  if (q.grid != alpha) throw DomainError("probe cube must belong to grid alpha");
  const Box qb = q.box();
  if (!s.domain.contains(qb)) throw DomainError("out-of-domain: cube " + q.to_string());
  require_mesh(fs_head, s);
  const auto part = cover_partition(s, l);
  const auto terms = aux_form_terms(part, alpha, fs_head, g);
  Lemma42Report rep;
  rep.l = l;
  rep.lhs = local_oscillation(term_distribution(terms, qb), lambda);
  rep.g_avg = g.average(qb);
  for (const auto& f : fs_head) rep.f_product *= f.average(qb);
  const double rhs = std::max(l, 1) * rep.g_avg * rep.f_product;
  if (rhs > 0.0) rep.c_hat = rep.lhs / rhs;
  else rep.unbounded = rep.lhs > 0.0;
  return rep;
}

DominationReport domination_check(std::span<const MeshFunction> fs, const CubePolicy& policy) {
  if (fs.empty()) throw DomainError("domination needs at least one function");
  const int n = fs[0].dim();
  const int m = static_cast<int>(fs.size());
  DominationReport rep;
  rep.bound = std::pow(2.0 * std::pow(12.0, n), m);
  const auto lhs = multilinear_maximal(fs, policy).lower;
  std::vector<double> rhs(fs[0].size(), 0.0);
  const CubePolicy build{{}, policy.kmin, fs[0].level()};
  for (unsigned a = 0; a < GridId::count(n); ++a) {
    const auto fam = build_cz_sparse(fs, GridId{a}, build);
    rep.family_sizes.push_back(fam.size());
    const auto v = sparse_apply(fam, fs);
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] += v[i];
  }
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    double r = 0.0;
    if (lhs[i] > 0.0) r = rhs[i] > 0.0 ? lhs[i] / rhs[i] : std::numeric_limits<double>::infinity();
    if (r > rep.max_ratio || !rep.witness_cell) {
      if (r >= rep.max_ratio) rep.witness_cell = i;
      rep.max_ratio = std::max(rep.max_ratio, r);
    }
  }
  rep.pass = rep.max_ratio <= rep.bound * (1.0 + 1e-12);
  return rep;
}

}  // namespace dyadic
