#include "dyadic/oscillation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "dyadic/sparse.hpp"

namespace dyadic {

namespace {

std::vector<Atom> merged_sorted(std::span<const Atom> atoms) {
  std::vector<Atom> a;
  a.reserve(atoms.size());
  for (const Atom& x : atoms)
    if (x.measure > 0.0) a.push_back(x);
  std::sort(a.begin(), a.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });
  std::vector<Atom> out;
  for (const Atom& x : a) {
    if (!out.empty() && out.back().value == x.value) out.back().measure += x.measure;
    else out.push_back(x);
  }
  return out;
}

double total_measure(std::span<const Atom> a) {
  long double s = 0.0L;
  for (const Atom& x : a) s += x.measure;
  return static_cast<double>(s);
}

void require_in_domain(const MeshFunction& f, const Box& q) {
  if (!f.domain().contains(q)) throw DomainError("cube leaves the domain");
  if (!(q.measure() > 0.0)) throw DomainError("degenerate cube");
}

}  // namespace

double median(std::span<const Atom> atoms) {
  const auto a = merged_sorted(atoms);
  if (a.empty()) throw DomainError("median of an empty distribution");
  const double half = 0.5 * total_measure(a);
  long double below = 0.0L;
  for (const Atom& x : a) {
    below += x.measure;
    if (below > half) return x.value;
  }
  return a.back().value;
}

double median(const MeshFunction& f, const Box& q) {
  require_in_domain(f, q);
  return median(f.atoms(q));
}

double local_oscillation(std::span<const Atom> atoms, double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("lambda must lie in (0,1)");
  const auto a = merged_sorted(atoms);
  if (a.empty()) return 0.0;
  const double need = (1.0 - lambda) * total_measure(a);
  double best = std::numeric_limits<double>::infinity();
  long double window = 0.0L;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < a.size(); ++hi) {
    window += a[hi].measure;
    while (lo < hi && window - a[lo].measure >= need) {
      window -= a[lo].measure;
      ++lo;
    }
    if (window >= need) best = std::min(best, 0.5 * (a[hi].value - a[lo].value));
  }
  return best;
}

double local_oscillation(const MeshFunction& f, const Box& q, double lambda) {
  require_in_domain(f, q);
  if (lambda * q.measure() < f.cell_measure())
    throw DomainError("lambda |Q| is below the cell resolution");
  return local_oscillation(f.atoms(q), lambda);
}

int finest_oscillation_level(const MeshFunction& f, double lambda) {
  const int n = f.dim();
  int k = f.level();
  while (k > -f.domain().K && lambda * std::ldexp(1.0, -n * k) < f.cell_measure()) --k;
  return k;
}

MeshFunction local_sharp_maximal(const MeshFunction& f, const DyadicCube& q0, double lambda) {
  if (q0.grid.alpha != 0) throw DomainError("Q0 must be a standard dyadic cube");
  require_in_domain(f, q0.box());
  const int kf = finest_oscillation_level(f, lambda);
  if (q0.k > kf) throw DomainError("lambda |Q0| is below the cell resolution");
  std::vector<double> out(f.size(), 0.0);
  std::vector<std::int64_t> lo, hi;
  std::vector<DyadicCube> layer{q0};
  for (int k = q0.k; k <= kf; ++k) {
    std::vector<DyadicCube> next;
    for (const auto& q : layer) {
      const double w = local_oscillation(f.atoms(q.box()), lambda);
      if (detail::cells_inside(q, f.level(), f.cells_per_axis(), lo, hi))
        detail::for_each_in_range(lo, hi, [&](const std::vector<std::int64_t>& c) {
          double& slot = out[f.cell_index(c)];
          slot = std::max(slot, w);
        });
      if (k < kf)
        for (auto& c : q.children()) next.push_back(std::move(c));
    }
    layer = std::move(next);
  }
  return MeshFunction(f.domain(), f.level(), std::move(out));
}

DecompositionReport decomposition_check(const MeshFunction& f, const DyadicCube& q0,
                                        double lambda) {
  const int n = f.dim();
  if (!(lambda > 0.0)) lambda = std::ldexp(1.0, -(n + 2));
  DecompositionReport rep;
  rep.lambda = lambda;
  const auto sharp = local_sharp_maximal(f, q0, lambda);
  const int kf = finest_oscillation_level(f, lambda);

  std::vector<double> sum(f.size(), 0.0);
  std::vector<std::int64_t> lo, hi;
  auto select = [&](auto&& self, const DyadicCube& q, int gen) -> void {
    rep.family[gen].push_back(q);
    const auto atoms = f.atoms(q.box());
    const double w = local_oscillation(atoms, lambda);
    const double mq = median(atoms);
    if (detail::cells_inside(q, f.level(), f.cells_per_axis(), lo, hi))
      detail::for_each_in_range(lo, hi, [&](const std::vector<std::int64_t>& c) {
        sum[f.cell_index(c)] += w;
      });
    std::vector<DyadicCube> stack;
    if (q.k < kf) stack = q.children();
    std::vector<DyadicCube> picked;
    while (!stack.empty()) {
      DyadicCube c = std::move(stack.back());
      stack.pop_back();
      if (std::abs(median(f.atoms(c.box())) - mq) > 2.0 * w) {
        picked.push_back(std::move(c));
      } else if (c.k < kf) {
        for (auto& ch : c.children()) stack.push_back(std::move(ch));
      }
    }
    std::sort(picked.begin(), picked.end());
    for (const auto& c : picked) self(self, c, gen + 1);
  };
  select(select, q0, 0);
  for (auto& [g, cubes] : rep.family) std::sort(cubes.begin(), cubes.end());

  SparseFamily fam{GridId{0}, f.domain(), f.level(), 0.0, rep.family};
  const auto sr = verify_sparse(fam);
  rep.family_sparse = sr.pass;
  if (!sr.pass) rep.sparse_violation = sr.invariant + ": " + sr.detail;

  rep.median_q0 = median(f, q0.box());
  const double inf = std::numeric_limits<double>::infinity();
  double worst = -1.0;
  if (!detail::cells_inside(q0, f.level(), f.cells_per_axis(), lo, hi)) return rep;
  detail::for_each_in_range(lo, hi, [&](const std::vector<std::int64_t>& c) {
    const std::size_t i = f.cell_index(c);
    const double lhs = std::abs(f[i] - rep.median_q0);
    const double a = sharp[i];
    const double b = sum[i];
    const double rhs = 4.0 * a + 2.0 * b;
    const double ratio = lhs == 0.0 ? 0.0 : (rhs > 0.0 ? lhs / rhs : inf);
    rep.scale = std::max(rep.scale, ratio);
    if (lhs > 2.0 * b) rep.c1_min = std::max(rep.c1_min, a > 0.0 ? (lhs - 2.0 * b) / a : inf);
    if (lhs > 4.0 * a) rep.c2_min = std::max(rep.c2_min, b > 0.0 ? (lhs - 4.0 * a) / b : inf);
    if (ratio > worst) {
      worst = ratio;
      rep.witness_cell = i;
      rep.witness_lhs = lhs;
      rep.witness_sharp = a;
      rep.witness_sum = b;
    }
  });
  rep.pass = rep.family_sparse && rep.scale <= 1.0 + 1e-12;
  return rep;
}

}  // namespace dyadic
