#include "dyadic/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "dyadic/maximal.hpp"

namespace dyadic {

namespace {

template <typename Fn>
ConstantReport sup_over(const std::string& name, const CubePolicy& policy, const DomainBox& domain,
                        Fn&& value) {
  ConstantReport out;
  out.name = name;
  out.policy = policy.describe();
  bool any = false;
  for_each_cube(policy, domain, [&](const DyadicCube& q) {
    const double v = value(q);
    if (!any || v > out.value) {
      out.value = v;
      out.attained = q;
    }
    any = true;
  });
  if (!any) throw DomainError("empty policy: no cubes inside the domain");
  return out;
}

bool is_mesh(const Density& d) { return std::holds_alternative<MeshFunction>(d); }

void require_positive(const Density& d) {
  if (const auto* m = std::get_if<MeshFunction>(&d))
    if (!m->all_positive()) throw DomainError("weights must be strictly positive");
}

// Largest r with (avg_Q w^r)^{1/r} <= 2 avg_Q w, capped at `cap`.
double rh_threshold(std::span<const Atom> atoms, double measure, double cap) {
  double vmax = 0.0;
  long double mass = 0.0L;
  for (const Atom& a : atoms) {
    vmax = std::max(vmax, a.value);
    mass += static_cast<long double>(a.value) * a.measure;
  }
  const double avg = static_cast<double>(mass / measure);
  if (vmax <= 2.0 * avg) return cap;
  auto fails = [&](double r) {
    long double s = 0.0L;
    for (const Atom& a : atoms) s += std::pow(a.value / vmax, r) * a.measure;
    return vmax * std::pow(static_cast<double>(s / measure), 1.0 / r) > 2.0 * avg;
  };
  double lo = 1.0, hi = 2.0;
  while (!fails(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi >= cap) return cap;
  }
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (fails(mid) ? hi : lo) = mid;
  }
  return lo;
}

ReverseHolderCube rh_from_atoms(std::span<const Atom> atoms, double measure, double r) {
  double vmax = 0.0;
  long double mass = 0.0L;
  for (const Atom& a : atoms) {
    vmax = std::max(vmax, a.value);
    mass += static_cast<long double>(a.value) * a.measure;
  }
  ReverseHolderCube out;
  out.rhs = 2.0 * static_cast<double>(mass / measure);
  if (vmax == 0.0) return out;
  long double s = 0.0L;
  for (const Atom& a : atoms) s += std::pow(a.value / vmax, r) * a.measure;
  out.lhs = vmax * std::pow(static_cast<double>(s / measure), 1.0 / r);
  return out;
}

}  // namespace

double conjugate(double p) {
  if (!(p > 1.0)) throw DomainError("exponent must exceed 1");
  if (std::isinf(p)) return 1.0;
  return p / (p - 1.0);
}

Density dual_weight(const Density& w, double p_i) {
  require_positive(w);
  return pow(w, 1.0 - conjugate(p_i));
}

WeightSystem WeightSystem::make(std::vector<Density> weights, std::vector<double> exponents) {
  if (weights.empty()) throw DomainError("weight system needs at least one weight");
  if (weights.size() != exponents.size()) throw DomainError("one exponent per weight required");
  const bool mesh = is_mesh(weights[0]);
  for (const auto& w : weights) {
    if (is_mesh(w) != mesh) throw DomainError("weights must share one representation");
    if (mesh && !std::get<MeshFunction>(w).same_mesh(std::get<MeshFunction>(weights[0])))
      throw DomainError("mismatched domains: weights live on different meshes");
    if (!mesh && std::get<PowerFunction>(w).K != std::get<PowerFunction>(weights[0]).K)
      throw DomainError("mismatched domains: power weights differ in support");
    require_positive(w);
  }
  long double inv = 0.0L;
  for (double pi : exponents) {
    if (!(pi > 1.0) || !std::isfinite(pi)) throw DomainError("exponents must lie in (1, inf)");
    inv += 1.0L / pi;
  }
  WeightSystem ws;
  ws.P = std::move(exponents);
  ws.p = static_cast<double>(1.0L / inv);
  ws.w = std::move(weights);
  for (int i = 0; i < ws.m(); ++i) ws.sigma.push_back(dual_weight(ws.w[i], ws.P[i]));
  if (mesh) {
    const auto& w0 = std::get<MeshFunction>(ws.w[0]);
    std::vector<double> nu(w0.size(), 1.0);
    for (int i = 0; i < ws.m(); ++i) {
      const auto& wi = std::get<MeshFunction>(ws.w[i]);
      const double e = ws.p / ws.P[i];
      for (std::size_t c = 0; c < nu.size(); ++c) nu[c] *= std::pow(wi[c], e);
    }
    ws.nu = MeshFunction(w0.domain(), w0.level(), std::move(nu));
  } else {
    PowerFunction nu = std::get<PowerFunction>(ws.w[0]).pow(ws.p / ws.P[0]);
    for (int i = 1; i < ws.m(); ++i) nu = nu * std::get<PowerFunction>(ws.w[i]).pow(ws.p / ws.P[i]);
    ws.nu = nu;
  }
  return ws;
}

double ap_on_cube(const Density& w, const Density& w_dual, double p, const Box& q) {
  return average(w, q) * std::pow(average(w_dual, q), p - 1.0);
}

double apvec_on_cube(const WeightSystem& ws, const Box& q) {
  double v = average(ws.nu, q);
  for (int i = 0; i < ws.m(); ++i)
    v *= std::pow(average(ws.sigma[i], q), ws.p / conjugate(ws.P[i]));
  return v;
}

ConstantReport ap_constant(const Density& w, double p, const CubePolicy& policy) {
  const Density wd = dual_weight(w, p);
  return sup_over("A_p", policy, domain_of(w),
                  [&](const DyadicCube& q) { return ap_on_cube(w, wd, p, q.box()); });
}

ConstantReport apvec_constant(const WeightSystem& ws, const CubePolicy& policy) {
  return sup_over("A_P", policy, ws.domain(),
                  [&](const DyadicCube& q) { return apvec_on_cube(ws, q.box()); });
}

double ainfty_on_cube(const MeshFunction& w, const DyadicCube& q, const CubePolicy& policy) {
  const int L = w.level();
  const std::int64_t N = w.cells_per_axis();
  const int n = w.dim();
  const DomainBox& domain = w.domain();
  const Box qb = q.box();
  const double wq = w.integral(qb);
  if (!(wq > 0.0)) throw DomainError("weight has zero mass on the cube");

  std::vector<std::int64_t> qlo, qhi;
  if (!detail::cells_meeting(q, L, N, qlo, qhi)) return 0.0;
  std::vector<std::int64_t> ext(n);
  std::size_t count = 1;
  for (int d = 0; d < n; ++d) {
    ext[d] = qhi[d] - qlo[d] + 1;
    count *= static_cast<std::size_t>(ext[d]);
  }
  std::vector<double> best(count, 0.0);
  auto local_index = [&](const std::vector<std::int64_t>& c) {
    std::size_t idx = 0;
    for (int d = 0; d < n; ++d) idx = idx * ext[d] + static_cast<std::size_t>(c[d] - qlo[d]);
    return idx;
  };

  std::vector<std::int64_t> rlo(n), rhi(n), clo, chi;
  for (GridId g : policy.grids) {
    for (int k = policy.kmin; k <= std::min(policy.kmax, L); ++k) {
      if (k + domain.K < 0) continue;
      const int fine = std::max({L, q.k, k});
      const std::int64_t S = std::int64_t{1} << (fine - k);
      const std::int64_t qside = std::int64_t{3} << (fine - q.k);
      const std::int64_t cells = std::int64_t{1} << (k + domain.K);
      bool empty = false;
      for (int d = 0; d < n; ++d) {
        const std::int64_t b = g.shifted_in(d) ? shift_sign(k) : 0;
        const std::int64_t a = corner_units(q.k, q.j[d], q.grid.shifted_in(d), fine);
        const std::int64_t lo = detail::floor_div(a - 3 * S - b * S, 3 * S) + 1;
        const std::int64_t hi = detail::ceil_div(a + qside - b * S, 3 * S) - 1;
        rlo[d] = std::max<std::int64_t>(lo, b == -1 ? 1 : 0);
        rhi[d] = std::min<std::int64_t>(hi, b == 1 ? cells - 2 : cells - 1);
        if (rhi[d] < rlo[d]) empty = true;
      }
      if (empty) continue;
      DyadicCube r{g, k, {}};
      detail::for_each_in_range(rlo, rhi, [&](const std::vector<std::int64_t>& j) {
        r.j = j;
        if (!detail::cells_inside(r, L, N, clo, chi)) return;
        const Box rb = r.box();
        const auto overlap = rb.intersect(qb);
        if (!overlap) return;
        const double v = w.integral(*overlap) / rb.measure();
        for (int d = 0; d < n; ++d) {
          clo[d] = std::max(clo[d], qlo[d]);
          chi[d] = std::min(chi[d], qhi[d]);
          if (chi[d] < clo[d]) return;
        }
        detail::for_each_in_range(clo, chi, [&](const std::vector<std::int64_t>& c) {
          double& slot = best[local_index(c)];
          slot = std::max(slot, v);
        });
      });
    }
  }

  long double acc = 0.0L;
  std::vector<std::int64_t> c(n);
  const double h = w.cell_side();
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (best[idx] == 0.0) continue;
    std::size_t rest = idx;
    double overlap = 1.0;
    for (int d = n - 1; d >= 0; --d) {
      c[d] = qlo[d] + static_cast<std::int64_t>(rest % ext[d]);
      rest /= ext[d];
      const double lo = std::max(qb.lo[d], c[d] * h);
      const double hi = std::min(qb.hi[d], (c[d] + 1) * h);
      overlap *= std::max(0.0, hi - lo);
    }
    acc += static_cast<long double>(best[idx]) * overlap;
  }
  return static_cast<double>(acc / wq);
}

ConstantReport ainfty_constant(const Density& w, const CubePolicy& policy, int sublevels) {
  require_positive(w);
  if (const auto* m = std::get_if<MeshFunction>(&w))
    return sup_over("A_inf", policy, m->domain(),
                    [&](const DyadicCube& q) { return ainfty_on_cube(*m, q, policy); });
  const auto& pw = std::get<PowerFunction>(w);
  const PowerFunction lebesgue(1.0, 0.0, pw.K);
  const Density one = lebesgue;
  const Density fs[] = {w};
  const PowerFunction pfs[] = {pw};
  return sup_over("A_inf", policy, pw.domain(), [&](const DyadicCube& q) {
    const Box b = q.box();
    const double mass = pw.integral(b);
    if (q.grid.alpha == 0 && q.j[0] == 0)
      return power_maximal_integral(pfs, lebesgue, 1.0, b.hi[0], sublevels) / mass;
    return local_maximal_integral(fs, one, 1.0, b, sublevels) / mass;
  });
}

double reverse_holder_exponent(double ainfty, int n) {
  if (!(ainfty > 0.0)) throw DomainError("A_inf constant must be positive");
  return 1.0 + 1.0 / (std::ldexp(1.0, 11 + n) * ainfty);
}

ReverseHolderCube reverse_holder_on_cube(const MeshFunction& w, const Box& q, double r) {
  if (!(r >= 1.0)) throw DomainError("reverse Holder exponent must be >= 1");
  const auto atoms = w.atoms(q);
  return rh_from_atoms(atoms, q.measure(), r);
}

ReverseHolderReport reverse_holder_check(const MeshFunction& w, const CubePolicy& policy) {
  if (!w.all_positive()) throw DomainError("weights must be strictly positive");
  ReverseHolderReport out;
  out.ainfty = ainfty_constant(w, policy).value;
  out.r = reverse_holder_exponent(out.ainfty, w.dim());
  const double cap = std::numeric_limits<double>::infinity();
  out.empirical_r_limit = cap;
  bool any = false;
  for_each_cube(policy, w.domain(), [&](const DyadicCube& q) {
    const Box b = q.box();
    const auto atoms = w.atoms(b);
    const auto side = rh_from_atoms(atoms, b.measure(), out.r);
    const double ratio = side.lhs / side.rhs;
    if (!any || ratio > out.worst_ratio) {
      out.worst_ratio = ratio;
      out.worst_cube = q;
    }
    any = true;
    if (side.lhs > side.rhs * (1.0 + kExactSlack)) out.pass = false;
    out.empirical_r_limit = std::min(out.empirical_r_limit, rh_threshold(atoms, b.measure(), 1e6));
  });
  if (!any) throw DomainError("empty policy: no cubes inside the domain");
  if (out.empirical_r_limit >= 1e6) out.empirical_r_limit = cap;
  out.empirical_tau = std::isinf(out.empirical_r_limit)
                          ? 0.0
                          : 1.0 / ((out.empirical_r_limit - 1.0) * out.ainfty);
  if (!out.pass) {
    out.fallback_used = true;
    const double a2 = ap_constant(w, 2.0, policy).value;
    out.fallback_r = reverse_holder_exponent(std::max(a2, out.ainfty), w.dim());
    for_each_cube(policy, w.domain(), [&](const DyadicCube& q) {
      const auto side = reverse_holder_on_cube(w, q.box(), out.fallback_r);
      if (side.lhs > side.rhs * (1.0 + kExactSlack)) out.fallback_pass = false;
    });
  }
  return out;
}

double aq_on_cube(const Density& sigma, double q, const Box& cube) {
  const Density dual = pow(sigma, 1.0 - conjugate(q));
  return ap_on_cube(sigma, dual, q, cube);
}

Lemma31Report lemma31_check(const WeightSystem& ws, int j, const CubePolicy& policy) {
  if (j < 1 || j > ws.m()) throw DomainError("index j out of range");
  Lemma31Report out;
  out.j = j;
  const double pj = conjugate(ws.P[j - 1]);
  const double q = ws.m() * pj;
  const Density& sigma = ws.sigma[j - 1];
  const Density dual = pow(sigma, 1.0 - conjugate(q));
  const double e = pj / ws.p;
  double apvec_max = 0.0;
  for_each_cube(policy, ws.domain(), [&](const DyadicCube& cube) {
    const Box b = cube.box();
    const double lhs = ap_on_cube(sigma, dual, q, b);
    const double a = apvec_on_cube(ws, b);
    const double rhs = std::pow(a, e);
    out.sigma_aq = std::max(out.sigma_aq, lhs);
    apvec_max = std::max(apvec_max, a);
    out.worst_cube_ratio = std::max(out.worst_cube_ratio, lhs / rhs);
    if (lhs > rhs * (1.0 + kExactSlack)) ++out.violations;
    ++out.cubes;
  });
  if (out.cubes == 0) throw DomainError("empty policy: no cubes inside the domain");
  out.apvec_power = std::pow(apvec_max, e);
  return out;
}

}  // namespace dyadic
