#include "dyadic/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"

namespace dyadic {

namespace {

void require_common_mesh(std::span<const MeshFunction> fs) {
  if (fs.empty()) throw DomainError("maximal operator needs at least one function");
  for (const auto& f : fs)
    if (!f.same_mesh(fs[0])) throw DomainError("mismatched domains: inputs live on different meshes");
}

std::vector<Box> split(const Box& b) {
  const int n = b.dim();
  std::vector<Box> out;
  out.reserve(std::size_t{1} << n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Box c = b;
    for (int d = 0; d < n; ++d) {
      const double mid = 0.5 * (b.lo[d] + b.hi[d]);
      if ((mask >> (n - 1 - d)) & 1u) c.lo[d] = mid;
      else c.hi[d] = mid;
    }
    out.push_back(std::move(c));
  }
  return out;
}

struct Leaf {
  double local_max;
  double weight_mass;
};

template <typename Value>
void descend(const Box& b, int depth, double running, const Value& value, std::vector<Leaf>& leaves,
             const std::function<double(const Box&)>& weight_mass) {
  running = std::max(running, value(b));
  if (depth == 0) {
    leaves.push_back(Leaf{running, weight_mass(b)});
    return;
  }
  for (const Box& c : split(b)) descend(c, depth - 1, running, value, leaves, weight_mass);
}

// 1 - 2^{-x} without cancellation for small x.
double one_minus_pow2_neg(double x) { return -std::expm1(-x * std::log(2.0)); }

}  // namespace

MeshFunction cell_maximum(const DomainBox& domain, int level, std::span<const GridId> grids,
                          int kmin, int kmax,
                          const std::function<double(const DyadicCube&)>& cube_value,
                          double floor_value) {
  MeshFunction shape = MeshFunction::constant(domain, level, 0.0);
  std::vector<double> best(shape.size(), -std::numeric_limits<double>::infinity());
  const std::int64_t N = shape.cells_per_axis();
  std::vector<std::int64_t> lo, hi;
  for (GridId g : grids) {
    for (int k = kmin; k <= std::min(kmax, level); ++k) {
      for_each_cube_at(g, k, domain, [&](const DyadicCube& q) {
        if (!detail::cells_inside(q, level, N, lo, hi)) return;
        const double v = cube_value(q);
        detail::for_each_in_range(lo, hi, [&](const std::vector<std::int64_t>& c) {
          double& slot = best[shape.cell_index(c)];
          slot = std::max(slot, v);
        });
      });
    }
  }
  for (double& v : best)
    if (v == -std::numeric_limits<double>::infinity()) v = floor_value;
  return MeshFunction(domain, level, std::move(best));
}

double product_of_averages(std::span<const MeshFunction> fs, const Box& q) {
  double p = 1.0;
  for (const auto& f : fs) p *= f.average(q);
  return p;
}

MaximalResult dyadic_multilinear_maximal(std::span<const MeshFunction> fs, GridId alpha,
                                         const CubePolicy& policy) {
  require_common_mesh(fs);
  const auto& f0 = fs[0];
  const GridId grids[] = {alpha};
  auto values = cell_maximum(f0.domain(), f0.level(), grids, policy.kmin, policy.kmax,
                             [&](const DyadicCube& q) { return product_of_averages(fs, q.box()); });
  CubePolicy used{{alpha}, policy.kmin, policy.kmax};
  return MaximalResult{std::move(values), used};
}

CombinedMaximal multilinear_maximal(std::span<const MeshFunction> fs, const CubePolicy& policy) {
  require_common_mesh(fs);
  if (policy.grids.empty()) throw DomainError("empty grid set");
  CombinedMaximal out;
  out.policy = policy;
  const int m = static_cast<int>(fs.size());
  const int n = fs[0].dim();
  const double factor = std::pow(6.0, m * n);
  std::vector<double> lower(fs[0].size(), 0.0), env(fs[0].size(), 0.0);
  for (GridId g : policy.grids) {
    auto r = dyadic_multilinear_maximal(fs, g, policy);
    for (std::size_t i = 0; i < lower.size(); ++i) {
      lower[i] = std::max(lower[i], r.values[i]);
      env[i] += factor * r.values[i];
    }
    out.per_grid.push_back(std::move(r.values));
  }
  out.lower = MeshFunction(fs[0].domain(), fs[0].level(), std::move(lower));
  out.envelope = MeshFunction(fs[0].domain(), fs[0].level(), std::move(env));
  return out;
}

MaximalResult weighted_dyadic_maximal(const MeshFunction& f, const MeshFunction& sigma,
                                      GridId alpha, const CubePolicy& policy) {
  const MeshFunction fs[] = {f};
  const MeshFunction ss[] = {sigma};
  return multilinear_weighted_maximal(fs, ss, alpha, policy);
}

MaximalResult multilinear_weighted_maximal(std::span<const MeshFunction> fs,
                                           std::span<const MeshFunction> sigmas, GridId alpha,
                                           const CubePolicy& policy) {
  require_common_mesh(fs);
  if (sigmas.size() != fs.size()) throw DomainError("one weight per function required");
  for (const auto& s : sigmas) {
    if (!s.same_mesh(fs[0])) throw DomainError("mismatched domains: weight mesh differs");
    if (!s.all_positive()) throw DomainError("weights must be strictly positive");
  }
  const GridId grids[] = {alpha};
  auto values = cell_maximum(fs[0].domain(), fs[0].level(), grids, policy.kmin, policy.kmax,
                             [&](const DyadicCube& q) {
                               const Box b = q.box();
                               double p = 1.0;
                               for (std::size_t i = 0; i < fs.size(); ++i)
                                 p *= fs[i].integral(b) / sigmas[i].integral(b);
                               return p;
                             });
  return MaximalResult{std::move(values), CubePolicy{{alpha}, policy.kmin, policy.kmax}};
}

double power_average(const MeshFunction& f, double s, const Box& q) {
  if (!(s >= 1.0)) throw DomainError("power average requires s >= 1");
  const MeshFunction g = f.map([s](double v) { return std::pow(std::abs(v), s); });
  return std::pow(g.average(q), 1.0 / s);
}

MaximalResult power_maximal(const MeshFunction& f, double s, const CubePolicy& policy) {
  if (!(s >= 1.0)) throw DomainError("power average requires s >= 1");
  const MeshFunction g = f.map([s](double v) { return std::pow(std::abs(v), s); });
  auto values = cell_maximum(f.domain(), f.level(), policy.grids, policy.kmin, policy.kmax,
                             [&](const DyadicCube& q) {
                               return std::pow(g.average(q.box()), 1.0 / s);
                             });
  return MaximalResult{std::move(values), policy};
}

double FactorizationSides::relative_error() const {
  const double scale = std::max(std::abs(product_of_averages), std::abs(factored));
  return scale == 0.0 ? 0.0 : std::abs(product_of_averages - factored) / scale;
}

FactorizationSides factorization_sides(std::span<const MeshFunction> fs, const MeshFunction& nu,
                                       std::span<const MeshFunction> sigmas, double r,
                                       const Box& q) {
  if (!(r > 1.0)) throw DomainError("factorization requires r > 1");
  if (sigmas.size() != fs.size()) throw DomainError("one dual weight per function required");
  const double m = static_cast<double>(fs.size());
  const double mu = q.measure();
  const double e = (r - 1.0) / m;
  double avg_sigma_prod = 1.0;
  double ratio_prod = 1.0;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const double sq = sigmas[i].integral(q);
    avg_sigma_prod *= std::pow(sq / mu, e);
    ratio_prod *= fs[i].integral(q) / sq;
  }
  const double a_cube = nu.average(q) * avg_sigma_prod;
  const double inner = (mu / nu.integral(q)) * std::pow(ratio_prod, e);
  FactorizationSides out;
  out.product_of_averages = product_of_averages(fs, q);
  out.factored = std::pow(a_cube, 1.0 / e) * std::pow(inner, 1.0 / e);
  return out;
}

double power_maximal_integral(std::span<const PowerFunction> fs, const PowerFunction& weight,
                              double q, double h, int sublevels) {
  if (fs.empty()) throw DomainError("maximal operator needs at least one function");
  if (!(h > 0.0) || !(q > 0.0) || sublevels < 0) throw DomainError("invalid shell parameters");
  double homogeneity = 0.0;
  for (const auto& f : fs) {
    homogeneity += f.exponent;
    if (h > std::ldexp(1.0, f.K)) throw DomainError("cube [0,h) leaves the support");
  }
  if (h > std::ldexp(1.0, weight.K)) throw DomainError("cube [0,h) leaves the weight support");
  const double wexp = weight.exponent + 1.0;

  auto product_avg = [&](const Box& b) {
    double p = 1.0;
    for (const auto& f : fs) p *= f.average(b);
    return p;
  };
  const double top = product_avg(Box{{0.0}, {h}});
  std::vector<Leaf> leaves;
  descend(Box{{0.5 * h}, {h}}, sublevels, 0.0, product_avg, leaves,
          [&](const Box& b) { return weight.integral(b); });

  auto shell_integral = [&](double anchor, double local_scale) {
    long double acc = 0.0L;
    for (const Leaf& l : leaves)
      acc += std::pow(std::max(anchor, local_scale * l.local_max), q) * l.weight_mass;
    return static_cast<double>(acc);
  };

  if (homogeneity < 0.0) {
    // Shell i is the dilate of shell 0 with every maximal value scaled by
    // 2^{-iB} and weight mass scaled by 2^{-i(a+1)}.
    const double rate = homogeneity * q + wexp;
    if (!(rate > 0.0)) throw DomainError("divergent: shell series does not converge");
    return shell_integral(top, 1.0) / one_minus_pow2_neg(rate);
  }
  if (homogeneity == 0.0) return shell_integral(top, 1.0) / one_minus_pow2_neg(wexp);

  // B > 0: the anchor G(h) dominates every shell once 2^{-iB} max(local) <= G(h).
  double local_peak = 0.0;
  double mass = 0.0;
  for (const Leaf& l : leaves) {
    local_peak = std::max(local_peak, l.local_max);
    mass += l.weight_mass;
  }
  long double acc = 0.0L;
  int i = 0;
  for (; i < 100000; ++i) {
    const double scale = std::exp2(-i * homogeneity);
    if (scale * local_peak <= top) break;
    acc += std::exp2(-i * wexp) * shell_integral(top, scale);
  }
  acc += std::pow(top, q) * mass * std::exp2(-i * wexp) / one_minus_pow2_neg(wexp);
  return static_cast<double>(acc);
}

double local_maximal_integral(std::span<const Density> fs, const Density& weight, double q,
                              const Box& cube, int sublevels) {
  if (fs.empty()) throw DomainError("maximal operator needs at least one function");
  std::vector<Leaf> leaves;
  descend(
      cube, sublevels, 0.0,
      [&](const Box& b) {
        double p = 1.0;
        for (const auto& f : fs) p *= average(f, b);
        return p;
      },
      leaves, [&](const Box& b) { return integral(weight, b); });
  long double acc = 0.0L;
  for (const Leaf& l : leaves) acc += std::pow(l.local_max, q) * l.weight_mass;
  return static_cast<double>(acc);
}

}  // namespace dyadic
