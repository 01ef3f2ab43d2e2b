#include <algorithm>
#include <cmath>
#include <limits>

#include "dyadic/experiments.hpp"
#include "dyadic/io.hpp"
#include "dyadic/maximal.hpp"
#include "dyadic/oscillation.hpp"
#include "dyadic/sparse.hpp"
#include "dyadic/weights.hpp"

namespace dyadic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// A∞ of a power weight is scale invariant, so coarse cubes already see the sup.
constexpr int kPowerAinftyLevel = 4;
constexpr int kPowerSublevels = 12;

struct PowerPoint {
  double eps = 0.0;
  double apvec = 0.0;
  std::vector<double> ainfty;
  double norms = 1.0;
  double norms_mesh = 1.0;
  double lhs = 0.0;
};

void require_power_inputs(int m, const std::vector<double>& P, int level) {
  if (m < 1 || static_cast<int>(P.size()) != m) throw DomainError("P must list m exponents");
  for (double p : P)
    if (!(p > 1.0)) throw DomainError("exponents must lie in (1, inf)");
  if (level < 1) throw DomainError("level must be positive");
}

// ∫ f^p w over [0,1) with the first cell analytic and the rest from cell averages.
double mesh_norm_power(const PowerFunction& f, const PowerFunction& w, double p, int level) {
  const double h = std::ldexp(1.0, -level);
  const PowerFunction integrand(std::pow(f.coefficient, p) * w.coefficient,
                                f.exponent * p + w.exponent, 0);
  double s = integrand.integral(0.0, h);
  const MeshFunction fm = sample_cell_averages(f, level);
  for (std::size_t i = 1; i < fm.size(); ++i) {
    const Box c = fm.cell_box(i);
    s += std::pow(fm[i], p) * w.integral(c);
  }
  return std::pow(s, 1.0 / p);
}

PowerPoint power_point(const std::vector<double>& P, double eps, int level, bool with_ainfty) {
  const int m = static_cast<int>(P.size());
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0,1)");
  PowerPoint pt;
  pt.eps = eps;
  std::vector<Density> w;
  std::vector<PowerFunction> wp;
  for (int i = 0; i < m; ++i) {
    wp.emplace_back(1.0, (1.0 - eps) * (P[i] - 1.0), 0);
    w.emplace_back(wp.back());
  }
  const WeightSystem ws = WeightSystem::make(w, P);
  const DomainBox dom{1, 0};
  pt.apvec = apvec_constant(ws, CubePolicy::all_grids(dom, level)).value;
  if (with_ainfty) {
    const auto pol = CubePolicy::all_grids(dom, std::min(level, kPowerAinftyLevel));
    for (int i = 0; i < m; ++i) pt.ainfty.push_back(ainfty_constant(ws.sigma[i], pol).value);
  }
  const PowerFunction f(1.0, eps - 1.0, 0);
  for (int i = 0; i < m; ++i) {
    pt.norms *= weighted_lp_norm(f, wp[i], P[i]);
    pt.norms_mesh *= mesh_norm_power(f, wp[i], P[i], level);
  }
  const std::vector<PowerFunction> fs(m, f);
  const double integral = power_maximal_integral(fs, std::get<PowerFunction>(ws.nu), ws.p, 1.0,
                                                 std::min(level, kPowerSublevels));
  pt.lhs = std::pow(integral, 1.0 / ws.p);
  return pt;
}

double harmonic_p(const std::vector<double>& P) {
  double s = 0.0;
  for (double p : P) s += 1.0 / p;
  return 1.0 / s;
}

Json corpus_provenance(const Corpus& c) {
  std::string all;
  for (const auto& it : c.items) {
    for (const auto& w : it.weights) all += checksum(format_mesh(w));
    for (const auto& f : it.fs) all += checksum(format_mesh(f));
  }
  Json j;
  j["seed"] = c.spec.seed;
  j["family"] = c.spec.family;
  j["items"] = c.items.size();
  j["corpus_checksum"] = checksum(all);
  j["version"] = kVersion;
  return j;
}

void corpus_params(ExperimentReport& r, const Corpus& c) {
  r.params["corpus"] = c.spec.to_json();
  r.provenance = corpus_provenance(c);
}

DomainBox corpus_domain(const Corpus& c) { return DomainBox{c.spec.n, c.spec.K}; }

WeightSystem mesh_system(const CorpusItem& it, const std::vector<double>& P) {
  std::vector<Density> w(it.weights.begin(), it.weights.end());
  return WeightSystem::make(std::move(w), P);
}

double norm_product(const CorpusItem& it, const std::vector<double>& P) {
  double s = 1.0;
  for (std::size_t i = 0; i < P.size(); ++i) s *= weighted_lp_norm(it.fs[i], it.weights[i], P[i]);
  return s;
}

DyadicCube top_cube(const DomainBox& dom) {
  return DyadicCube{GridId{0}, -dom.K, std::vector<std::int64_t>(dom.n, 0)};
}

double item_index(const std::string& id) { return std::stod(id.substr(4)); }

void require_corpus_items(const Corpus& c) {
  if (c.items.empty()) throw DomainError("empty corpus");
}

// Regression of log y against log x over positive pairs.
std::optional<SlopeFit> log_regression(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  if (lx.size() < 3) return std::nullopt;
  const auto [mn, mx] = std::minmax_element(lx.begin(), lx.end());
  if (!(*mx > *mn)) return std::nullopt;
  return fit_slope(lx, ly);
}

void trend_check(ExperimentReport& r, const std::string& name, const std::vector<double>& x,
                 const std::vector<double>& y, double bound) {
  const auto fit = log_regression(x, y);
  if (!fit) {
    r.check_true(name, false, "not enough spread for a regression");
    return;
  }
  r.slopes.emplace_back(name, *fit);
  r.check_le(name + " |slope|", std::abs(fit->slope), bound);
}

ExperimentReport merge(const std::string& id, std::vector<ExperimentReport> parts) {
  ExperimentReport r;
  r.id = id;
  r.extra["parts"] = Json::array();
  for (auto& p : parts) {
    if (r.params.empty()) r.params = p.params;
    if (r.provenance.empty()) r.provenance = p.provenance;
    for (auto c : p.checks) {
      c.name = p.id + ": " + c.name;
      r.checks.push_back(std::move(c));
    }
    for (const auto& w : p.warnings) r.warnings.push_back(p.id + ": " + w);
    r.extra["parts"].push_back(p.to_json());
  }
  return r;
}

}  // namespace

ExperimentReport sharpness_run(int m, const std::vector<double>& P, const std::vector<double>& eps,
                               int level) {
  require_power_inputs(m, P, level);
  if (eps.size() < 2) throw DomainError("sharpness needs at least two eps values");
  const double p = harmonic_p(P);
  ExperimentReport r;
  r.id = "sharpness";
  r.params = {{"m", m}, {"P", P}, {"eps", eps}, {"level", level}, {"p", p}};
  r.provenance = {{"seed", nullptr}, {"version", kVersion}};
  r.columns = {"eps", "log_inv_eps", "apvec"};
  for (int i = 1; i <= m; ++i) r.columns.push_back("ainfty_sigma" + std::to_string(i));
  for (const char* c : {"norm_product", "norm_product_mesh", "lhs"}) r.columns.emplace_back(c);

  std::vector<double> x, ya, yl, yn;
  std::vector<std::vector<double>> yi(m);
  double worst_exact = 0.0, worst_mesh = 0.0;
  for (double e : eps) {
    const PowerPoint pt = power_point(P, e, level, true);
    std::vector<double> row{e, std::log(1.0 / e), pt.apvec};
    row.insert(row.end(), pt.ainfty.begin(), pt.ainfty.end());
    row.insert(row.end(), {pt.norms, pt.norms_mesh, pt.lhs});
    r.add_row(std::move(row));
    x.push_back(std::log(1.0 / e));
    ya.push_back(std::log(pt.apvec));
    for (int i = 0; i < m; ++i) yi[i].push_back(std::log(pt.ainfty[i]));
    yl.push_back(std::log(pt.lhs));
    yn.push_back(std::log(pt.norms));
    const double exact = std::pow(1.0 / e, 1.0 / p);
    worst_exact = std::max(worst_exact, std::abs(pt.norms - exact) / exact);
    const double mesh_err = std::abs(pt.norms_mesh - pt.norms) / pt.norms;
    worst_mesh = std::max(worst_mesh, mesh_err);
    const double first_cell = std::pow(2.0, -level * e);
    if (first_cell > 0.5 || mesh_err > 0.01)
      r.warnings.push_back("eps=" + format_double(e) + ": x^(eps-1) keeps a fraction " +
                           format_double(first_cell) + " of its mass in the first cell at level " +
                           std::to_string(level) + "; mesh cross-check error " + format_double(mesh_err));
  }
  const auto fa = fit_slope(x, ya);
  r.slopes.emplace_back("apvec", fa);
  r.check_slope("apvec slope vs mp-1", fa, m * p - 1.0, 0.10);
  for (int i = 0; i < m; ++i) {
    const auto fi = fit_slope(x, yi[i]);
    const std::string name = "ainfty_sigma" + std::to_string(i + 1);
    r.slopes.emplace_back(name, fi);
    r.check_slope(name + " slope vs 1", fi, 1.0, 0.10);
  }
  const auto fn = fit_slope(x, yn);
  r.slopes.emplace_back("norm_product", fn);
  r.check_le("norm_product vs (1/eps)^(1/p) relative error", worst_exact, 1e-12);
  r.check_le("norm_product mesh cross-check relative error", worst_mesh, 0.01);
  const auto fl = fit_slope(x, yl);
  r.slopes.emplace_back("lhs", fl);
  r.check_slope("lhs slope vs m+1/p", fl, m + 1.0 / p, 0.10);
  return r;
}

ExperimentReport mixed_bound_band(const Corpus& corpus) {
  require_corpus_items(corpus);
  const auto& P = corpus.spec.P;
  const double p = harmonic_p(P);
  const int m = corpus.spec.m;
  ExperimentReport r;
  r.id = "mixed-bound";
  corpus_params(r, corpus);
  r.columns = {"item", "eps", "apvec"};
  for (int i = 1; i <= m; ++i) r.columns.push_back("ainfty_sigma" + std::to_string(i));
  for (const char* c : {"norm_product", "lhs", "R"}) r.columns.emplace_back(c);
  auto ratio = [&](double lhs, double ap, const std::vector<double>& ai, double norms) {
    double d = std::pow(ap, 1.0 / p) * norms;
    for (int i = 0; i < m; ++i) d *= std::pow(ai[i], 1.0 / P[i]);
    return lhs / d;
  };
  std::vector<double> rs, aps;
  for (const auto& it : corpus.items) {
    double ap, norms, lhs;
    std::vector<double> ai;
    if (corpus.spec.family == "power") {
      const auto pt = power_point(P, it.eps, corpus.spec.L, true);
      ap = pt.apvec;
      ai = pt.ainfty;
      norms = pt.norms;
      lhs = pt.lhs;
    } else {
      const auto ws = mesh_system(it, P);
      const auto pol = CubePolicy::all_grids(corpus_domain(corpus), corpus.spec.L);
      ap = apvec_constant(ws, pol).value;
      for (int i = 0; i < m; ++i) ai.push_back(ainfty_constant(ws.sigma[i], pol).value);
      norms = norm_product(it, P);
      const auto M = multilinear_maximal(it.fs, pol).lower;
      lhs = weighted_lp_norm(M, std::get<MeshFunction>(ws.nu), p);
    }
    if (!(norms > 0.0)) {
      r.warnings.push_back(it.id + ": inputs vanish, ratio undefined");
      continue;
    }
    const double R = ratio(lhs, ap, ai, norms);
    std::vector<double> row{item_index(it.id), it.eps, ap};
    row.insert(row.end(), ai.begin(), ai.end());
    row.insert(row.end(), {norms, lhs, R});
    r.add_row(std::move(row));
    rs.push_back(R);
    aps.push_back(ap);
  }
  if (rs.empty()) throw DomainError("no usable corpus items");
  const auto [mn, mx] = std::minmax_element(rs.begin(), rs.end());
  r.extra["max_R"] = *mx;
  r.extra["min_R"] = *mn;
  r.check_true("max R finite", std::isfinite(*mx));
  if (corpus.spec.family == "power") r.check_le("R spread max/min across eps", *mx / *mn, 10.0);
  else trend_check(r, "log R vs log apvec", aps, rs, 0.15);
  return r;
}

ExperimentReport buckley_probe(int m, double rexp, const std::vector<double>& eps, int level) {
  const std::vector<double> P(m, rexp);
  require_power_inputs(m, P, level);
  if (eps.size() < 4) throw DomainError("fit refused: fewer than 4 eps points");
  const double p = harmonic_p(P);
  ExperimentReport r;
  r.id = "buckley";
  r.params = {{"m", m}, {"r", rexp}, {"eps", eps}, {"level", level}, {"p", p}};
  r.provenance = {{"seed", nullptr}, {"version", kVersion}};
  r.columns = {"eps", "apvec", "norm_product", "lhs", "ratio"};
  std::vector<double> x, y;
  for (double e : eps) {
    const auto pt = power_point(P, e, level, false);
    const double ratio = pt.lhs / pt.norms;
    r.add_row({e, pt.apvec, pt.norms, pt.lhs, ratio});
    x.push_back(std::log(pt.apvec));
    y.push_back(std::log(ratio));
  }
  const auto fit = fit_slope(x, y);
  r.slopes.emplace_back("alpha", fit);
  const double sharp = m / (rexp - 1.0);
  const double lower = m / (m * p - 1.0);
  double upper = 1.0;
  for (double pi : P) upper += 1.0 / (pi - 1.0);
  upper /= p;
  r.extra["alpha_sharp"] = sharp;
  r.extra["alpha_lower"] = lower;
  r.extra["alpha_upper"] = upper;
  r.check_slope("alpha vs m/(r-1)", fit, sharp, 0.15);
  r.check_ge("alpha vs m/(mp-1) - 0.1", fit.slope, lower - 0.1);
  r.check_le("alpha vs upper bracket + 0.1", fit.slope, upper + 0.1);
  return r;
}

ExperimentReport factorization_check(const Corpus& corpus) {
  require_corpus_items(corpus);
  const auto& P = corpus.spec.P;
  for (double pi : P)
    if (pi != P[0]) throw DomainError("factorization needs equal exponents");
  const double rexp = P[0];
  ExperimentReport r;
  r.id = "factorization";
  corpus_params(r, corpus);
  r.columns = {"item", "cubes", "max_relative_error"};
  const auto pol = CubePolicy::all_grids(corpus_domain(corpus), corpus.spec.L);
  double worst = 0.0;
  for (const auto& it : corpus.items) {
    const auto ws = mesh_system(it, P);
    std::vector<MeshFunction> sig;
    for (const auto& s : ws.sigma) sig.push_back(std::get<MeshFunction>(s));
    const auto& nu = std::get<MeshFunction>(ws.nu);
    double e = 0.0;
    std::size_t cubes = 0;
    for_each_cube(pol, corpus_domain(corpus), [&](const DyadicCube& q) {
      e = std::max(e, factorization_sides(it.fs, nu, sig, rexp, q.box()).relative_error());
      ++cubes;
    });
    r.add_row({item_index(it.id), static_cast<double>(cubes), e});
    worst = std::max(worst, e);
  }
  r.check_le("max per-cube relative error", worst, 1e-10);
  return r;
}

TwoWeightConstant two_weight_constant(const MeshFunction& u, std::span<const MeshFunction> v,
                                      std::span<const double> s, std::span<const double> P) {
  if (v.size() != P.size() || s.size() != P.size()) throw DomainError("v, s and P differ in length");
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (!(P[i] > 1.0)) throw DomainError("exponents must lie in (1, inf)");
    if (!(s[i] >= 1.0)) throw DomainError("Orlicz exponents s_i must be >= 1");
    if (!v[i].same_mesh(u)) throw DomainError("mismatched domains: weights live on different meshes");
    if (!v[i].all_positive()) throw DomainError("weights must be strictly positive");
  }
  const double p = harmonic_p(std::vector<double>(P.begin(), P.end()));
  std::vector<MeshFunction> vp;
  for (std::size_t i = 0; i < P.size(); ++i) {
    const double e = -s[i] / P[i];
    vp.push_back(v[i].map([e](double x) { return std::pow(x, e); }));
  }
  const DomainBox dom = u.domain();
  const int L = u.level();
  const int k0 = std::max(-dom.K, L - 3);
  TwoWeightConstant out;
  out.by_level.assign(L - k0 + 1, 0.0);
  for_each_cube(CubePolicy::all_grids(dom, L), dom, [&](const DyadicCube& q) {
    const Box b = q.box();
    double val = std::pow(u.average(b), 1.0 / p);
    for (std::size_t i = 0; i < P.size(); ++i) val *= std::pow(vp[i].average(b), 1.0 / s[i]);
    for (int k = std::max(q.k, k0); k <= L; ++k) out.by_level[k - k0] = std::max(out.by_level[k - k0], val);
  });
  out.K = out.by_level.back();
  out.divergent = out.by_level.size() >= 2;
  for (std::size_t i = 1; i < out.by_level.size(); ++i)
    if (!(out.by_level[i] > 1.1 * out.by_level[i - 1])) out.divergent = false;
  return out;
}

ExperimentReport two_weight_check(const Corpus& corpus, double s_scale) {
  require_corpus_items(corpus);
  if (corpus.spec.family == "power") throw DomainError("two-weight check runs on mesh corpora");
  const auto& P = corpus.spec.P;
  const double p = harmonic_p(P);
  std::vector<double> s;
  for (double pi : P) s.push_back(s_scale * conjugate(pi));
  ExperimentReport r;
  r.id = "two-weight";
  corpus_params(r, corpus);
  r.params["s"] = s;
  r.columns = {"item", "K", "lhs", "norm_product", "ratio", "divergent"};
  const auto pol = CubePolicy::all_grids(corpus_domain(corpus), corpus.spec.L);
  std::vector<double> ks, ratios;
  int flagged = 0;
  for (const auto& it : corpus.items) {
    const auto ws = mesh_system(it, P);
    const auto& nu = std::get<MeshFunction>(ws.nu);
    const auto K = two_weight_constant(nu, it.weights, s, P);
    const double norms = norm_product(it, P);
    const auto M = multilinear_maximal(it.fs, pol).lower;
    const double lhs = weighted_lp_norm(M, nu, p);
    const double ratio = norms > 0.0 ? lhs / (K.K * norms) : 0.0;
    if (K.divergent) {
      ++flagged;
      r.warnings.push_back(it.id + ": K-divergent");
    }
    r.add_row({item_index(it.id), K.K, lhs, norms, ratio, K.divergent ? 1.0 : 0.0});
    if (norms > 0.0) {
      ks.push_back(K.K);
      ratios.push_back(ratio);
    }
  }
  r.check_le("K-divergent items", flagged, 0.0);
  const double mx = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  r.extra["max_ratio"] = mx;
  r.check_true("max ratio finite", std::isfinite(mx));
  trend_check(r, "log ratio vs log K", ks, ratios, 0.15);
  return r;
}

ExperimentReport sparse_a2_check(const Corpus& corpus) {
  require_corpus_items(corpus);
  const auto& P = corpus.spec.P;
  const int m = corpus.spec.m;
  for (double pi : P)
    if (pi != m + 1.0) throw DomainError("sparse A2 check needs p_i = m + 1");
  const double p = harmonic_p(P);
  const DomainBox dom = corpus_domain(corpus);
  const int L = corpus.spec.L;
  ExperimentReport r;
  r.id = "sparse-a2";
  corpus_params(r, corpus);
  r.columns = {"item", "eps", "apvec", "norm_product", "lhs", "R", "family_size"};
  std::vector<double> rs, aps;
  for (const auto& it : corpus.items) {
    const auto fam = build_cz_sparse(it.fs, GridId{0}, CubePolicy::all_grids(dom, L));
    const auto A = sparse_apply(fam, it.fs);
    double ap, norms, lhs;
    if (corpus.spec.family == "power") {
      std::vector<Density> w;
      std::vector<PowerFunction> wp;
      for (int i = 0; i < m; ++i) {
        wp.emplace_back(1.0, (1.0 - it.eps) * (P[i] - 1.0), 0);
        w.emplace_back(wp.back());
      }
      const auto ws = WeightSystem::make(w, P);
      ap = apvec_constant(ws, CubePolicy::all_grids(dom, L)).value;
      norms = 1.0;
      const PowerFunction f(1.0, it.eps - 1.0, 0);
      for (int i = 0; i < m; ++i) norms *= weighted_lp_norm(f, wp[i], P[i]);
      lhs = weighted_lp_norm(A, std::get<PowerFunction>(ws.nu), p);
    } else {
      const auto ws = mesh_system(it, P);
      ap = apvec_constant(ws, CubePolicy::all_grids(dom, L)).value;
      norms = norm_product(it, P);
      lhs = weighted_lp_norm(A, std::get<MeshFunction>(ws.nu), p);
    }
    if (!(norms > 0.0)) {
      r.warnings.push_back(it.id + ": inputs vanish, ratio undefined");
      continue;
    }
    const double R = lhs / (ap * norms);
    r.add_row({item_index(it.id), it.eps, ap, norms, lhs, R, static_cast<double>(fam.size())});
    rs.push_back(R);
    aps.push_back(ap);
  }
  if (rs.empty()) throw DomainError("no usable corpus items");
  const auto [mn, mx] = std::minmax_element(rs.begin(), rs.end());
  r.extra["max_R"] = *mx;
  r.check_true("max R finite", std::isfinite(*mx));
  if (corpus.spec.family == "power") r.check_le("R spread max/min across eps", *mx / *mn, 10.0);
  else trend_check(r, "log R vs log apvec", aps, rs, 0.15);
  return r;
}

ExperimentReport verify_duality(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  ExperimentReport r;
  r.id = "duality";
  corpus_params(r, corpus);
  r.columns = {"item", "m", "l", "alpha", "cubes", "lhs", "rhs", "relative_error"};
  double worst = 0.0;
  std::size_t k = 0;
  int nontrivial = 0;
  for (const auto& it : corpus.items) {
    const GridId build{static_cast<unsigned>(k++ % GridId::count(dom.n))};
    for (int mm = 1; mm <= std::min(2, static_cast<int>(it.fs.size())); ++mm) {
      const std::span<const MeshFunction> fs(it.fs.data(), mm);
      const auto s = restrict_to_domain(build_cz_sparse(fs, build, pol));
      for (int l = 0; l <= 2; ++l)
        for (unsigned a = 0; a < GridId::count(dom.n); ++a) {
          const auto d = duality_check(s, fs, it.weights[0], l, GridId{a});
          r.add_row({item_index(it.id), double(mm), double(l), double(a), double(s.size()), d.lhs, d.rhs,
                     d.relative_error});
          worst = std::max(worst, d.relative_error);
          nontrivial += d.lhs != 0.0;
        }
    }
  }
  r.check_le("max relative error", worst, 1e-10);
  r.check_ge("instances with nonzero sides", nontrivial, 1.0);
  return r;
}

ExperimentReport verify_sparseness(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  ExperimentReport r;
  r.id = "sparseness";
  corpus_params(r, corpus);
  r.columns = {"item", "m", "alpha", "cubes", "worst_overlap", "min_lower_ratio", "max_upper_ratio"};
  int bad_sparse = 0, bad_bounds = 0, bad_restricted = 0;
  for (const auto& it : corpus.items)
    for (int mm = 1; mm <= static_cast<int>(it.fs.size()); ++mm) {
      const std::span<const MeshFunction> fs(it.fs.data(), mm);
      for (unsigned a = 0; a < GridId::count(dom.n); ++a) {
        const auto s = build_cz_sparse(fs, GridId{a}, pol);
        const auto v = verify_sparse(s);
        const auto g = check_generation_bounds(s, fs);
        if (!v.pass) {
          ++bad_sparse;
          r.warnings.push_back(it.id + " grid " + std::to_string(a) + ": " + v.invariant + ": " + v.detail);
        }
        if (!g.pass) {
          ++bad_bounds;
          r.warnings.push_back(it.id + " grid " + std::to_string(a) + ": generation bound at " + g.witness);
        }
        if (!verify_sparse(restrict_to_domain(s)).pass) ++bad_restricted;
        r.add_row({item_index(it.id), double(mm), double(a), double(v.cubes), v.worst_overlap,
                   g.min_lower_ratio, g.max_upper_ratio});
      }
    }
  r.check_le("families violating an invariant", bad_sparse, 0.0);
  r.check_le("families violating the generation bounds", bad_bounds, 0.0);
  r.check_le("restricted families violating an invariant", bad_restricted, 0.0);
  return r;
}

ExperimentReport verify_domination(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  ExperimentReport r;
  r.id = "domination";
  corpus_params(r, corpus);
  r.columns = {"item", "m", "max_ratio", "bound"};
  double worst_scaled = 0.0;
  for (const auto& it : corpus.items)
    for (int mm = 1; mm <= std::min(2, static_cast<int>(it.fs.size())); ++mm) {
      const std::span<const MeshFunction> fs(it.fs.data(), mm);
      const auto d = domination_check(fs, pol);
      r.add_row({item_index(it.id), double(mm), d.max_ratio, d.bound});
      worst_scaled = std::max(worst_scaled, d.max_ratio / d.bound);
      if (!d.pass && d.witness_cell)
        r.warnings.push_back(it.id + ": domination fails at cell " + std::to_string(*d.witness_cell));
    }
  r.check_le("max of M / (bound * sum A_alpha)", worst_scaled, 1.0);
  return r;
}

ExperimentReport verify_lemma31(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  ExperimentReport r;
  r.id = "lemma3.1";
  corpus_params(r, corpus);
  r.columns = {"item", "j", "sigma_aq", "apvec_power", "worst_cube_ratio", "violations"};
  std::size_t violations = 0;
  double worst = 0.0;
  for (const auto& it : corpus.items) {
    const auto ws = corpus.spec.family == "power" ? [&] {
      std::vector<Density> w;
      for (std::size_t i = 0; i < corpus.spec.P.size(); ++i)
        w.emplace_back(PowerFunction(1.0, (1.0 - it.eps) * (corpus.spec.P[i] - 1.0), 0));
      return WeightSystem::make(w, corpus.spec.P);
    }() : mesh_system(it, corpus.spec.P);
    for (int j = 1; j <= ws.m(); ++j) {
      const auto l = lemma31_check(ws, j, pol);
      r.add_row({item_index(it.id), double(j), l.sigma_aq, l.apvec_power, l.worst_cube_ratio, double(l.violations)});
      violations += l.violations;
      worst = std::max(worst, l.worst_cube_ratio);
    }
  }
  r.extra["worst_cube_ratio"] = worst;
  r.check_le("cube violations", double(violations), 0.0);
  return r;
}

ExperimentReport verify_reverse_holder(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  ExperimentReport r;
  r.id = "rh3.1";
  corpus_params(r, corpus);
  r.columns = {"item", "weight", "ainfty", "r", "worst_ratio", "pass", "fallback_used",
               "fallback_r", "fallback_pass", "empirical_r_limit", "empirical_tau"};
  int failures = 0, fallbacks = 0;
  for (const auto& it : corpus.items)
    for (std::size_t i = 0; i < it.weights.size(); ++i) {
      const auto h = reverse_holder_check(it.weights[i], pol);
      const bool ok = h.pass || (h.fallback_used && h.fallback_pass);
      failures += !ok;
      fallbacks += h.fallback_used;
      r.add_row({item_index(it.id), double(i + 1), h.ainfty, h.r, h.worst_ratio, double(h.pass),
                 double(h.fallback_used), h.fallback_r, double(h.fallback_pass), h.empirical_r_limit,
                 h.empirical_tau});
    }
  r.extra["fallback_used"] = fallbacks;
  r.check_le("weights failing reverse Holder", failures, 0.0);
  return r;
}

ExperimentReport verify_weak_profile(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  const double pin = 2.0 * std::pow(6.0, dom.n);
  ExperimentReport r;
  r.id = "weak-profile";
  corpus_params(r, corpus);
  r.params["pin"] = pin;
  r.columns = {"item", "l", "alpha", "cubes", "profile", "profile_over_l"};
  double worst = 0.0;
  int defined = 0;
  for (const auto& it : corpus.items) {
    const auto s = restrict_to_domain(build_cz_sparse(it.fs, GridId{0}, pol));
    for (int l = 1; l <= 5; ++l)
      for (unsigned a = 0; a < GridId::count(dom.n); ++a) {
        const auto w = shifted_avg_profile(s, it.weights[0], l, GridId{a});
        if (!w.defined) continue;
        r.add_row({item_index(it.id), double(l), double(a), double(s.size()), w.value, w.value / l});
        worst = std::max(worst, w.value / l);
        defined += s.size() > 0;
      }
  }
  r.extra["max_profile_over_l"] = worst;
  r.check_le("max profile / l", worst, pin);
  r.check_ge("profiles over nonempty families", defined, 1.0);
  return r;
}

ExperimentReport verify_lemma42(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const auto pol = CubePolicy::all_grids(dom, corpus.spec.L);
  const double lambda = std::ldexp(1.0, -(dom.n + 2));
  const double cell = std::ldexp(1.0, -dom.n * corpus.spec.L);
  ExperimentReport r;
  r.id = "lemma4.2";
  corpus_params(r, corpus);
  r.params["lambda"] = lambda;
  // Per item and l: the sup of c_hat over admissible cubes of every grid.
  r.columns = {"item", "l", "c_hat", "cubes", "nonzero"};
  std::vector<double> c_l(5, 0.0);
  double worst_item_spread = 0.0;
  int unbounded = 0;
  for (const auto& it : corpus.items) {
    const auto s = restrict_to_domain(build_cz_sparse(it.fs, GridId{0}, pol));
    const std::span<const MeshFunction> head(it.fs.data(), it.fs.size() - 1);
    std::vector<double> item_c(5, 0.0);
    for (int l = 1; l <= 5; ++l) {
      int cubes = 0, nonzero = 0;
      const auto part = cover_partition(s, l);
      for (unsigned a = 0; a < GridId::count(dom.n); ++a) {
        const auto terms = aux_form_terms(part, GridId{a}, head, it.fs.back());
        for_each_cube(CubePolicy{{GridId{a}}, pol.kmin, pol.kmax}, dom, [&](const DyadicCube& q) {
          if (lambda * q.measure() < cell) return;
          const Box qb = q.box();
          const double lhs = local_oscillation(term_distribution(terms, qb), lambda);
          double rhs = l * it.fs.back().average(qb);
          for (const auto& f : head) rhs *= f.average(qb);
          ++cubes;
          if (!(rhs > 0.0)) {
            unbounded += lhs > 0.0;
            return;
          }
          nonzero += lhs > 0.0;
          item_c[l - 1] = std::max(item_c[l - 1], lhs / rhs);
        });
      }
      r.add_row({item_index(it.id), double(l), item_c[l - 1], double(cubes), double(nonzero)});
      c_l[l - 1] = std::max(c_l[l - 1], item_c[l - 1]);
    }
    const auto [lo, hi] = std::minmax_element(item_c.begin(), item_c.end());
    if (*lo > 0.0) worst_item_spread = std::max(worst_item_spread, *hi / *lo);
  }
  r.extra["c_hat_by_l"] = c_l;
  r.extra["worst_item_spread"] = worst_item_spread;
  const auto [lo, hi] = std::minmax_element(c_l.begin(), c_l.end());
  r.check_le("unbounded probes", unbounded, 0.0);
  r.check_true("nonzero oscillation observed", *hi > 0.0);
  r.check_le("c_hat spread max/min across l", *lo > 0.0 ? *hi / *lo : kInf, 3.0);
  return r;
}

ExperimentReport verify_decomposition(const Corpus& corpus) {
  require_corpus_items(corpus);
  const DomainBox dom = corpus_domain(corpus);
  const DyadicCube q0 = top_cube(dom);
  ExperimentReport r;
  r.id = "thm2.3";
  corpus_params(r, corpus);
  r.columns = {"item", "input", "family_size", "scale", "c1_min", "c2_min", "pass"};
  int runs = 0, passed = 0;
  Json witnesses = Json::array();
  for (const auto& it : corpus.items)
    for (std::size_t i = 0; i < it.fs.size(); ++i) {
      const auto d = decomposition_check(it.fs[i], q0);
      std::size_t size = 0;
      for (const auto& [g, c] : d.family) size += c.size();
      ++runs;
      passed += d.pass;
      r.add_row({item_index(it.id), double(i + 1), double(size), d.scale, d.c1_min, d.c2_min, double(d.pass)});
      if (!d.pass) {
        Json w{{"item", it.id}, {"input", i + 1}, {"scale", d.scale}};
        if (d.witness_cell) {
          w["cell"] = *d.witness_cell;
          w["lhs"] = d.witness_lhs;
          w["sharp"] = d.witness_sharp;
          w["sum"] = d.witness_sum;
        }
        if (!d.family_sparse) w["sparse_violation"] = d.sparse_violation;
        witnesses.push_back(std::move(w));
      }
    }
  r.extra["witnesses"] = witnesses;
  const double rate = runs ? double(passed) / runs : 0.0;
  r.extra["pass_rate"] = rate;
  r.check_ge("pass rate", rate, 0.95);
  r.check_le("failures without witness", double(runs - passed) - double(witnesses.size()), 0.0);
  return r;
}

std::vector<std::string> theorem_names() {
  return {"1.1", "1.2", "1.3", "1.5", "lemma2.2", "lemma3.1", "lemma4.2", "duality", "rh3.1", "thm2.3"};
}

ExperimentReport run_theorem(const std::string& t, const Corpus& c) {
  ExperimentReport r;
  if (t == "1.1") r = mixed_bound_band(c);
  else if (t == "1.2")
    r = c.spec.family == "power" ? buckley_probe(c.spec.m, c.spec.P[0], c.spec.eps, c.spec.L)
                                 : factorization_check(c);
  else if (t == "1.3") r = two_weight_check(c);
  else if (t == "1.5") r = sparse_a2_check(c);
  else if (t == "lemma2.2") r = merge("lemma2.2", {verify_sparseness(c), verify_domination(c)});
  else if (t == "lemma3.1") r = verify_lemma31(c);
  else if (t == "lemma4.2") r = verify_lemma42(c);
  else if (t == "duality") r = merge("duality", {verify_duality(c), verify_weak_profile(c)});
  else if (t == "rh3.1") r = verify_reverse_holder(c);
  else if (t == "thm2.3") r = verify_decomposition(c);
  else throw DomainError("unknown theorem: " + t);
  return r;
}

}  // namespace dyadic
