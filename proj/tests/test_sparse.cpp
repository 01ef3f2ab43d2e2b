#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "dyadic/sparse.hpp"

using namespace dyadic;

namespace {

MeshFunction line4(std::vector<double> v) { return MeshFunction(DomainBox{1, 0}, 2, std::move(v)); }

MeshFunction random_step(std::mt19937_64& rng, DomainBox dom, int L, int step, double zero_p = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> coarse(std::size_t{1} << (dom.n * (dom.K + step)));
  for (auto& v : coarse) v = u(rng) < zero_p ? 0.0 : std::exp(4.0 * u(rng) - 2.0);
  const auto c = MeshFunction(dom, step, coarse);
  return c.refine(L);
}

// Oracle for n = 1 and the standard grid: list every cube at levels kmin..L
// with direct sums, keep the maximal ones whose product of averages exceeds a^k.
std::map<int, std::vector<std::pair<int, long>>> level_set_oracle(const std::vector<std::vector<double>>& fs,
                                                                   int L, double a, int gen_lo, int gen_hi) {
  const long N = static_cast<long>(fs[0].size());
  auto value = [&](int k, long j) {
    // cube [j 2^{-k}, (j+1) 2^{-k}) intersected with [0,1), zero outside
    const double lo = std::ldexp(static_cast<double>(j), -k), hi = std::ldexp(static_cast<double>(j + 1), -k);
    double p = 1.0;
    for (const auto& f : fs) {
      double s = 0.0;
      for (long c = 0; c < N; ++c) {
        const double cl = static_cast<double>(c) / N, ch = static_cast<double>(c + 1) / N;
        s += f[c] * std::max(0.0, std::min(hi, ch) - std::max(lo, cl));
      }
      p *= s / (hi - lo);
    }
    return p;
  };
  std::map<int, std::vector<std::pair<int, long>>> out;
  for (int g = gen_lo; g <= gen_hi; ++g) {
    const double ak = std::pow(a, g);
    std::vector<std::pair<int, long>> sel;
    for (int k = -12; k <= L; ++k) {
      const long count = k >= 0 ? (1L << k) : 1;
      for (long j = 0; j < count; ++j) {
        if (!(value(k, j) > ak)) continue;
        bool covered = false;
        for (int a = 1; k - a >= -12 && !covered; ++a) covered = value(k - a, j >> std::min(a, std::max(k, 0))) > ak;
        if (covered) continue;
        sel.emplace_back(k, j);
      }
    }
    std::sort(sel.begin(), sel.end(), [](auto x, auto y) { return x.second < y.second || (x.second == y.second && x.first < y.first); });
    if (!sel.empty()) out[g] = sel;
  }
  return out;
}

}  // namespace

TEST_CASE("CZ family on the four-cell example") {
  const MeshFunction fs[] = {line4({0, 0, 0, 1})};
  const auto s = build_cz_sparse(fs, GridId{0}, CubePolicy::standard(DomainBox{1, 0}, 2));
  CHECK(s.a == 4.0);
  REQUIRE(s.generations.size() == 2);
  CHECK(s.generations.at(-2) == std::vector<DyadicCube>{DyadicCube{GridId{0}, -1, {0}}});
  CHECK(s.generations.at(-1) == std::vector<DyadicCube>{DyadicCube{GridId{0}, 1, {1}}});
  CHECK(verify_sparse(s).pass);
  CHECK(check_generation_bounds(s, fs).pass);

  const MeshFunction zero[] = {line4({0, 0, 0, 0})};
  CHECK(build_cz_sparse(zero, GridId{0}, CubePolicy::standard(DomainBox{1, 0}, 2)).empty());
}

TEST_CASE("CZ family matches the level-set oracle") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 20; ++t) {
    const int L = 5;
    const int m = 1 + t % 2;
    std::vector<MeshFunction> fs;
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < m; ++i) {
      fs.push_back(random_step(rng, DomainBox{1, 0}, L, L, 0.3));
      raw.emplace_back(fs.back().values().begin(), fs.back().values().end());
    }
    const auto s = build_cz_sparse(fs, GridId{0}, CubePolicy::standard(DomainBox{1, 0}, L));
    if (s.empty()) continue;
    const auto want = level_set_oracle(raw, L, s.a, s.generations.begin()->first, s.generations.rbegin()->first);
    REQUIRE(want.size() == s.generations.size());
    for (const auto& [g, cubes] : s.generations) {
      std::set<std::pair<int, long>> got;
      for (const auto& q : cubes) got.emplace(q.k, static_cast<long>(q.j[0]));
      CHECK(got == std::set<std::pair<int, long>>(want.at(g).begin(), want.at(g).end()));
    }
  }
}

TEST_CASE("built families are sparse with exact generation bounds") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + (t % 5 == 4);
    const DomainBox dom{n, t % 3 == 0 ? 1 : 0};
    const int L = n == 1 ? 7 : 4;
    const int m = 1 + t % 2;
    std::vector<MeshFunction> fs;
    for (int i = 0; i < m; ++i) fs.push_back(random_step(rng, dom, L, L - 1, 0.2));
    for (unsigned a = 0; a < GridId::count(n); ++a) {
      const auto s = build_cz_sparse(fs, GridId{a}, CubePolicy::all_grids(dom, L));
      const auto rep = verify_sparse(s);
      CHECK_MESSAGE(rep.pass, rep.invariant << " " << rep.detail);
      CHECK(rep.worst_overlap <= 0.5);
      const auto gb = check_generation_bounds(s, fs);
      CHECK_MESSAGE(gb.pass, gb.witness);
      const auto r = restrict_to_domain(s);
      CHECK(verify_sparse(r).pass);
      for (const auto& q : r.cubes()) CHECK(dom.contains(q));
    }
  }
}

TEST_CASE("verify_sparse names violations") {
  SparseFamily empty{GridId{0}, DomainBox{1, 0}, 2, 0.0, {}};
  CHECK(verify_sparse(empty).pass);
  SparseFamily one{GridId{0}, DomainBox{1, 0}, 2, 0.0, {{0, {DyadicCube{GridId{0}, 0, {0}}}}}};
  CHECK(verify_sparse(one).pass);

  SparseFamily bad = one;
  bad.generations[1] = {DyadicCube{GridId{0}, 1, {0}}, DyadicCube{GridId{0}, 2, {2}}};
  const auto r = verify_sparse(bad);
  CHECK_FALSE(r.pass);
  CHECK(r.invariant == "half-overlap");

  SparseFamily b2{GridId{0}, DomainBox{2, 0}, 2, 0.0, {{0, {DyadicCube{GridId{0}, 0, {0, 0}}}}}};
  b2.generations[1] = {DyadicCube{GridId{0}, 1, {0, 0}}, DyadicCube{GridId{0}, 1, {0, 1}},
                       DyadicCube{GridId{0}, 1, {1, 0}}};
  CHECK(verify_sparse(b2).invariant == "half-overlap");

  SparseFamily overlap{GridId{0}, DomainBox{1, 0}, 2, 0.0,
                       {{0, {DyadicCube{GridId{0}, 0, {0}}, DyadicCube{GridId{0}, 1, {1}}}}}};
  CHECK(verify_sparse(overlap).invariant == "disjoint");

  SparseFamily loose{GridId{0}, DomainBox{1, 1}, 2, 0.0,
                     {{0, {DyadicCube{GridId{0}, 0, {0}}}}, {1, {DyadicCube{GridId{0}, 2, {5}}}}}};
  CHECK(verify_sparse(loose).invariant == "nested");
}

TEST_CASE("family serialization round trip") {
  std::mt19937_64 rng(41);
  const MeshFunction fs[] = {random_step(rng, DomainBox{1, 0}, 6, 6)};
  const auto s = build_cz_sparse(fs, GridId{1}, CubePolicy::all_grids(DomainBox{1, 0}, 6));
  const auto back = parse_family(format_family(s));
  CHECK(back.grid == s.grid);
  CHECK(back.a == s.a);
  CHECK(back.generations == s.generations);
  CHECK(format_family(back) == format_family(s));
}

TEST_CASE("sparse operator examples") {
  const auto f = line4({1, 2, 3, 4});
  const MeshFunction fs[] = {f};
  SparseFamily s{GridId{0}, DomainBox{1, 0}, 2, 0.0,
                 {{0, {DyadicCube{GridId{0}, 0, {0}}}}, {1, {DyadicCube{GridId{0}, 1, {1}}}}}};
  const auto a = sparse_apply(s, fs);
  const double want[] = {2.5, 2.5, 6.0, 6.0};
  for (int i = 0; i < 4; ++i) CHECK(a[i] == doctest::Approx(want[i]));

  SparseFamily none{GridId{0}, DomainBox{1, 0}, 2, 0.0, {}};
  const auto nothing = sparse_apply(none, fs);
  for (double v : nothing.values()) CHECK(v == 0.0);

  const MeshFunction ones[] = {MeshFunction::constant(DomainBox{1, 0}, 2, 1.0)};
  SparseFamily single{GridId{0}, DomainBox{1, 0}, 2, 0.0, {{0, {DyadicCube{GridId{0}, 1, {0}}}}}};
  const auto chi = sparse_apply(single, ones);
  CHECK(chi[0] == 1.0);
  CHECK(chi[3] == 0.0);

  SparseFamily q{GridId{0}, DomainBox{1, 0}, 2, 0.0, {{0, {DyadicCube{GridId{0}, 2, {1}}}}}};
  const auto d = dilated_sparse_apply(q, fs, 1);
  // avg over [0.125, 0.625) = (0.125*1 + 0.25*2 + 0.125*3)/0.5
  CHECK(d[1] == doctest::Approx((0.125 * 1 + 0.25 * 2 + 0.125 * 3) / 0.5));
  CHECK(d[0] == 0.0);
  for (int l = 0; l < 3; ++l) {
    const auto c = dilated_sparse_apply(s, ones, l);
    const auto base = sparse_apply(s, ones);
    for (int i = 0; i < 4; ++i) CHECK(c[i] == doctest::Approx(base[i]));
  }
  const auto l0 = dilated_sparse_apply(s, fs, 0);
  for (int i = 0; i < 4; ++i) CHECK(l0[i] == doctest::Approx(a[i]));
}

TEST_CASE("linearity of the sparse operator") {
  std::mt19937_64 rng(43);
  const DomainBox dom{1, 0};
  for (int t = 0; t < 10; ++t) {
    const auto f = random_step(rng, dom, 6, 6), g = random_step(rng, dom, 6, 6), h = random_step(rng, dom, 6, 6);
    const MeshFunction base[] = {f, h};
    const auto s = build_cz_sparse(base, GridId{t % 2 == 0 ? 0u : 1u}, CubePolicy::all_grids(dom, 6));
    const MeshFunction a1[] = {f, h}, a2[] = {g, h};
    const MeshFunction sum[] = {f.zip(g, [](double x, double y) { return x + y; }), h};
    const MeshFunction sc[] = {f.map([](double x) { return 2.5 * x; }), h};
    const auto ra = sparse_apply(s, a1), rb = sparse_apply(s, a2), rs = sparse_apply(s, sum), rc = sparse_apply(s, sc);
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(rs[i] == doctest::Approx(ra[i] + rb[i]).epsilon(1e-12));
      CHECK(rc[i] == doctest::Approx(2.5 * ra[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("domination by sparse operators") {
  std::mt19937_64 rng(47);
  const DomainBox dom{1, 0};
  MeshFunction z = MeshFunction::constant(dom, 5, 0.0);
  const MeshFunction zs[] = {z};
  CHECK(domination_check(zs, CubePolicy::all_grids(dom, 5)).pass);
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + t % 2;
    std::vector<MeshFunction> fs;
    for (int i = 0; i < m; ++i) fs.push_back(random_step(rng, dom, 7, 5, 0.3));
    const auto rep = domination_check(fs, CubePolicy::all_grids(dom, 7));
    CHECK(rep.bound == std::pow(24.0, m));
    CHECK(rep.pass);
  }
}

TEST_CASE("duality identity") {
  std::mt19937_64 rng(53);
  const DomainBox dom{1, 0};
  for (int t = 0; t < 12; ++t) {
    const int m = 1 + t % 2;
    const int l = t % 3;
    std::vector<MeshFunction> fs;
    for (int i = 0; i < m; ++i) fs.push_back(random_step(rng, dom, 7, 6));
    const auto g = random_step(rng, dom, 7, 7);
    const auto s = restrict_to_domain(build_cz_sparse(fs, GridId{0}, CubePolicy::all_grids(dom, 7)));
    for (unsigned a = 0; a < 2; ++a) {
      const auto rep = duality_check(s, fs, g, l, GridId{a});
      CHECK(rep.relative_error <= 1e-10);
    }
  }
  // Trivial cases.
  SparseFamily one{GridId{0}, dom, 3, 0.0, {{0, {DyadicCube{GridId{0}, 1, {0}}}}}};
  const MeshFunction ones[] = {MeshFunction::constant(dom, 3, 1.0), MeshFunction::constant(dom, 3, 1.0)};
  const auto zero = duality_check(one, ones, MeshFunction::constant(dom, 3, 0.0), 1, GridId{0});
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  const auto eq = duality_check(one, ones, ones[0], 0, GridId{0});
  CHECK(eq.lhs == doctest::Approx(0.5));
  CHECK(eq.rhs == doctest::Approx(eq.lhs));
}

TEST_CASE("auxiliary operator hand expansion") {
  const DomainBox dom{1, 0};
  const auto f1 = line4({1, 2, 3, 4});
  const auto g = line4({1, 1, 1, 1});
  SparseFamily one{GridId{0}, dom, 2, 0.0, {{0, {DyadicCube{GridId{0}, 2, {1}}}}}};
  const MeshFunction head[] = {f1};
  const auto part = cover_partition(one, 1);
  REQUIRE(part.size() == 1);
  const Box p = part[0].cover.box();
  const double want = f1.average(p) * (0.25 / p.measure());
  const auto m = aux_form_apply(one, head, g, 1, part[0].alpha);
  for (std::size_t i = 0; i < 4; ++i) {
    const Box c = m.domain().box();
    (void)c;
    const Box cell = g.cell_box(i);
    const auto ov = cell.intersect(p);
    const double frac = ov ? ov->measure() / cell.measure() : 0.0;
    CHECK(m[i] == doctest::Approx(want * frac));
  }
  const auto z = aux_form_apply(one, head, MeshFunction::constant(dom, 2, 0.0), 1, part[0].alpha);
  for (double v : z.values()) CHECK(v == 0.0);
}

TEST_CASE("term distribution and weak profile") {
  const std::vector<BoxTerm> t = {{Box{{0.0}, {0.5}}, 1.0}, {Box{{0.25}, {1.0}}, 2.0}};
  const auto d = term_distribution(t, Box{{0.0}, {1.0}});
  double m1 = 0, m3 = 0, m2 = 0;
  for (const auto& a : d) {
    if (a.value == 1.0) m1 += a.measure;
    if (a.value == 3.0) m3 += a.measure;
    if (a.value == 2.0) m2 += a.measure;
  }
  CHECK(m1 == 0.25);
  CHECK(m3 == 0.25);
  CHECK(m2 == 0.5);
  // sup λ|{h>λ}| = max(3*0.25, 2*0.75, 1*1) = 1.5
  CHECK(weak_l1_profile(d, 1.0).value == doctest::Approx(1.5));
  CHECK_FALSE(weak_l1_profile(d, 0.0).defined);

  const DomainBox dom{1, 0};
  const DyadicCube q{GridId{0}, 2, {1}};
  SparseFamily one{GridId{0}, dom, 3, 0.0, {{0, {q}}}};
  const auto g = MeshFunction::from_cells(dom, 3, [&](const Box& c) { return q.box().contains(c) ? 1.0 : 0.0; });
  for (unsigned a = 0; a < 2; ++a) {
    const auto part = cover_partition(one, 1);
    if (part[0].alpha != GridId{a}) continue;
    CHECK(shifted_avg_profile(one, g, 1, GridId{a}).value == doctest::Approx(1.0));
  }
  SparseFamily none{GridId{0}, dom, 3, 0.0, {}};
  const auto nothing = shifted_avg_apply(none, g, 1, GridId{0});
  for (double v : nothing.values()) CHECK(v == 0.0);
}
