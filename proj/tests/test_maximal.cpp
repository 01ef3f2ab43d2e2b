#include <cmath>
#include <random>

#include "doctest.h"
#include "dyadic/maximal.hpp"

using namespace dyadic;

namespace {

MeshFunction line4(std::vector<double> v) { return MeshFunction(DomainBox{1, 0}, 2, std::move(v)); }

// Oracle: for each cell, walk the standard-grid ancestors by hand.
std::vector<double> ancestor_max(const std::vector<std::vector<double>>& fs, int L) {
  const std::size_t N = fs[0].size();
  std::vector<double> out(N, 0.0);
  for (std::size_t c = 0; c < N; ++c) {
    for (int k = 0; k <= L; ++k) {
      const std::size_t width = N >> k;
      const std::size_t start = (c / width) * width;
      double prod = 1.0;
      for (const auto& f : fs) {
        double s = 0.0;
        for (std::size_t i = start; i < start + width; ++i) s += f[i];
        prod *= s / width;
      }
      out[c] = std::max(out[c], prod);
    }
  }
  return out;
}

MeshFunction random_mesh(std::mt19937_64& rng, DomainBox dom, int L) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return MeshFunction::from_cells(dom, L, [&](const Box&) { return std::exp(3.0 * u(rng)); });
}

}  // namespace

TEST_CASE("dyadic maximal examples") {
  const CubePolicy pol = CubePolicy::standard(DomainBox{1, 0}, 2);
  const MeshFunction one[] = {line4({1, 2, 3, 4})};
  const auto r = dyadic_multilinear_maximal(one, GridId{0}, pol);
  const double want[] = {2.5, 2.5, 3.5, 4};
  for (int i = 0; i < 4; ++i) CHECK(r.values[i] == doctest::Approx(want[i]));

  const MeshFunction two[] = {line4({1, 2, 3, 4}), line4({4, 3, 2, 1})};
  const auto r2 = dyadic_multilinear_maximal(two, GridId{0}, pol);
  for (int i = 0; i < 4; ++i) CHECK(r2.values[i] == doctest::Approx(6.25));

  const MeshFunction c[] = {MeshFunction::constant(DomainBox{2, 0}, 3, 1.7)};
  const auto rc = multilinear_maximal(c, CubePolicy::all_grids(DomainBox{2, 0}, 3));
  for (double v : rc.lower.values()) CHECK(v == doctest::Approx(1.7));
}

TEST_CASE("dyadic maximal matches the ancestor oracle on random data") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int t = 0; t < 20; ++t) {
    const int L = 5;
    std::vector<std::vector<double>> raw(2, std::vector<double>(32));
    for (auto& f : raw)
      for (auto& v : f) v = u(rng);
    const MeshFunction fs[] = {MeshFunction(DomainBox{1, 0}, L, raw[0]),
                               MeshFunction(DomainBox{1, 0}, L, raw[1])};
    const auto got = dyadic_multilinear_maximal(fs, GridId{0}, CubePolicy::standard(DomainBox{1, 0}, L));
    const auto want = ancestor_max(raw, L);
    for (int i = 0; i < 32; ++i) CHECK(got.values[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("grid-combined maximal and envelope") {
  const DomainBox dom{1, 0};
  const MeshFunction fs[] = {line4({0, 0, 0, 1})};
  const auto pol = CubePolicy::all_grids(dom, 2);
  const auto comb = multilinear_maximal(fs, pol);
  const auto stdm = dyadic_multilinear_maximal(fs, GridId{0}, pol);
  CHECK(comb.lower[1] >= stdm.values[1]);
  for (std::size_t i = 0; i < 4; ++i) CHECK(comb.lower[i] <= comb.envelope[i]);

  std::mt19937_64 rng(2);
  const DomainBox d2{2, 0};
  const MeshFunction gs[] = {random_mesh(rng, d2, 3), random_mesh(rng, d2, 3)};
  const auto c2 = multilinear_maximal(gs, CubePolicy::all_grids(d2, 3));
  for (std::size_t i = 0; i < c2.lower.size(); ++i) CHECK(c2.lower[i] <= c2.envelope[i]);
}

TEST_CASE("weighted maximal examples") {
  const auto pol = CubePolicy::standard(DomainBox{1, 0}, 2);
  const auto ones = line4({1, 1, 1, 1});
  const auto f = line4({1, 0, 0, 0});
  const auto a = weighted_dyadic_maximal(f, ones, GridId{0}, pol);
  const MeshFunction fs[] = {f};
  const auto b = dyadic_multilinear_maximal(fs, GridId{0}, pol);
  for (int i = 0; i < 4; ++i) CHECK(a.values[i] == doctest::Approx(b.values[i]));

  const auto s = line4({0.5, 2, 3, 7});
  const auto self = weighted_dyadic_maximal(s, s, GridId{0}, pol);
  for (int i = 0; i < 4; ++i) CHECK(self.values[i] == doctest::Approx(1.0));

  const MeshFunction two[] = {line4({1, 2, 3, 4}), line4({4, 3, 2, 1})};
  const MeshFunction sig[] = {ones, ones};
  const auto m2 = multilinear_weighted_maximal(two, sig, GridId{0}, pol);
  const auto m2u = dyadic_multilinear_maximal(two, GridId{0}, pol);
  for (int i = 0; i < 4; ++i) CHECK(m2.values[i] == doctest::Approx(m2u.values[i]));
  const MeshFunction bad[] = {line4({1, 0, 1, 1}), ones};
  CHECK_THROWS_AS(multilinear_weighted_maximal(two, bad, GridId{0}, pol), DomainError);
}

TEST_CASE("power averages") {
  const auto f = line4({1, 2, 3, 4});
  CHECK(power_average(f, 2.0, Box{{0.0}, {1.0}}) == doctest::Approx(std::sqrt(30.0 / 4.0)));
  CHECK(power_average(f, 1.0, Box{{0.25}, {1.0}}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(power_average(f, 0.5, Box{{0.0}, {1.0}}), DomainError);
  const auto c = power_maximal(MeshFunction::constant(DomainBox{1, 0}, 3, 2.0), 3.0,
                               CubePolicy::all_grids(DomainBox{1, 0}, 3));
  for (double v : c.values.values()) CHECK(v == doctest::Approx(2.0));
}

TEST_CASE("monotonicity, homogeneity and Holder dominance") {
  std::mt19937_64 rng(9);
  const DomainBox dom{1, 1};
  const auto pol = CubePolicy::all_grids(dom, 4);
  for (int t = 0; t < 10; ++t) {
    const auto f = random_mesh(rng, dom, 4);
    const auto g = random_mesh(rng, dom, 4);
    const auto fg = f.zip(g, [](double a, double b) { return a + b; });
    const MeshFunction a1[] = {f};
    const MeshFunction a2[] = {fg};
    const auto mf = multilinear_maximal(a1, pol).lower;
    const auto mfg = multilinear_maximal(a2, pol).lower;
    for (std::size_t i = 0; i < mf.size(); ++i) CHECK(mf[i] <= mfg[i]);

    const MeshFunction pair[] = {f, g};
    const MeshFunction scaled[] = {f.map([](double v) { return 3.0 * v; }),
                                   g.map([](double v) { return 0.5 * v; })};
    const auto mp = multilinear_maximal(pair, pol).lower;
    const auto ms = multilinear_maximal(scaled, pol).lower;
    const MeshFunction gg[] = {g};
    const auto mg = multilinear_maximal(gg, pol).lower;
    for (std::size_t i = 0; i < mp.size(); ++i) {
      CHECK(ms[i] == doctest::Approx(1.5 * mp[i]).epsilon(1e-12));
      CHECK(mp[i] <= mf[i] * mg[i] * (1 + 1e-12));
    }
  }
}

TEST_CASE("factorization identity holds on every cube") {
  std::mt19937_64 rng(21);
  const DomainBox dom{1, 0};
  for (int t = 0; t < 10; ++t) {
    const double r = 2.0 + t * 0.25;
    const MeshFunction w[] = {random_mesh(rng, dom, 4), random_mesh(rng, dom, 4)};
    const MeshFunction f[] = {random_mesh(rng, dom, 4), random_mesh(rng, dom, 4)};
    const double pw = 1.0 / 2.0 * r;  // p = r/m
    const MeshFunction sig[] = {w[0].map([r](double v) { return std::pow(v, 1.0 - r / (r - 1.0)); }),
                                w[1].map([r](double v) { return std::pow(v, 1.0 - r / (r - 1.0)); })};
    const auto nu = w[0].zip(w[1], [&](double a, double b) {
      return std::pow(a, pw / r) * std::pow(b, pw / r);
    });
    for_each_cube(CubePolicy::all_grids(dom, 4), dom, [&](const DyadicCube& q) {
      const auto s = factorization_sides(f, nu, sig, r, q.box());
      CHECK(s.relative_error() <= 1e-10);
    });
  }
}

TEST_CASE("power maximal integral by shells") {
  // f = x^{-1/2}: M^{D([0,1))} f at x in [2^{-i-1}, 2^{-i}) is the average over [0, 2^{-i}),
  // which is 2 * 2^{i/2}; the integral is sum_i 2^{-i-1} * 2 * 2^{i/2}.
  const PowerFunction f(1.0, -0.5, 0);
  const PowerFunction one(1.0, 0.0, 0);
  const PowerFunction fs[] = {f};
  double want = 0.0;
  for (int i = 0; i < 200; ++i) want += std::ldexp(1.0, -i - 1) * 2.0 * std::pow(2.0, i / 2.0);
  CHECK(power_maximal_integral(fs, one, 1.0, 1.0, 8) == doctest::Approx(want).epsilon(1e-12));

  const PowerFunction g(1.0, -0.75, 0);
  const PowerFunction gs[] = {g};
  CHECK_THROWS_AS(power_maximal_integral(gs, one, 2.0, 1.0, 4), DomainError);

  // Increasing power: the maximal function on [0,1) is dominated by the whole-cube average
  // near 0 and by local averages near 1; compare with a fine local descent.
  const PowerFunction h(1.0, 1.5, 0);
  const PowerFunction hs[] = {h};
  const Density hd[] = {h};
  const double shells = power_maximal_integral(hs, one, 1.0, 1.0, 12);
  const double local = local_maximal_integral(hd, one, 1.0, Box{{0.0}, {1.0}}, 16);
  CHECK(shells == doctest::Approx(local).epsilon(1e-3));
}
