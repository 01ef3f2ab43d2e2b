#include <cmath>
#include <random>

#include "doctest.h"
#include "dyadic/weights.hpp"

using namespace dyadic;

namespace {

MeshFunction line4(std::vector<double> v) { return MeshFunction(DomainBox{1, 0}, 2, std::move(v)); }

MeshFunction random_weight(std::mt19937_64& rng, DomainBox dom, int L, double spread = 3.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return MeshFunction::from_cells(dom, L, [&](const Box&) { return std::exp(spread * u(rng)); });
}

// Oracle for the standard-grid A_inf on [0,1) with n = 1: per cell, walk the
// standard-grid cubes inside Q containing the cell (cubes outside Q add nothing
// beyond their part in Q and are dominated by the cube Q itself).
double ainfty_standard_oracle(const std::vector<double>& w) {
  const std::size_t N = w.size();
  int L = 0;
  while ((std::size_t{1} << L) < N) ++L;
  double best = 0.0;
  for (int kq = 0; kq <= L; ++kq) {
    const std::size_t wq = N >> kq;
    for (std::size_t s = 0; s < N; s += wq) {
      double mass = 0.0;
      for (std::size_t i = s; i < s + wq; ++i) mass += w[i];
      double integ = 0.0;
      for (std::size_t c = s; c < s + wq; ++c) {
        double m = 0.0;
        for (int k = 0; k <= L; ++k) {
          const std::size_t width = N >> k;
          const std::size_t st = (c / width) * width;
          double in = 0.0;
          for (std::size_t i = std::max(st, s); i < std::min(st + width, s + wq); ++i) in += w[i];
          m = std::max(m, in / width);
        }
        integ += m;
      }
      best = std::max(best, integ / mass);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("dual and product weights") {
  const MeshFunction w(DomainBox{1, 0}, 1, {1.0, 4.0});
  const auto s = std::get<MeshFunction>(dual_weight(w, 2.0));
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(0.25));
  const auto one = std::get<MeshFunction>(dual_weight(MeshFunction::constant(DomainBox{1, 0}, 2, 1.0), 3.0));
  for (double v : one.values()) CHECK(v == 1.0);

  const double eps = 0.125;
  for (double pi : {1.5, 2.0, 4.0}) {
    const auto sp = std::get<PowerFunction>(dual_weight(PowerFunction(1.0, (1 - eps) * (pi - 1), 0), pi));
    CHECK(sp.exponent == doctest::Approx(-(1 - eps)));
  }

  const auto ws = WeightSystem::make({line4({1, 2, 3, 4}), line4({4, 1, 1, 2})}, {2.0, 3.0});
  CHECK(1.0 / ws.p == doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-12));
  const auto& nu = std::get<MeshFunction>(ws.nu);
  CHECK(nu[0] == doctest::Approx(std::pow(1.0, ws.p / 2) * std::pow(4.0, ws.p / 3)));
  CHECK_THROWS_AS(WeightSystem::make({line4({1, 0, 1, 1})}, {2.0}), DomainError);
  CHECK_THROWS_AS(WeightSystem::make({line4({1, 1, 1, 1})}, {1.0}), DomainError);
}

TEST_CASE("A_p and A_P constants") {
  const DomainBox dom{1, 0};
  const auto pol = CubePolicy::all_grids(dom, 2);
  CHECK(ap_constant(MeshFunction::constant(dom, 2, 3.0), 2.0, pol).value == doctest::Approx(1.0));

  // Brute-force oracle for w = [1,4,1,4], p = 2 over the same cube list.
  const auto w = line4({1, 4, 1, 4});
  double want = 0.0;
  for_each_cube(pol, dom, [&](const DyadicCube& q) {
    const Box b = q.box();
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double ov = std::max(0.0, std::min(b.hi[0], (i + 1) * 0.25) - std::max(b.lo[0], i * 0.25));
      s1 += w[i] * ov;
      s2 += ov / w[i];
    }
    want = std::max(want, (s1 / b.measure()) * (s2 / b.measure()));
  });
  const auto rep = ap_constant(w, 2.0, pol);
  CHECK(rep.value == doctest::Approx(want).epsilon(1e-12));
  REQUIRE(rep.attained);

  const auto ones = WeightSystem::make({line4({1, 1, 1, 1}), line4({1, 1, 1, 1})}, {2.0, 2.0});
  CHECK(apvec_constant(ones, pol).value == doctest::Approx(1.0));

  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto wi = random_weight(rng, dom, 4);
    const auto single = WeightSystem::make({wi}, {2.5});
    const auto pol4 = CubePolicy::all_grids(dom, 4);
    CHECK(apvec_constant(single, pol4).value ==
          doctest::Approx(ap_constant(wi, 2.5, pol4).value).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ap_constant(w, 2.0, CubePolicy{{}, 0, 2}), DomainError);
}

TEST_CASE("policy refinement never decreases constants") {
  std::mt19937_64 rng(8);
  const DomainBox dom{1, 1};
  for (int t = 0; t < 5; ++t) {
    const auto w = random_weight(rng, dom, 4);
    const auto small = CubePolicy::standard(dom, 3);
    const auto big = CubePolicy::all_grids(dom, 4);
    CHECK(ap_constant(w, 2.0, small).value <= ap_constant(w, 2.0, big).value);
    CHECK(ainfty_constant(w, small).value <= ainfty_constant(w, big).value * (1 + 1e-12));
  }
}

TEST_CASE("A_inf constant") {
  const DomainBox dom{1, 0};
  CHECK(ainfty_constant(MeshFunction::constant(dom, 3, 2.0), CubePolicy::all_grids(dom, 3)).value ==
        doctest::Approx(1.0));
  const DomainBox d2{2, 0};
  CHECK(ainfty_constant(MeshFunction::constant(d2, 2, 2.0), CubePolicy::all_grids(d2, 2)).value ==
        doctest::Approx(1.0));

  std::mt19937_64 rng(13);
  for (int t = 0; t < 10; ++t) {
    const auto w = random_weight(rng, dom, 4);
    std::vector<double> raw(w.values().begin(), w.values().end());
    CHECK(ainfty_constant(w, CubePolicy::standard(dom, 4)).value ==
          doctest::Approx(ainfty_standard_oracle(raw)).epsilon(1e-12));
    const auto pol = CubePolicy::all_grids(dom, 4);
    CHECK(ainfty_constant(w, pol).value <= 8.0 * ap_constant(w, 2.0, pol).value);
  }

  // sigma = x^{-(1-eps)}: A_inf grows like 1/eps.
  for (double eps : {0.25, 0.125}) {
    const auto v = ainfty_constant(PowerFunction(1.0, -(1.0 - eps), 0), CubePolicy::standard(DomainBox{1, 0}, 3), 8);
    CHECK(v.value * eps > 0.3);
    CHECK(v.value * eps < 2.0);
  }
}

TEST_CASE("reverse Holder") {
  const DomainBox dom{1, 0};
  const auto c = reverse_holder_on_cube(MeshFunction::constant(dom, 2, 1.0), Box{{0.0}, {1.0}}, 1.5);
  CHECK(c.lhs == doctest::Approx(1.0));
  CHECK(c.rhs == doctest::Approx(2.0));

  const auto w = line4({1, 4, 1, 4});
  const double r = 1.3;
  const auto s = reverse_holder_on_cube(w, Box{{0.0}, {1.0}}, r);
  CHECK(s.lhs == doctest::Approx(std::pow((2 * 1.0 + 2 * std::pow(4.0, r)) / 4.0, 1.0 / r)));
  CHECK(s.rhs == doctest::Approx(2.0 * 2.5));

  std::mt19937_64 rng(19);
  for (int t = 0; t < 5; ++t) {
    const auto rep = reverse_holder_check(random_weight(rng, dom, 5), CubePolicy::all_grids(dom, 5));
    CHECK(rep.pass);
    CHECK(rep.r > 1.0);
    CHECK(rep.empirical_r_limit >= rep.r);
  }
}

TEST_CASE("dual-weight per-cube inequality") {
  const DomainBox dom{1, 0};
  const auto ones = WeightSystem::make({MeshFunction::constant(dom, 3, 1.0), MeshFunction::constant(dom, 3, 1.0)},
                                       {2.0, 2.0});
  const auto r1 = lemma31_check(ones, 1, CubePolicy::all_grids(dom, 3));
  CHECK(r1.sigma_aq == doctest::Approx(1.0));
  CHECK(r1.apvec_power == doctest::Approx(1.0));

  std::mt19937_64 rng(23);
  for (int t = 0; t < 50; ++t) {
    const auto ws = WeightSystem::make({random_weight(rng, dom, 4), random_weight(rng, dom, 4)}, {2.0, 2.0});
    for (int j = 1; j <= 2; ++j) {
      const auto rep = lemma31_check(ws, j, CubePolicy::all_grids(dom, 4));
      CHECK(rep.pass());
      CHECK(rep.sigma_aq <= rep.apvec_power * (1 + kExactSlack));
    }
  }
}
