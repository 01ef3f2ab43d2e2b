#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "dyadic/grid.hpp"
#include "dyadic/io.hpp"
#include "dyadic/mesh.hpp"

using namespace dyadic;

namespace {

MeshFunction line4(std::vector<double> v) { return MeshFunction(DomainBox{1, 0}, 2, std::move(v)); }

// Slow oracle: integral over a box by visiting every cell and multiplying overlaps.
double direct_integral(const MeshFunction& f, const Box& b) {
  long double acc = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Box c = f.cell_box(i);
    double ov = 1.0;
    for (int d = 0; d < f.dim(); ++d)
      ov *= std::max(0.0, std::min(c.hi[d], b.hi[d]) - std::max(c.lo[d], b.lo[d]));
    acc += f[i] * ov;
  }
  return static_cast<double>(acc);
}

// Oracle cover: scan every grid cube at scales 2^{-k} <= 6 l(Q) and keep the smallest containing Q.
std::optional<double> brute_cover_side(const Box& q, GridId g) {
  const double lq = q.side();
  for (int k = 12; k >= -3; --k) {
    const double side = std::ldexp(1.0, -k);
    if (side < lq) continue;
    if (side > 6.0 * lq) break;
    const double t = g.shifted_in(0) ? shift_sign(k) / 3.0 : 0.0;
    for (long j = -20 * (1L << std::max(k, 0)); j <= 20 * (1L << std::max(k, 0)); ++j) {
      const double lo = side * (j + t);
      if (lo <= q.lo[0] && lo + side >= q.hi[0]) return side;
    }
  }
  return std::nullopt;
}

}  // namespace

TEST_CASE("grid ids and cube geometry") {
  CHECK(GridId::count(1) == 2);
  CHECK(GridId::count(3) == 8);
  CHECK_FALSE(GridId{0}.shifted_in(0));
  DyadicCube q{GridId{1}, 1, {0}};
  CHECK(q.box().lo[0] == doctest::Approx(-1.0 / 6.0));
  CHECK(q.side() == 0.5);
  for (const auto& c : q.children()) CHECK(c.parent() == q);
  DyadicCube r{GridId{1}, 2, {3}};
  CHECK(q.contains(DyadicCube{GridId{1}, 3, {1}}) == q.box().contains(DyadicCube{GridId{1}, 3, {1}}.box()));
  (void)r;
}

TEST_CASE("tiling: policy cubes at each level partition the domain") {
  for (int n = 1; n <= 2; ++n) {
    DomainBox dom{n, 1};
    for (unsigned a = 0; a < GridId::count(n); ++a) {
      for (int k = -1; k <= 3; ++k) {
        double total = 0.0;
        std::vector<Box> boxes;
        for_each_cube_at(GridId{a}, k, dom, [&](const DyadicCube& q) {
          boxes.push_back(q.box());
        });
        // Clipped tiles: union of full cubes plus the strips the shifted grid leaves at the edge.
        DyadicCube probe{GridId{a}, k, std::vector<std::int64_t>(n, 0)};
        for (const Box& b : boxes) total += b.measure();
        if (a == 0) CHECK(total == dom.measure());
        else CHECK(total <= dom.measure());
        (void)probe;
      }
    }
  }
}

TEST_CASE("nesting: same-grid cubes are nested or disjoint") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 2000; ++trial) {
    const GridId g{static_cast<unsigned>(rng() % 2)};
    DyadicCube a{g, static_cast<int>(rng() % 6), {static_cast<std::int64_t>(rng() % 16) - 4}};
    DyadicCube b{g, static_cast<int>(rng() % 6), {static_cast<std::int64_t>(rng() % 16) - 4}};
    const auto ov = a.box().intersect(b.box());
    if (!ov || ov->measure() == 0.0) continue;
    const double m = ov->measure();
    CHECK((m == doctest::Approx(a.measure()) || m == doctest::Approx(b.measure())));
    if (a.k <= b.k) CHECK(a.contains(b));
  }
}

TEST_CASE("shifted_cover examples") {
  const auto p = shifted_cover(Box{{0.0}, {1.0}}, GridId{0});
  REQUIRE(p);
  CHECK(p->side() == 1.0);

  const Box q{{0.49}, {0.51}};
  double best = 1e9;
  for (unsigned a = 0; a < 2; ++a)
    if (auto c = shifted_cover(q, GridId{a})) best = std::min(best, c->side());
  CHECK(best <= 6.0 * 0.02);

  const Box q2{{0.3}, {0.55}};
  for (unsigned a = 0; a < 2; ++a) {
    const auto got = shifted_cover(q2, GridId{a});
    const auto want = brute_cover_side(q2, GridId{a});
    CHECK(got.has_value() == want.has_value());
    if (got && want) CHECK(got->side() == *want);
  }
}

TEST_CASE("covering property over random cubes") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 2; ++n) {
    for (int t = 0; t < 1000; ++t) {
      const double side = std::exp2(-8.0 * u(rng)) * 0.9;
      std::vector<double> lo(n);
      for (auto& x : lo) x = u(rng) * (1.0 - side);
      const Box q = Box::cube(lo, side);
      double best = 1e9;
      for (unsigned a = 0; a < GridId::count(n); ++a)
        if (auto c = shifted_cover(q, GridId{a})) {
          CHECK(c->box().contains(q));
          best = std::min(best, c->side());
        }
      CHECK(best <= 6.0 * side);
    }
  }
}

TEST_CASE("dilated_cover") {
  DomainBox dom{1, 0};
  DyadicCube q{GridId{0}, 2, {1}};
  for (unsigned a = 0; a < 2; ++a) {
    const auto l0 = dilated_cover(q, 0, GridId{a}, dom);
    const auto direct = shifted_cover(q.box(), GridId{a});
    CHECK(l0.cover.has_value() == direct.has_value());
    if (direct) CHECK(*l0.cover == *direct);
  }
  bool found = false;
  for (unsigned a = 0; a < 2; ++a) {
    const auto c = dilated_cover(q, 1, GridId{a}, dom);
    CHECK(c.dilate.lo[0] == 0.125);
    CHECK(c.dilate.hi[0] == 0.625);
    if (c.cover) {
      found = true;
      CHECK(c.cover->box().contains(c.dilate));
      CHECK(c.cover->side() <= 3.0);
    }
  }
  CHECK(found);
  CHECK_THROWS_AS(dilated_cover(DyadicCube{GridId{0}, 0, {1}}, 0, GridId{0}, dom), DomainError);
}

TEST_CASE("box averages") {
  const auto f = line4({1, 2, 3, 4});
  CHECK(f.average(Box{{0.0}, {0.5}}) == doctest::Approx(1.5));
  CHECK(MeshFunction::constant(DomainBox{2, 1}, 2, 3.5).average(Box{{0.1, 0.2}, {0.7, 1.3}}) ==
        doctest::Approx(3.5));
  CHECK_THROWS(f.average(Box{{0.5}, {0.5}}));
  const PowerFunction pf(1.0, -1.0 + 0.125, 0);
  CHECK(pf.average(Box{{0.0}, {1.0}}) == doctest::Approx(8.0));
  CHECK_THROWS_AS(PowerFunction(1.0, -1.0, 0), DomainError);
}

TEST_CASE("prefix table matches direct summation on random boxes") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int n = 1; n <= 2; ++n) {
    DomainBox dom{n, 1};
    const int L = n == 1 ? 6 : 3;
    auto f = MeshFunction::from_cells(dom, L, [&](const Box&) { return u(rng) * 10.0; });
    CHECK(f.integral() == doctest::Approx(direct_integral(f, dom.box())).epsilon(1e-12));
    for (int t = 0; t < 1000; ++t) {
      Box b{std::vector<double>(n), std::vector<double>(n)};
      for (int d = 0; d < n; ++d) {
        double x = u(rng) * 2.0, y = u(rng) * 2.0;
        b.lo[d] = std::min(x, y);
        b.hi[d] = std::max(x, y) + 1e-3;
      }
      const double want = direct_integral(f, b);
      CHECK(std::abs(f.integral(b) - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("rearrangement") {
  const auto f = line4({1, 2, 3, 4});
  const Box r{{0.0}, {1.0}};
  CHECK(rearrangement_value(f, r, 0.5) == 2.0);
  CHECK(rearrangement_value(MeshFunction::constant(DomainBox{1, 0}, 3, 2.5), r, 0.3) == 2.5);
  CHECK_THROWS(rearrangement_value(f, r, 0.0));
  CHECK_THROWS(rearrangement_value(f, r, 1.5));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  auto h = MeshFunction::from_cells(DomainBox{1, 0}, 6, [&](const Box&) { return g(rng); });
  auto ha = h.map([](double v) { return std::abs(v); });
  double prev = 1e300;
  for (int i = 1; i <= 64; ++i) {
    const double t = i / 64.0;
    const double v = rearrangement_value(h, r, t);
    CHECK(v <= prev);
    CHECK(v == rearrangement_value(ha, r, t));
    prev = v;
  }
}

TEST_CASE("weighted norms") {
  const auto one = MeshFunction::constant(DomainBox{2, 0}, 2, 1.0);
  CHECK(weighted_lp_norm(one, one, 3.0) == doctest::Approx(1.0));
  const auto f = line4({1, 2, 3, 4});
  CHECK(weighted_lp_norm(f, line4({1, 1, 1, 1}), 2.0) == doctest::Approx(std::sqrt(30.0 / 4.0)));

  // f_i = x^{-1+eps}, w_i = x^{(1-eps)(p_i-1)}: ||f_i||_{L^{p_i}(w_i)} = (1/eps)^{1/p_i}.
  const double eps = 0.125;
  for (double pi : {1.5, 2.0, 3.0}) {
    const PowerFunction fi(1.0, -1.0 + eps, 0);
    const PowerFunction wi(1.0, (1.0 - eps) * (pi - 1.0), 0);
    CHECK(weighted_lp_norm(fi, wi, pi) == doctest::Approx(std::pow(1.0 / eps, 1.0 / pi)));
  }
  CHECK_THROWS_AS(weighted_lp_norm(PowerFunction(1.0, -0.5, 0), PowerFunction(1.0, -0.5, 0), 2.0),
                  DomainError);
}

TEST_CASE("MFN round trip and parse errors") {
  const auto f = line4({1.0, 0.1, 1.0 / 3.0, 4e-300});
  const auto g = parse_mesh(format_mesh(f));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] == g[i]);

  const auto path = std::filesystem::temp_directory_path() / "dyadic_roundtrip.mfn";
  store_mesh(f, path);
  const auto h = load_mesh(path);
  CHECK(file_checksum(path) == checksum(format_mesh(h)));
  std::filesystem::remove(path);

  try {
    parse_mesh("MFN 1\n1 0 2\n1 2 3\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_mesh("MFN 2\n1 0 2\n1 2 3 4\n"), ParseError);
  CHECK_THROWS_AS(parse_mesh("MFN 1\n1 0 2\n1 2 nan 4\n"), ParseError);
  CHECK_THROWS_AS(parse_mesh("MFN 1\n1 0 2\n1 2 x 4\n"), ParseError);
}
