#include "dyadic/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "detail.hpp"
#include "dyadic/io.hpp"

namespace dyadic {

namespace {

double product_average(std::span<const MeshFunction> fs, const Box& b) {
  double p = 1.0;
  for (const auto& f : fs) p *= f.average(b);
  return p;
}

// Measure of R ∩ (union of one generation), exact for same-grid cubes.
class GenerationIndex {
 public:
  GenerationIndex(const std::vector<DyadicCube>& cubes, int coarsest) : coarsest_(coarsest) {
    for (const auto& q : cubes) {
      set_.insert(q);
      for (int k = q.k - 1; k >= coarsest; --k) below_[q.ancestor(k)] += q.measure();
    }
  }

  std::optional<DyadicCube> container(const DyadicCube& r) const {
    for (int k = r.k; k >= coarsest_; --k) {
      DyadicCube a = k == r.k ? r : r.ancestor(k);
      if (set_.count(a)) return a;
    }
    return std::nullopt;
  }

  double overlap(const DyadicCube& r) const {
    if (container(r)) return r.measure();
    const auto it = below_.find(r);
    return it == below_.end() ? 0.0 : it->second;
  }

 private:
  int coarsest_;
  std::set<DyadicCube> set_;
  std::map<DyadicCube, double> below_;
};

int coarsest_level(const SparseFamily& s) {
  int k = 0;
  bool any = false;
  for (const auto& [g, cubes] : s.generations)
    for (const auto& q : cubes) {
      k = any ? std::min(k, q.k) : q.k;
      any = true;
    }
  return k;
}

// Tree of grid cubes meeting the domain from a root containing the domain
// down to level kf, with products of averages and subtree maxima.
struct CubeTree {
  GridId grid;
  int n = 1;
  int k_root = 0;
  int kf = 0;
  struct Level {
    std::vector<std::int64_t> lo, hi, ext;
    std::vector<double> prod, submax;
  };
  std::vector<Level> levels;

  const Level& at(int k) const { return levels[k - k_root]; }

  std::optional<std::size_t> index(int k, const std::vector<std::int64_t>& j) const {
    const Level& lv = at(k);
    std::size_t idx = 0;
    for (int d = 0; d < n; ++d) {
      if (j[d] < lv.lo[d] || j[d] > lv.hi[d]) return std::nullopt;
      idx = idx * lv.ext[d] + static_cast<std::size_t>(j[d] - lv.lo[d]);
    }
    return idx;
  }

  std::vector<std::int64_t> coords(int k, std::size_t idx) const {
    const Level& lv = at(k);
    std::vector<std::int64_t> j(n);
    for (int d = n - 1; d >= 0; --d) {
      j[d] = lv.lo[d] + static_cast<std::int64_t>(idx % lv.ext[d]);
      idx /= lv.ext[d];
    }
    return j;
  }
};

CubeTree build_tree(std::span<const MeshFunction> fs, GridId alpha, int kf) {
  const DomainBox& dom = fs[0].domain();
  const int n = dom.n;
  const Box dbox = dom.box();
  CubeTree t;
  t.grid = alpha;
  t.n = n;
  t.kf = kf;
  int k = std::min(-dom.K, kf);
  while (!DyadicCube::containing(alpha, k, dbox.lo).box().contains(dbox)) --k;
  t.k_root = k;
  const int fine = std::max(kf, 0);
  const std::int64_t dom_units = std::int64_t{3} << (fine + dom.K);
  for (int lev = t.k_root; lev <= kf; ++lev) {
    CubeTree::Level lv;
    lv.lo.resize(n);
    lv.hi.resize(n);
    lv.ext.resize(n);
    const std::int64_t S = std::int64_t{1} << (fine - lev);
    std::size_t count = 1;
    for (int d = 0; d < n; ++d) {
      const std::int64_t b = alpha.shifted_in(d) ? shift_sign(lev) : 0;
      lv.lo[d] = detail::floor_div(-3 * S - b * S, 3 * S) + 1;
      lv.hi[d] = detail::ceil_div(dom_units - b * S, 3 * S) - 1;
      lv.ext[d] = lv.hi[d] - lv.lo[d] + 1;
      count *= static_cast<std::size_t>(lv.ext[d]);
    }
    lv.prod.resize(count);
    t.levels.push_back(std::move(lv));
    for (std::size_t i = 0; i < count; ++i) {
      const DyadicCube q{alpha, lev, t.coords(lev, i)};
      t.levels.back().prod[i] = product_average(fs, q.box());
    }
  }
  for (int lev = kf; lev >= t.k_root; --lev) {
    CubeTree::Level& lv = t.levels[lev - t.k_root];
    lv.submax = lv.prod;
    if (lev == kf) continue;
    for (std::size_t i = 0; i < lv.prod.size(); ++i) {
      const DyadicCube q{alpha, lev, t.coords(lev, i)};
      for (const auto& c : q.children())
        if (auto ci = t.index(lev + 1, c.j))
          lv.submax[i] = std::max(lv.submax[i], t.levels[lev + 1 - t.k_root].submax[*ci]);
    }
  }
  return t;
}

}  // namespace

std::size_t SparseFamily::size() const {
  std::size_t s = 0;
  for (const auto& [g, cubes] : generations) s += cubes.size();
  return s;
}

std::vector<DyadicCube> SparseFamily::cubes() const {
  std::vector<DyadicCube> out;
  for (const auto& [g, cubes] : generations) out.insert(out.end(), cubes.begin(), cubes.end());
  return out;
}

SparseReport verify_sparse(const SparseFamily& s) {
  SparseReport rep;
  rep.cubes = s.size();
  if (s.empty()) return rep;
  const int coarsest = coarsest_level(s);
  auto fail = [&](const std::string& inv, const std::string& detail) {
    if (rep.pass) {
      rep.pass = false;
      rep.invariant = inv;
      rep.detail = detail;
    }
  };
  for (const auto& [g, cubes] : s.generations)
    for (const auto& q : cubes)
      if (q.grid != s.grid || q.dim() != s.domain.n)
        fail("disjoint", "cube " + q.to_string() + " is not from grid " + std::to_string(s.grid.alpha));
  if (!rep.pass) return rep;

  std::map<int, GenerationIndex> index;
  for (const auto& [g, cubes] : s.generations) {
    std::set<DyadicCube> seen;
    for (const auto& q : cubes) {
      if (!seen.insert(q).second) fail("disjoint", "generation " + std::to_string(g) + " repeats " + q.to_string());
    }
    for (const auto& q : cubes) {
      for (int k = q.k - 1; k >= coarsest; --k)
        if (seen.count(q.ancestor(k))) {
          fail("disjoint", "generation " + std::to_string(g) + ": " + q.to_string() + " lies in " +
                               q.ancestor(k).to_string());
          break;
        }
    }
    index.emplace(g, GenerationIndex(cubes, coarsest));
  }

  for (auto it = s.generations.begin(); it != s.generations.end(); ++it) {
    const int g = it->first;
    const auto next = s.generations.find(g + 1);
    if (next != s.generations.end()) {
      const auto& idx = index.at(g);
      for (const auto& r : next->second)
        if (idx.overlap(r) != r.measure())
          fail("nested", "generation " + std::to_string(g + 1) + " cube " + r.to_string() +
                             " leaves Omega_" + std::to_string(g));
    } else if (std::next(it) != s.generations.end()) {
      fail("nested", "generation " + std::to_string(g + 1) + " is empty but later ones are not");
    }
    const GenerationIndex* nidx = next == s.generations.end() ? nullptr : &index.at(g + 1);
    for (const auto& q : it->second) {
      const double ov = nidx ? nidx->overlap(q) : 0.0;
      rep.worst_overlap = std::max(rep.worst_overlap, ov / q.measure());
      if (ov > 0.5 * q.measure())
        fail("half-overlap", "|Omega_" + std::to_string(g + 1) + " ∩ " + q.to_string() + "| = " +
                                 format_double(ov / q.measure()) + " |Q|");
      // E = Q \ Omega_{k+1}; kernels of one generation are disjoint with the
      // cubes, and kernels of different generations sit in nested differences.
      if (q.measure() > 2.0 * (q.measure() - ov))
        fail("kernel", "|E| < |Q|/2 for " + q.to_string());
    }
  }
  return rep;
}

GenerationBoundReport check_generation_bounds(const SparseFamily& s,
                                              std::span<const MeshFunction> fs) {
  GenerationBoundReport rep;
  if (s.empty()) return rep;
  const int m = static_cast<int>(fs.size());
  const double top = std::ldexp(1.0, m * s.domain.n);
  bool first = true;
  for (const auto& [g, cubes] : s.generations) {
    const double ak = std::pow(s.a, g);
    for (const auto& q : cubes) {
      const double v = product_average(fs, q.box());
      const double lower = v / ak;
      const double upper = v / (top * ak);
      if (first) {
        rep.min_lower_ratio = lower;
        rep.max_upper_ratio = upper;
        first = false;
      }
      rep.min_lower_ratio = std::min(rep.min_lower_ratio, lower);
      rep.max_upper_ratio = std::max(rep.max_upper_ratio, upper);
      if (!(v > ak) || v > top * ak * (1.0 + 1e-12)) {
        if (rep.pass) rep.witness = "generation " + std::to_string(g) + " cube " + q.to_string();
        rep.pass = false;
      }
    }
  }
  return rep;
}

SparseFamily build_cz_sparse(std::span<const MeshFunction> fs, GridId alpha,
                             const CubePolicy& policy) {
  if (fs.empty()) throw DomainError("sparse family needs at least one function");
  for (const auto& f : fs) {
    if (!f.same_mesh(fs[0])) throw DomainError("mismatched domains: inputs live on different meshes");
    for (double v : f.values())
      if (v < 0.0) throw DomainError("inputs must be nonnegative");
  }
  const DomainBox& dom = fs[0].domain();
  const int m = static_cast<int>(fs.size());
  if (alpha.alpha >= GridId::count(dom.n)) throw DomainError("grid id out of range");
  SparseFamily s;
  s.grid = alpha;
  s.domain = dom;
  s.level = fs[0].level();
  s.a = std::ldexp(1.0, m * (dom.n + 1));
  const int kf = std::min(policy.kmax, s.level);
  const CubeTree t = build_tree(fs, alpha, kf);
  const DyadicCube root = DyadicCube::containing(alpha, t.k_root, dom.box().lo);
  const std::size_t ri = *t.index(t.k_root, root.j);
  const double v_root = t.at(t.k_root).prod[ri];
  const double v_max = t.at(t.k_root).submax[ri];
  if (!(v_root > 0.0)) return s;

  auto level_of = [&](double v) {
    // largest k with a^k < v
    int k = static_cast<int>(std::floor(std::log(v) / std::log(s.a)));
    while (std::pow(s.a, k) >= v) --k;
    while (std::pow(s.a, k + 1) < v) ++k;
    return k;
  };
  const int k_lo = level_of(v_root);
  const int k_hi = level_of(v_max);

  for (int g = k_lo; g <= k_hi; ++g) {
    const double ak = std::pow(s.a, g);
    std::vector<DyadicCube> out;
    if (v_root > ak) {
      DyadicCube q = root;
      while (true) {
        const DyadicCube p = q.parent();
        if (!(product_average(fs, p.box()) > ak)) break;
        q = p;
      }
      out.push_back(q);
    } else {
      std::vector<std::pair<int, std::size_t>> stack{{t.k_root, ri}};
      while (!stack.empty()) {
        const auto [k, i] = stack.back();
        stack.pop_back();
        const auto& lv = t.at(k);
        if (!(lv.submax[i] > ak)) continue;
        const DyadicCube q{alpha, k, t.coords(k, i)};
        if (lv.prod[i] > ak) {
          out.push_back(q);
          continue;
        }
        if (k == kf) continue;
        for (const auto& c : q.children())
          if (auto ci = t.index(k + 1, c.j)) stack.emplace_back(k + 1, *ci);
      }
    }
    std::sort(out.begin(), out.end());
    if (!out.empty()) s.generations[g] = std::move(out);
  }
  return s;
}

SparseFamily restrict_to_domain(const SparseFamily& s) {
  SparseFamily out{s.grid, s.domain, s.level, s.a, {}};
  const int coarsest = coarsest_level(s);
  std::optional<GenerationIndex> prev_all, prev_kept;
  for (const auto& [g, cubes] : s.generations) {
    std::vector<DyadicCube> kept;
    for (const auto& q : cubes) {
      if (!s.domain.contains(q)) continue;
      // The first kept generation needs no container; later ones must nest.
      if (!out.empty()) {
        const auto c = prev_all->container(q);
        if (!c || !prev_kept->container(*c)) continue;
      }
      kept.push_back(q);
    }
    if (kept.empty() && !out.empty()) break;
    prev_all.emplace(cubes, coarsest);
    prev_kept.emplace(kept, coarsest);
    if (!kept.empty()) out.generations[g] = std::move(kept);
  }
  return out;
}

std::string format_family(const SparseFamily& s) {
  std::ostringstream os;
  os << "SPF 1\n"
     << s.grid.alpha << ' ' << s.domain.n << ' ' << s.domain.K << ' ' << s.level << ' '
     << format_double(s.a) << '\n'
     << s.size() << '\n';
  for (const auto& [g, cubes] : s.generations)
    for (const auto& q : cubes) {
      os << g;
      for (auto j : q.j) os << ' ' << j;
      os << ' ' << q.k << '\n';
    }
  return os.str();
}

SparseFamily parse_family(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line() || line.rfind("SPF 1", 0) != 0) throw ParseError("expected header 'SPF 1'", lineno);
  SparseFamily s;
  {
    if (!next_line()) throw ParseError("missing 'grid n K L a' line", lineno + 1);
    std::istringstream h(line);
    if (!(h >> s.grid.alpha >> s.domain.n >> s.domain.K >> s.level >> s.a) || s.domain.n < 1 ||
        s.grid.alpha >= GridId::count(s.domain.n))
      throw ParseError("malformed 'grid n K L a' line", lineno);
  }
  std::size_t count = 0;
  {
    if (!next_line()) throw ParseError("missing cube count", lineno + 1);
    std::istringstream h(line);
    if (!(h >> count)) throw ParseError("malformed cube count", lineno);
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!next_line()) throw ParseError("expected " + std::to_string(count) + " cubes", lineno);
    std::istringstream h(line);
    int g = 0;
    DyadicCube q{s.grid, 0, std::vector<std::int64_t>(s.domain.n)};
    if (!(h >> g)) throw ParseError("malformed cube line", lineno);
    for (auto& j : q.j)
      if (!(h >> j)) throw ParseError("malformed cube line", lineno);
    std::string extra;
    if (!(h >> q.k) || (h >> extra)) throw ParseError("malformed cube line", lineno);
    s.generations[g].push_back(q);
  }
  if (next_line()) throw ParseError("trailing data after cube list", lineno);
  return s;
}

}  // namespace dyadic
