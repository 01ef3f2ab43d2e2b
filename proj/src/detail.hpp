#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "dyadic/grid.hpp"

namespace dyadic::detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

/// Inclusive per-axis ranges of mesh cells (level `level`, N per axis) lying
/// entirely inside q. Returns false when no cell fits. Requires q.k <= level.
inline bool cells_inside(const DyadicCube& q, int level, std::int64_t N,
                         std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi) {
  const int n = q.dim();
  lo.resize(n);
  hi.resize(n);
  const std::int64_t side = std::int64_t{3} << (level - q.k);
  for (int d = 0; d < n; ++d) {
    const std::int64_t a = corner_units(q.k, q.j[d], q.grid.shifted_in(d), level);
    lo[d] = std::max<std::int64_t>(ceil_div(a, 3), 0);
    hi[d] = std::min<std::int64_t>(floor_div(a + side, 3), N) - 1;
    if (hi[d] < lo[d]) return false;
  }
  return true;
}

/// Inclusive per-axis ranges of mesh cells meeting the box of q with positive
/// measure. Returns false when none does.
inline bool cells_meeting(const DyadicCube& q, int level, std::int64_t N,
                          std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi) {
  const int n = q.dim();
  lo.resize(n);
  hi.resize(n);
  const int fine = std::max(level, q.k);
  const std::int64_t side = std::int64_t{3} << (fine - q.k);
  const std::int64_t cell = std::int64_t{3} << (fine - level);
  for (int d = 0; d < n; ++d) {
    const std::int64_t a = corner_units(q.k, q.j[d], q.grid.shifted_in(d), fine);
    lo[d] = std::max<std::int64_t>(floor_div(a, cell), 0);
    hi[d] = std::min<std::int64_t>(ceil_div(a + side, cell), N) - 1;
    if (hi[d] < lo[d]) return false;
  }
  return true;
}

/// Calls visit(coords) for every index vector in the inclusive box [lo, hi].
template <typename Visit>
void for_each_in_range(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi,
                       Visit&& visit) {
  const int n = static_cast<int>(lo.size());
  for (int d = 0; d < n; ++d)
    if (hi[d] < lo[d]) return;
  std::vector<std::int64_t> c = lo;
  while (true) {
    visit(c);
    int d = n - 1;
    while (d >= 0 && c[d] == hi[d]) {
      c[d] = lo[d];
      --d;
    }
    if (d < 0) return;
    ++c[d];
  }
}

}  // namespace dyadic::detail
