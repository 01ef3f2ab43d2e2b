#include "dyadic/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dyadic {

namespace {

std::size_t ipow(std::int64_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

}  // namespace

MeshFunction::MeshFunction(DomainBox domain, int level, std::vector<double> values)
    : domain_(domain), level_(level), values_(std::move(values)) {
  if (domain_.n < 1) throw DomainError("mesh dimension must be >= 1");
  if (domain_.K < 0 || level_ < 0) throw DomainError("mesh requires K >= 0 and L >= 0");
  if (domain_.n * (domain_.K + level_) > 40) throw DomainError("mesh too large");
  cells_per_axis_ = std::int64_t{1} << (domain_.K + level_);
  if (values_.size() != ipow(cells_per_axis_, domain_.n))
    throw DomainError("mesh value count does not match 2^{n(K+L)}");
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("mesh values must be finite");

  const int n = domain_.n;
  const std::int64_t np = cells_per_axis_ + 1;
  prefix_.assign(ipow(np, n), 0.0L);
  const long double mu = cell_measure();
  // Scatter cell integrals to the upper corner, then accumulate per axis.
  std::vector<std::int64_t> c(n, 0);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    std::size_t idx = 0;
    std::size_t rem = i;
    for (int d = n - 1; d >= 0; --d) {
      c[d] = static_cast<std::int64_t>(rem % cells_per_axis_);
      rem /= cells_per_axis_;
    }
    for (int d = 0; d < n; ++d) idx = idx * np + static_cast<std::size_t>(c[d] + 1);
    prefix_[idx] = mu * values_[i];
  }
  std::size_t stride = 1;
  for (int d = n - 1; d >= 0; --d) {
    for (std::size_t i = 0; i < prefix_.size(); ++i) {
      const std::size_t coord = (i / stride) % np;
      if (coord > 0) prefix_[i] += prefix_[i - stride];
    }
    stride *= np;
  }
}

MeshFunction MeshFunction::constant(DomainBox domain, int level, double c) {
  const std::int64_t N = std::int64_t{1} << (domain.K + level);
  return MeshFunction(domain, level, std::vector<double>(ipow(N, domain.n), c));
}

MeshFunction MeshFunction::from_cells(DomainBox domain, int level,
                                      const std::function<double(const Box&)>& cell_value) {
  MeshFunction shape = constant(domain, level, 0.0);
  std::vector<double> v(shape.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cell_value(shape.cell_box(i));
  return MeshFunction(domain, level, std::move(v));
}

double MeshFunction::cell_side() const { return std::ldexp(1.0, -level_); }
double MeshFunction::cell_measure() const { return std::ldexp(1.0, -level_ * domain_.n); }

std::vector<std::int64_t> MeshFunction::cell_coords(std::size_t index) const {
  std::vector<std::int64_t> c(domain_.n);
  for (int d = domain_.n - 1; d >= 0; --d) {
    c[d] = static_cast<std::int64_t>(index % cells_per_axis_);
    index /= cells_per_axis_;
  }
  return c;
}

std::size_t MeshFunction::cell_index(const std::vector<std::int64_t>& coords) const {
  std::size_t idx = 0;
  for (int d = 0; d < domain_.n; ++d) idx = idx * cells_per_axis_ + coords[d];
  return idx;
}

Box MeshFunction::cell_box(std::size_t index) const {
  const auto c = cell_coords(index);
  Box b;
  for (int d = 0; d < domain_.n; ++d) {
    b.lo.push_back(std::ldexp(static_cast<double>(c[d]), -level_));
    b.hi.push_back(std::ldexp(static_cast<double>(c[d] + 1), -level_));
  }
  return b;
}

long double MeshFunction::prefix_at(const std::vector<double>& u) const {
  const int n = domain_.n;
  const std::int64_t np = cells_per_axis_ + 1;
  std::vector<std::int64_t> base(n);
  std::vector<double> theta(n);
  for (int d = 0; d < n; ++d) {
    std::int64_t i = static_cast<std::int64_t>(std::floor(u[d]));
    i = std::clamp<std::int64_t>(i, 0, cells_per_axis_ - 1);
    base[d] = i;
    theta[d] = u[d] - static_cast<double>(i);
  }
  long double acc = 0.0L;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    long double w = 1.0L;
    std::size_t idx = 0;
    for (int d = 0; d < n; ++d) {
      const bool up = (mask >> d) & 1u;
      w *= up ? theta[d] : (1.0L - theta[d]);
      idx = idx * np + static_cast<std::size_t>(base[d] + (up ? 1 : 0));
    }
    if (w != 0.0L) acc += w * prefix_[idx];
  }
  return acc;
}

double MeshFunction::integral(const Box& b) const {
  const int n = domain_.n;
  if (b.dim() != n) throw DomainError("box dimension does not match mesh");
  const double side = domain_.side();
  std::vector<double> lo(n), hi(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = std::ldexp(std::clamp(b.lo[d], 0.0, side), level_);
    hi[d] = std::ldexp(std::clamp(b.hi[d], 0.0, side), level_);
    if (!(lo[d] < hi[d])) return 0.0;
  }
  // Inclusion-exclusion over the 2^n corners of the box.
  long double acc = 0.0L;
  std::vector<double> corner(n);
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    int lows = 0;
    for (int d = 0; d < n; ++d) {
      const bool up = (mask >> d) & 1u;
      corner[d] = up ? hi[d] : lo[d];
      lows += up ? 0 : 1;
    }
    const long double v = prefix_at(corner);
    acc += (lows % 2 == 0) ? v : -v;
  }
  return static_cast<double>(acc);
}

double MeshFunction::integral() const { return static_cast<double>(prefix_.back()); }

double MeshFunction::average(const Box& b) const {
  const double m = b.measure();
  if (!(m > 0.0)) throw DomainError("average over a degenerate box");
  return integral(b) / m;
}

std::vector<Atom> MeshFunction::atoms(const Box& region) const {
  const int n = domain_.n;
  const double side = domain_.side();
  std::vector<double> lo(n), hi(n);
  std::vector<std::int64_t> clo(n), chi(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = std::ldexp(std::clamp(region.lo[d], 0.0, side), level_);
    hi[d] = std::ldexp(std::clamp(region.hi[d], 0.0, side), level_);
    if (!(lo[d] < hi[d])) return {};
    clo[d] = static_cast<std::int64_t>(std::floor(lo[d]));
    chi[d] = std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(hi[d])), cells_per_axis_) - 1;
  }
  std::vector<Atom> out;
  std::vector<std::int64_t> c = clo;
  const double cs = cell_side();
  while (true) {
    double mu = 1.0;
    for (int d = 0; d < n; ++d) {
      const double a = std::max(static_cast<double>(c[d]), lo[d]);
      const double b = std::min(static_cast<double>(c[d] + 1), hi[d]);
      mu *= (b - a) * cs;
    }
    if (mu > 0.0) out.push_back(Atom{values_[cell_index(c)], mu});
    int d = n - 1;
    while (d >= 0 && c[d] == chi[d]) {
      c[d] = clo[d];
      --d;
    }
    if (d < 0) break;
    ++c[d];
  }
  return out;
}

MeshFunction MeshFunction::map(const std::function<double(double)>& fn) const {
  std::vector<double> v(values_.size());
  std::transform(values_.begin(), values_.end(), v.begin(), fn);
  return MeshFunction(domain_, level_, std::move(v));
}

MeshFunction MeshFunction::zip(const MeshFunction& other,
                               const std::function<double(double, double)>& fn) const {
  if (!same_mesh(other)) throw DomainError("mesh functions live on different meshes");
  std::vector<double> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i], other.values_[i]);
  return MeshFunction(domain_, level_, std::move(v));
}

MeshFunction MeshFunction::refine(int level) const {
  if (level < level_) throw DomainError("refine: target level is coarser");
  if (level == level_) return *this;
  const int shift = level - level_;
  MeshFunction shape = constant(domain_, level, 0.0);
  std::vector<double> v(shape.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto c = shape.cell_coords(i);
    for (auto& x : c) x >>= shift;
    v[i] = values_[cell_index(c)];
  }
  return MeshFunction(domain_, level, std::move(v));
}

bool MeshFunction::same_mesh(const MeshFunction& o) const {
  return domain_ == o.domain_ && level_ == o.level_;
}

bool MeshFunction::all_positive() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v > 0.0; });
}

PowerFunction::PowerFunction(double c, double a, int K_) : coefficient(c), exponent(a), K(K_) {
  if (!(c > 0.0)) throw DomainError("power function coefficient must be positive");
  if (!(a > -1.0)) throw DomainError("power function exponent must exceed -1");
}

double PowerFunction::operator()(double x) const {
  if (x <= 0.0 || x >= std::ldexp(1.0, K)) return 0.0;
  return coefficient * std::pow(x, exponent);
}

double PowerFunction::integral(double u, double v) const {
  const double top = std::ldexp(1.0, K);
  u = std::clamp(u, 0.0, top);
  v = std::clamp(v, 0.0, top);
  if (!(u < v)) return 0.0;
  const double e = exponent + 1.0;
  // v^e - u^e with relative accuracy when u is close to v.
  const double diff = (u > 0.0) ? std::pow(v, e) * -std::expm1(e * std::log(u / v)) : std::pow(v, e);
  return coefficient * diff / e;
}

double PowerFunction::integral(const Box& b) const {
  if (b.dim() != 1) throw DomainError("power functions are one-dimensional");
  return integral(b.lo[0], b.hi[0]);
}

double PowerFunction::average(const Box& b) const {
  const double m = b.measure();
  if (!(m > 0.0)) throw DomainError("average over a degenerate box");
  return integral(b) / m;
}

PowerFunction PowerFunction::pow(double s) const {
  return PowerFunction(std::pow(coefficient, s), exponent * s, K);
}

PowerFunction PowerFunction::operator*(const PowerFunction& o) const {
  return PowerFunction(coefficient * o.coefficient, exponent + o.exponent, std::min(K, o.K));
}

double integral(const Density& f, const Box& b) {
  return std::visit([&](const auto& g) { return g.integral(b); }, f);
}

double average(const Density& f, const Box& b) {
  return std::visit([&](const auto& g) { return g.average(b); }, f);
}

double box_average(const Density& f, const Box& b) { return average(f, b); }

int dim_of(const Density& f) {
  return std::holds_alternative<MeshFunction>(f) ? std::get<MeshFunction>(f).dim() : 1;
}

DomainBox domain_of(const Density& f) {
  return std::visit([](const auto& g) { return g.domain(); }, f);
}

Density pow(const Density& f, double s) {
  if (const auto* m = std::get_if<MeshFunction>(&f))
    return m->map([s](double v) { return std::pow(v, s); });
  return std::get<PowerFunction>(f).pow(s);
}

MeshFunction sample_cell_averages(const PowerFunction& f, int level) {
  return MeshFunction::from_cells(f.domain(), level, [&](const Box& b) { return f.average(b); });
}

double rearrangement_value(std::span<const Atom> atoms, double region_measure, double t) {
  if (!(t > 0.0) || t > region_measure) throw DomainError("rearrangement: t outside (0, |R|]");
  std::vector<Atom> a(atoms.begin(), atoms.end());
  for (auto& x : a) x.value = std::abs(x.value);
  std::sort(a.begin(), a.end(), [](const Atom& x, const Atom& y) { return x.value > y.value; });
  // Walk distinct values downward; |{|f| > v}| is the mass strictly above v.
  double above = 0.0;
  double best = std::numeric_limits<double>::infinity();
  std::size_t i = 0;
  while (i < a.size()) {
    const double v = a[i].value;
    if (above <= t) best = v;
    else break;
    double mass = 0.0;
    while (i < a.size() && a[i].value == v) mass += a[i++].measure;
    above += mass;
  }
  if (above <= t) best = 0.0;
  return best;
}

double rearrangement_value(const MeshFunction& f, const Box& region, double t) {
  const double mu = region.measure();
  if (!f.domain().contains(region)) throw DomainError("rearrangement: region leaves the domain");
  auto atoms = f.atoms(region);
  return rearrangement_value(atoms, mu, t);
}

double weighted_lp_norm(const MeshFunction& f, const MeshFunction& w, double p) {
  if (!(p > 0.0)) throw DomainError("weighted_lp_norm: p must be positive");
  if (!(f.domain() == w.domain())) throw DomainError("weighted_lp_norm: domains differ");
  const int level = std::max(f.level(), w.level());
  const MeshFunction ff = f.refine(level);
  const MeshFunction ww = w.refine(level);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < ff.size(); ++i)
    acc += std::pow(std::abs(ff[i]), p) * static_cast<long double>(ww[i]);
  return std::pow(static_cast<double>(acc * ff.cell_measure()), 1.0 / p);
}

double weighted_lp_norm(const MeshFunction& f, const PowerFunction& w, double p) {
  if (!(p > 0.0)) throw DomainError("weighted_lp_norm: p must be positive");
  if (f.dim() != 1) throw DomainError("power weights are one-dimensional");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Box c = f.cell_box(i);
    acc += std::pow(std::abs(f[i]), p) * static_cast<long double>(w.integral(c));
  }
  return std::pow(static_cast<double>(acc), 1.0 / p);
}

double weighted_lp_norm(const PowerFunction& f, const PowerFunction& w, double p) {
  if (!(p > 0.0)) throw DomainError("weighted_lp_norm: p must be positive");
  const double e = p * f.exponent + w.exponent;
  if (!(e > -1.0)) throw DomainError("divergent: combined exponent <= -1");
  const double top = std::ldexp(1.0, std::min(f.K, w.K));
  const double c = std::pow(f.coefficient, p) * w.coefficient;
  return std::pow(c * std::pow(top, e + 1.0) / (e + 1.0), 1.0 / p);
}

double lp_norm(const MeshFunction& f, double p) {
  return weighted_lp_norm(f, MeshFunction::constant(f.domain(), f.level(), 1.0), p);
}

}  // namespace dyadic
