#include <cmath>
#include <sstream>
#include <stdexcept>

#include "dyadic/experiments.hpp"
#include "dyadic/io.hpp"

namespace dyadic {

SlopeFit fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("slope fit: x and y differ in length");
  if (x.size() < 2) throw DomainError("slope fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("slope fit: x values are all equal");
  SlopeFit f;
  f.points = x.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  return f;
}

void ExperimentReport::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::logic_error("report row does not match the columns");
  rows.push_back(std::move(row));
}

const SlopeFit& ExperimentReport::slope(const std::string& name) const {
  for (const auto& [k, v] : slopes)
    if (k == name) return v;
  throw std::out_of_range("no slope named " + name);
}

Check& ExperimentReport::check_le(const std::string& name, double value, double bound) {
  checks.push_back(Check{name, value, "<=", bound, 0.0, true, value <= bound, {}});
  return checks.back();
}

Check& ExperimentReport::check_ge(const std::string& name, double value, double bound) {
  checks.push_back(Check{name, value, ">=", bound, 0.0, true, value >= bound, {}});
  return checks.back();
}

Check& ExperimentReport::check_within(const std::string& name, double value, double target,
                                      double rel) {
  const bool ok = std::abs(value - target) <= rel * std::abs(target);
  checks.push_back(Check{name, value, "within", rel, target, true, ok, {}});
  return checks.back();
}

Check& ExperimentReport::check_true(const std::string& name, bool ok, const std::string& note) {
  checks.push_back(Check{name, ok ? 1.0 : 0.0, "true", 0.0, 1.0, true, ok, note});
  return checks.back();
}

Check& ExperimentReport::check_slope(const std::string& name, const SlopeFit& fit, double target,
                                     double rel) {
  Check& c = check_within(name, fit.slope, target, rel);
  if (fit.residual > 0.05) {
    c.evaluated = false;
    c.pass = false;
    c.note = "fit residual " + format_double(fit.residual) + " above 0.05";
  }
  return c;
}

bool ExperimentReport::pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

namespace {

Json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

Json ExperimentReport::to_json() const {
  Json j;
  j["experiment"] = id;
  j["version"] = kVersion;
  j["params"] = params;
  j["columns"] = columns;
  Json rs = Json::array();
  for (const auto& r : rows) {
    Json row = Json::array();
    for (double v : r) row.push_back(number(v));
    rs.push_back(std::move(row));
  }
  j["rows"] = std::move(rs);
  Json sl = Json::object();
  for (const auto& [name, f] : slopes)
    sl[name] = {{"slope", number(f.slope)},
                {"intercept", number(f.intercept)},
                {"residual", number(f.residual)},
                {"points", f.points}};
  j["slopes"] = std::move(sl);
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json e{{"name", c.name}, {"value", number(c.value)}, {"relation", c.relation}};
    if (c.relation == "within") {
      e["target"] = number(c.target);
      e["rel_tolerance"] = c.tolerance;
    } else if (c.relation != "true") {
      e["tolerance"] = number(c.tolerance);
    }
    e["evaluated"] = c.evaluated;
    e["pass"] = c.pass;
    if (!c.note.empty()) e["note"] = c.note;
    cs.push_back(std::move(e));
  }
  j["checks"] = std::move(cs);
  j["warnings"] = warnings;
  j["provenance"] = provenance;
  if (!extra.empty()) j["extra"] = extra;
  j["pass"] = pass();
  return j;
}

std::string ExperimentReport::json_text() const { return to_json().dump(2) + "\n"; }

std::string ExperimentReport::to_csv() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << "\n";
  }
  return os.str();
}

}  // namespace dyadic
