#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dyadic/mesh.hpp"
#include "json.hpp"

namespace dyadic {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::ordered_json;

/// Ordinary least squares y = slope x + intercept; residual is the RMS of
/// the fitted residuals.
struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  std::size_t points = 0;
};
SlopeFit fit_slope(std::span<const double> x, std::span<const double> y);

/// mt19937_64 with uniforms taken from the top 53 bits, so corpora are
/// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  std::uint64_t next() { return gen_(); }
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

 private:
  std::mt19937_64 gen_;
};

struct Check {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "within", "true"
  double tolerance = 0.0;
  double target = 0.0;
  bool evaluated = true;
  bool pass = true;
  std::string note;
};

struct ExperimentReport {
  std::string id;
  Json params = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::pair<std::string, SlopeFit>> slopes;
  std::vector<Check> checks;
  std::vector<std::string> warnings;
  Json provenance = Json::object();
  Json extra = Json::object();

  void add_row(std::vector<double> row);
  const SlopeFit& slope(const std::string& name) const;
  Check& check_le(const std::string& name, double value, double bound);
  Check& check_ge(const std::string& name, double value, double bound);
  /// |value - target| <= rel * |target|.
  Check& check_within(const std::string& name, double value, double target, double rel);
  Check& check_true(const std::string& name, bool ok, const std::string& note = {});
  /// Slope check, evaluated only when the fit residual is at most 0.05.
  Check& check_slope(const std::string& name, const SlopeFit& fit, double target, double rel);

  bool pass() const;
  Json to_json() const;
  std::string json_text() const;
  /// Header row of column names, then one line per row.
  std::string to_csv() const;
};

struct CorpusSpec {
  std::uint64_t seed = 1;
  std::string family = "random-step";  // power | random-step | cascade
  int m = 2;
  std::vector<double> P{2.0, 2.0};
  int n = 1;
  int K = 0;
  int L = 7;
  int step = -1;       // level of the random steps; -1 means L - 3
  double range = 1.5;  // log-range cap: item i uses range (i+1)/count
  std::vector<double> eps{0.125, 0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625};
  int count = 50;

  Json to_json() const;
  static CorpusSpec from_json(const Json& j);
  int step_level() const { return step < 0 ? L - 3 : step; }
};

struct CorpusItem {
  std::string id;
  double eps = 0.0;  // power family only
  double range = 0.0;
  std::vector<MeshFunction> weights;
  std::vector<MeshFunction> fs;
};

struct Corpus {
  CorpusSpec spec;
  std::vector<CorpusItem> items;
  Json manifest = Json::object();
};

Corpus make_corpus(const CorpusSpec& spec);
/// Writes one MFN file per weight and input plus manifest.json; returns the manifest.
Json write_corpus(const Corpus& corpus, const std::filesystem::path& dir);
/// Reads a corpus directory, verifying checksums and weight positivity.
Corpus load_corpus(const std::filesystem::path& dir);

/// Power family of the sharpness example on [0,1): w_i = x^{(1-ε)(p_i-1)},
/// f_i = x^{ε-1}.
ExperimentReport sharpness_run(int m, const std::vector<double>& P, const std::vector<double>& eps,
                               int level);
ExperimentReport mixed_bound_band(const Corpus& corpus);
ExperimentReport buckley_probe(int m, double r, const std::vector<double>& eps, int level);
ExperimentReport factorization_check(const Corpus& corpus);

struct TwoWeightConstant {
  double K = 0.0;
  std::vector<double> by_level;  // K over policies with kmax = L-3 .. L
  bool divergent = false;
};
/// K = sup_Q (u(Q)/|Q|)^{1/p} ∏ (avg_Q v_i^{-s_i/p_i})^{1/s_i} over all-grid policies.
TwoWeightConstant two_weight_constant(const MeshFunction& u, std::span<const MeshFunction> v,
                                      std::span<const double> s, std::span<const double> P);
/// u = ν, v_i = w_i, s_i = s_scale · p_i'.
ExperimentReport two_weight_check(const Corpus& corpus, double s_scale = 2.0);
ExperimentReport sparse_a2_check(const Corpus& corpus);

ExperimentReport verify_duality(const Corpus& corpus);
ExperimentReport verify_sparseness(const Corpus& corpus);
ExperimentReport verify_domination(const Corpus& corpus);
ExperimentReport verify_lemma31(const Corpus& corpus);
ExperimentReport verify_reverse_holder(const Corpus& corpus);
ExperimentReport verify_weak_profile(const Corpus& corpus);
ExperimentReport verify_lemma42(const Corpus& corpus);
ExperimentReport verify_decomposition(const Corpus& corpus);

/// Names accepted by `verify --theorem`.
std::vector<std::string> theorem_names();
ExperimentReport run_theorem(const std::string& theorem, const Corpus& corpus);

}  // namespace dyadic
