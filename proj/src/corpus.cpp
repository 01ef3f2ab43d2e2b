#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "dyadic/experiments.hpp"
#include "dyadic/io.hpp"

namespace dyadic {

namespace {

const std::set<std::string> kFamilies{"power", "random-step", "cascade"};

MeshFunction random_steps(Rng& rng, const DomainBox& dom, int step, int level,
                          const std::function<double(Rng&)>& draw) {
  std::vector<double> v(std::size_t{1} << (dom.n * (dom.K + step)));
  for (auto& x : v) x = draw(rng);
  return MeshFunction(dom, step, std::move(v)).refine(level);
}

// Multiplicative dyadic cascade: every cube down to `depth` carries a factor
// e^{δ(2u-1)} and the weight on a cell is the product along its ancestors.
MeshFunction cascade(Rng& rng, const DomainBox& dom, int depth, int level, double delta) {
  MeshFunction w = MeshFunction::constant(dom, 0, 1.0);
  for (int k = 1; k <= depth; ++k) {
    const MeshFunction up = w.refine(k);
    std::vector<double> v(up.values().begin(), up.values().end());
    for (auto& x : v) x *= std::exp(delta * (2.0 * rng.uniform() - 1.0));
    w = MeshFunction(dom, k, std::move(v));
  }
  return w.refine(level);
}

std::string item_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "item%03d", i);
  return buf;
}

}  // namespace

Json CorpusSpec::to_json() const {
  Json j;
  j["seed"] = seed;
  j["family"] = family;
  j["m"] = m;
  j["P"] = P;
  j["n"] = n;
  j["K"] = K;
  j["L"] = L;
  j["step"] = step_level();
  j["range"] = range;
  if (family == "power") j["eps"] = eps;
  else j["count"] = count;
  return j;
}

CorpusSpec CorpusSpec::from_json(const Json& j) {
  if (!j.is_object()) throw DomainError("corpus spec must be a JSON object");
  static const std::set<std::string> keys{"seed", "family", "m", "P", "n", "K", "L",
                                          "step", "range", "eps", "count"};
  for (const auto& [k, v] : j.items())
    if (!keys.count(k)) throw DomainError("unknown corpus spec key: " + k);
  CorpusSpec s;
  s.seed = j.value("seed", s.seed);
  s.family = j.value("family", s.family);
  s.m = j.value("m", s.m);
  if (j.contains("P")) s.P = j.at("P").get<std::vector<double>>();
  else s.P.assign(s.m, 2.0);
  s.n = j.value("n", s.n);
  s.K = j.value("K", s.K);
  s.L = j.value("L", s.L);
  s.step = j.value("step", s.step);
  s.range = j.value("range", s.range);
  if (j.contains("eps")) s.eps = j.at("eps").get<std::vector<double>>();
  s.count = j.value("count", s.count);

  if (!kFamilies.count(s.family)) throw DomainError("unknown corpus family: " + s.family);
  if (s.m < 1) throw DomainError("m must be at least 1");
  if (static_cast<int>(s.P.size()) != s.m) throw DomainError("P must list m exponents");
  for (double p : s.P)
    if (!(p > 1.0) || !std::isfinite(p)) throw DomainError("exponents must lie in (1, inf)");
  if (s.n < 1 || s.K < 0 || s.L < 0) throw DomainError("invalid n, K or L");
  if (s.step_level() < 0 || s.step_level() > s.L) throw DomainError("step level must lie in [0, L]");
  if (!(s.range >= 0.0)) throw DomainError("range must be nonnegative");
  if (s.family == "power") {
    if (s.n != 1 || s.K != 0) throw DomainError("power family lives on [0,1): n = 1, K = 0");
    if (s.eps.empty()) throw DomainError("power family needs an eps list");
    for (double e : s.eps)
      if (!(e > 0.0 && e < 1.0)) throw DomainError("eps must lie in (0,1)");
  } else if (s.count < 1) {
    throw DomainError("count must be positive");
  }
  return s;
}

Corpus make_corpus(const CorpusSpec& spec) {
  const CorpusSpec s = CorpusSpec::from_json(spec.to_json());
  Corpus c;
  c.spec = s;
  const DomainBox dom{s.n, s.K};
  if (s.family == "power") {
    for (std::size_t e = 0; e < s.eps.size(); ++e) {
      const double eps = s.eps[e];
      CorpusItem it;
      it.id = item_name(static_cast<int>(e));
      it.eps = eps;
      for (int i = 0; i < s.m; ++i) {
        it.weights.push_back(sample_cell_averages(PowerFunction(1.0, (1.0 - eps) * (s.P[i] - 1.0), 0), s.L));
        it.fs.push_back(sample_cell_averages(PowerFunction(1.0, eps - 1.0, 0), s.L));
      }
      c.items.push_back(std::move(it));
    }
    return c;
  }
  Rng rng(s.seed);
  const int step = s.step_level();
  for (int k = 0; k < s.count; ++k) {
    CorpusItem it;
    it.id = item_name(k);
    it.range = s.range * (k + 1) / s.count;
    const double r = it.range;
    for (int i = 0; i < s.m; ++i) {
      if (s.family == "cascade")
        it.weights.push_back(cascade(rng, dom, step, s.L, step > 0 ? 2.0 * r / step : 0.0));
      else
        it.weights.push_back(random_steps(rng, dom, step, s.L, [r](Rng& g) { return std::exp(r * (2.0 * g.uniform() - 1.0)); }));
    }
    for (int i = 0; i < s.m; ++i)
      it.fs.push_back(random_steps(rng, dom, step, s.L, [](Rng& g) {
        const double keep = g.uniform();
        const double v = std::exp(2.0 * g.uniform() - 1.0);
        return keep < 0.25 ? 0.0 : v;
      }));
    c.items.push_back(std::move(it));
  }
  return c;
}

Json write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  Json man;
  man["format"] = "dyadic-corpus 1";
  man["version"] = kVersion;
  man["spec"] = corpus.spec.to_json();
  Json items = Json::array();
  for (const auto& it : corpus.items) {
    Json e;
    e["id"] = it.id;
    if (corpus.spec.family == "power") e["eps"] = it.eps;
    else e["range"] = it.range;
    auto emit = [&](const std::vector<MeshFunction>& fs, const char* tag) {
      Json arr = Json::array();
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const std::string name = it.id + "_" + tag + std::to_string(i + 1) + ".mfn";
        const std::string text = format_mesh(fs[i]);
        write_file(dir / name, text);
        arr.push_back({{"file", name}, {"checksum", checksum(text)}});
      }
      return arr;
    };
    e["weights"] = emit(it.weights, "w");
    e["inputs"] = emit(it.fs, "f");
    items.push_back(std::move(e));
  }
  man["items"] = std::move(items);
  write_file(dir / "manifest.json", man.dump(2) + "\n");
  return man;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  Json man;
  try {
    man = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  Corpus c;
  c.spec = CorpusSpec::from_json(man.at("spec"));
  c.manifest = man;
  for (const auto& e : man.at("items")) {
    CorpusItem it;
    it.id = e.at("id").get<std::string>();
    it.eps = e.value("eps", 0.0);
    it.range = e.value("range", 0.0);
    auto load = [&](const Json& arr, std::vector<MeshFunction>& out) {
      for (const auto& f : arr) {
        const auto file = dir / f.at("file").get<std::string>();
        const std::string text = read_file(file);
        if (checksum(text) != f.at("checksum").get<std::string>())
          throw std::runtime_error("checksum mismatch: " + file.string());
        out.push_back(parse_mesh(text));
      }
    };
    load(e.at("weights"), it.weights);
    load(e.at("inputs"), it.fs);
    for (const auto& w : it.weights)
      if (!w.all_positive()) throw DomainError("corpus weight is not strictly positive in " + it.id);
    if (static_cast<int>(it.weights.size()) != c.spec.m || static_cast<int>(it.fs.size()) != c.spec.m)
      throw DomainError("corpus item " + it.id + " does not carry m weights and inputs");
    c.items.push_back(std::move(it));
  }
  return c;
}

}  // namespace dyadic
