#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dyadic/experiments.hpp"
#include "dyadic/io.hpp"
#include "dyadic/maximal.hpp"
#include "dyadic/oscillation.hpp"
#include "dyadic/sparse.hpp"
#include "dyadic/weights.hpp"

using namespace dyadic;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: " + s);
  }
  if (used != s.size()) throw UsageError("not a number: " + s);
  return v;
}

long to_long(const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not an integer: " + s);
  }
  if (used != s.size()) throw UsageError("not an integer: " + s);
  return v;
}

std::vector<double> real_list(const std::string& s) {
  std::vector<double> v;
  for (const auto& t : split(s, ',')) v.push_back(to_double(t));
  if (v.empty()) throw UsageError("empty list");
  return v;
}

std::vector<MeshFunction> load_meshes(const std::string& list) {
  std::vector<MeshFunction> fs;
  for (const auto& p : split(list, ',')) fs.push_back(load_mesh(p));
  if (fs.empty()) throw UsageError("no input files");
  for (const auto& f : fs)
    if (!(f.domain() == fs.front().domain()) || f.level() != fs.front().level())
      throw UsageError("inputs must share domain and mesh level");
  return fs;
}

GridId parse_grid(const std::string& s, int n) {
  const long a = to_long(s);
  if (a < 0 || a >= static_cast<long>(GridId::count(n)))
    throw UsageError("grid index must lie in [0, 2^n)");
  return GridId{static_cast<unsigned>(a)};
}

// grids=all|standard|a+b+..,kmin=..,kmax=..
CubePolicy parse_policy(const std::string& s, const DomainBox& dom, int level) {
  CubePolicy p = CubePolicy::all_grids(dom, level);
  for (const auto& field : split(s, ',')) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw UsageError("policy field needs key=value: " + field);
    const std::string key = field.substr(0, eq), val = field.substr(eq + 1);
    if (key == "grids") {
      if (val == "all") {
        p.grids = CubePolicy::all_grids(dom, level).grids;
      } else if (val == "standard") {
        p.grids = {GridId{0}};
      } else {
        p.grids.clear();
        for (const auto& g : split(val, '+')) p.grids.push_back(parse_grid(g, dom.n));
      }
    } else if (key == "kmin") {
      p.kmin = static_cast<int>(to_long(val));
    } else if (key == "kmax") {
      p.kmax = static_cast<int>(to_long(val));
    } else {
      throw UsageError("unknown policy key: " + key);
    }
  }
  if (p.kmin > p.kmax || p.kmax > level) throw UsageError("policy needs kmin <= kmax <= mesh level");
  return p;
}

// k:j1,..,jn[@alpha]
DyadicCube parse_cube(const std::string& s, int n) {
  DyadicCube q;
  std::string body = s;
  if (const auto at = s.find('@'); at != std::string::npos) {
    q.grid = parse_grid(s.substr(at + 1), n);
    body = s.substr(0, at);
  }
  const auto colon = body.find(':');
  if (colon == std::string::npos) throw UsageError("cube must read k:j1,..,jn[@alpha]: " + s);
  q.k = static_cast<int>(to_long(body.substr(0, colon)));
  for (const auto& t : split(body.substr(colon + 1), ',')) q.j.push_back(to_long(t));
  if (static_cast<int>(q.j.size()) != n) throw UsageError("cube has the wrong dimension: " + s);
  return q;
}

Json cube_json(const DyadicCube& q) {
  return {{"grid", q.grid.alpha}, {"k", q.k}, {"j", q.j}};
}

Json constant_json(const ConstantReport& c) {
  Json j{{"name", c.name}, {"value", c.value}};
  j["attained"] = c.attained ? cube_json(*c.attained) : Json(nullptr);
  j["policy"] = c.policy;
  return j;
}

void emit(const Json& j, const std::string& path) {
  const std::string text = j.dump(2) + "\n";
  if (path.empty()) std::cout << text;
  else write_file(path, text);
}

void emit_report(const ExperimentReport& r, const std::string& json_path, const std::string& csv_path) {
  if (!csv_path.empty()) write_file(csv_path, r.to_csv());
  emit(r.to_json(), json_path);
}

// Flags absent from argv are filled from the JSON config: keys of the
// subcommand's own object first, then top-level scalar keys.
std::vector<std::string> apply_config(std::vector<std::string> args, CLI::App& app) {
  std::string path;
  std::string sub_name;
  std::set<std::string> given;
  std::vector<std::string> kept;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const auto& a = args[i];
    if (a == "--config") {
      if (i + 1 == args.size()) throw UsageError("--config needs a file");
      path = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
    else if (i > 0 && sub_name.empty() && app.get_subcommand_no_throw(a)) sub_name = a;
    kept.push_back(a);
  }
  args = std::move(kept);
  if (path.empty()) return args;
  Json cfg;
  try {
    cfg = Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what(), 0);
  }
  if (!cfg.is_object()) throw ParseError(path + ": config must be a JSON object", 0);
  if (sub_name.empty() && cfg.contains("command")) {
    sub_name = cfg.at("command").get<std::string>();
    args.insert(args.begin() + 1, sub_name);
  }
  CLI::App* sub = sub_name.empty() ? nullptr : app.get_subcommand_no_throw(sub_name);
  if (!sub) return args;

  auto render = [](const Json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
      std::string s;
      for (const auto& e : v) s += (s.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      return s;
    }
    return v.dump();
  };
  auto add = [&](const std::string& key, const Json& v, bool strict) {
    if (given.count(key)) return;
    if (!sub->get_option_no_throw("--" + key)) {
      if (strict) throw UsageError("config key not accepted by " + sub_name + ": " + key);
      return;
    }
    args.push_back("--" + key);
    args.push_back(render(v));
    given.insert(key);
  };
  if (cfg.contains(sub_name)) {
    if (!cfg.at(sub_name).is_object()) throw UsageError("config section " + sub_name + " must be an object");
    for (const auto& [k, v] : cfg.at(sub_name).items()) add(k, v, true);
  }
  for (const auto& [k, v] : cfg.items()) {
    if (k == "command" || v.is_object()) continue;
    add(k, v, false);
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic sparse-domination and weight-constant toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config;
  app.add_option("--config", config, "JSON file whose keys mirror the flags; flags win");

  std::string input, inputs, weights, policy, grid = "all", out, q0, theorem, corpus, spec, P, eps,
      json_out, csv_out;
  double p = 0.0, lambda = 0.0;
  int m = 0, level = 16;
  int status = kOk;

  auto* constants = app.add_subcommand("constants", "A_p, A_inf and reverse Hölder data of one weight");
  constants->add_option("--input", input, "weight (MFN)")->required();
  constants->add_option("--p", p, "exponent p > 1")->required();
  constants->add_option("--policy", policy, "grids=all|standard|a+b,kmin=..,kmax=..");

  auto* apvec = app.add_subcommand("apvec", "multilinear A_P constant of a weight vector");
  apvec->add_option("--weights", weights, "comma-separated MFN files")->required();
  apvec->add_option("--P", P, "comma-separated exponents")->required();
  apvec->add_option("--policy", policy, "grids=all|standard|a+b,kmin=..,kmax=..");

  auto* maximal = app.add_subcommand("maximal", "multilinear maximal function at mesh resolution");
  maximal->add_option("--inputs", inputs, "comma-separated MFN files")->required();
  maximal->add_option("--grid", grid, "grid index or 'all'");
  maximal->add_option("--out", out, "output MFN (stdout when omitted)");

  auto* sparse_build = app.add_subcommand("sparse-build", "CZ sparse family of one grid");
  sparse_build->add_option("--inputs", inputs, "comma-separated MFN files")->required();
  sparse_build->add_option("--grid", grid, "grid index")->required();
  sparse_build->add_option("--out", out, "family file")->required();

  auto* dominate = app.add_subcommand("dominate", "pointwise sparse domination check");
  dominate->add_option("--inputs", inputs, "comma-separated MFN files")->required();

  auto* oscillation = app.add_subcommand("oscillation", "median, local oscillation and sharp maximal on a cube");
  oscillation->add_option("--input", input, "function (MFN)")->required();
  oscillation->add_option("--q0", q0, "cube k:j1,..,jn[@alpha]")->required();
  oscillation->add_option("--lambda", lambda, "lambda in (0, 1/2]")->required();

  auto* decompose = app.add_subcommand("decompose", "local mean oscillation decomposition check");
  decompose->add_option("--input", input, "function (MFN)")->required();
  decompose->add_option("--q0", q0, "cube k:j1,..,jn[@alpha]")->required();
  decompose->add_option("--lambda", lambda, "lambda (default 1/2^{n+2})");

  auto* sharpness = app.add_subcommand("sharpness", "power-family sharpness experiment");
  sharpness->add_option("--m", m, "number of functions")->required();
  sharpness->add_option("--P", P, "comma-separated exponents")->required();
  sharpness->add_option("--eps", eps, "comma-separated eps values")->required();
  sharpness->add_option("--level", level, "mesh level")->required();

  auto* verify = app.add_subcommand("verify", "run a theorem check on a corpus");
  verify->add_option("--theorem", theorem, "check name")->required()->check(CLI::IsMember(theorem_names()));
  verify->add_option("--corpus", corpus, "corpus directory")->required();

  for (auto* s : {sharpness, verify}) {
    s->add_option("--json", json_out, "write the JSON report here instead of stdout");
    s->add_option("--csv", csv_out, "write the CSV table here");
  }

  auto* gen = app.add_subcommand("gen-corpus", "generate a corpus directory");
  gen->add_option("--spec", spec, "corpus spec (JSON file)")->required();
  gen->add_option("--out", out, "output directory")->required();

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = apply_config(std::move(args), app);
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(std::move(rev));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*constants) {
      const auto w = load_mesh(input);
      const auto pol = policy.empty() ? CubePolicy::all_grids(w.domain(), w.level())
                                      : parse_policy(policy, w.domain(), w.level());
      const auto rh = reverse_holder_check(w, pol);
      Json j{{"command", "constants"}, {"version", kVersion}, {"input_checksum", file_checksum(input)}};
      j["constants"] = {constant_json(ap_constant(w, p, pol)), constant_json(ainfty_constant(w, pol))};
      j["reverse_holder"] = {{"ainfty", rh.ainfty},       {"r", rh.r},
                             {"pass", rh.pass},           {"worst_ratio", rh.worst_ratio},
                             {"fallback_used", rh.fallback_used},
                             {"empirical_r_limit", rh.empirical_r_limit}};
      status = rh.pass || rh.fallback_pass ? kOk : kViolation;
      j["pass"] = status == kOk;
      emit(j, "");
    } else if (*apvec) {
      const auto ws_mesh = load_meshes(weights);
      const auto exps = real_list(P);
      if (exps.size() != ws_mesh.size()) throw UsageError("--P must list one exponent per weight");
      std::vector<Density> w(ws_mesh.begin(), ws_mesh.end());
      const auto ws = WeightSystem::make(w, exps);
      const auto& f = ws_mesh.front();
      const auto pol = policy.empty() ? CubePolicy::all_grids(f.domain(), f.level())
                                      : parse_policy(policy, f.domain(), f.level());
      Json j{{"command", "apvec"}, {"version", kVersion}, {"P", exps}, {"p", ws.p}};
      Json cs = Json::array();
      cs.push_back(constant_json(apvec_constant(ws, pol)));
      for (int i = 0; i < ws.m(); ++i) {
        auto c = ainfty_constant(ws.sigma[i], pol);
        c.name = "ainfty_sigma" + std::to_string(i + 1);
        cs.push_back(constant_json(c));
      }
      j["constants"] = std::move(cs);
      emit(j, "");
    } else if (*maximal) {
      const auto fs = load_meshes(inputs);
      const auto& f = fs.front();
      MeshFunction M;
      if (grid == "all") {
        M = multilinear_maximal(fs, CubePolicy::all_grids(f.domain(), f.level())).lower;
      } else {
        const GridId a = parse_grid(grid, f.dim());
        CubePolicy pol = CubePolicy::all_grids(f.domain(), f.level());
        pol.grids = {a};
        M = dyadic_multilinear_maximal(fs, a, pol).values;
      }
      if (out.empty()) std::cout << format_mesh(M);
      else store_mesh(M, out);
    } else if (*sparse_build) {
      const auto fs = load_meshes(inputs);
      const auto& f = fs.front();
      const GridId a = parse_grid(grid, f.dim());
      const auto fam = build_cz_sparse(fs, a, CubePolicy::all_grids(f.domain(), f.level()));
      write_file(out, format_family(fam));
      const auto sr = verify_sparse(fam);
      const auto gb = check_generation_bounds(fam, fs);
      Json j{{"command", "sparse-build"}, {"version", kVersion}, {"family", out},
             {"cubes", fam.size()}, {"generations", fam.generations.size()}, {"a", fam.a}};
      j["sparse"] = {{"pass", sr.pass}, {"invariant", sr.invariant}, {"detail", sr.detail},
                     {"worst_overlap", sr.worst_overlap}};
      j["generation_bounds"] = {{"pass", gb.pass}, {"min_lower_ratio", gb.min_lower_ratio},
                                {"max_upper_ratio", gb.max_upper_ratio}, {"witness", gb.witness}};
      status = sr.pass && gb.pass ? kOk : kViolation;
      j["pass"] = status == kOk;
      emit(j, "");
    } else if (*dominate) {
      const auto fs = load_meshes(inputs);
      const auto& f = fs.front();
      const auto d = domination_check(fs, CubePolicy::all_grids(f.domain(), f.level()));
      Json j{{"command", "dominate"}, {"version", kVersion}, {"bound", d.bound},
             {"max_ratio", d.max_ratio}, {"family_sizes", d.family_sizes}};
      j["witness_cell"] = d.witness_cell ? Json(*d.witness_cell) : Json(nullptr);
      status = d.pass ? kOk : kViolation;
      j["pass"] = d.pass;
      emit(j, "");
    } else if (*oscillation) {
      const auto f = load_mesh(input);
      const auto q = parse_cube(q0, f.dim());
      if (!f.domain().contains(q)) throw UsageError("cube lies outside the domain");
      if (!(lambda > 0.0 && lambda <= 0.5)) throw UsageError("--lambda must lie in (0, 1/2]");
      const Box b = q.box();
      const auto sharp = local_sharp_maximal(f, q, lambda);
      double top = 0.0;
      for (double v : sharp.values()) top = std::max(top, v);
      Json j{{"command", "oscillation"}, {"version", kVersion}, {"q0", cube_json(q)},
             {"lambda", lambda}, {"median", median(f, b)}, {"omega", local_oscillation(f, b, lambda)},
             {"sharp_maximal_max", top}};
      emit(j, "");
    } else if (*decompose) {
      const auto f = load_mesh(input);
      const auto q = parse_cube(q0, f.dim());
      if (!f.domain().contains(q)) throw UsageError("cube lies outside the domain");
      const auto d = decomposition_check(f, q, lambda);
      Json fam = Json::array();
      for (const auto& [g, cubes] : d.family)
        for (const auto& c : cubes) {
          Json e = cube_json(c);
          e["generation"] = g;
          fam.push_back(std::move(e));
        }
      Json j{{"command", "decompose"}, {"version", kVersion}, {"q0", cube_json(q)},
             {"lambda", d.lambda},      {"median_q0", d.median_q0}, {"family", fam},
             {"family_sparse", d.family_sparse}, {"c1_min", d.c1_min}, {"c2_min", d.c2_min},
             {"scale", d.scale}};
      if (d.witness_cell)
        j["witness"] = {{"cell", *d.witness_cell}, {"lhs", d.witness_lhs},
                        {"sharp", d.witness_sharp}, {"sum", d.witness_sum}};
      status = d.pass ? kOk : kViolation;
      j["pass"] = d.pass;
      emit(j, "");
    } else if (*sharpness) {
      const auto r = sharpness_run(m, real_list(P), real_list(eps), level);
      emit_report(r, json_out, csv_out);
      status = r.pass() ? kOk : kViolation;
    } else if (*verify) {
      const auto r = run_theorem(theorem, load_corpus(corpus));
      emit_report(r, json_out, csv_out);
      status = r.pass() ? kOk : kViolation;
    } else if (*gen) {
      Json js;
      try {
        js = Json::parse(read_file(spec));
      } catch (const Json::parse_error& e) {
        throw ParseError(spec + ": " + e.what(), 0);
      }
      const auto man = write_corpus(make_corpus(CorpusSpec::from_json(js)), out);
      std::cout << "wrote " << man["items"].size() << " items to " << out << "\n";
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return status;
}
