#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dyadic/experiments.hpp"
#include "dyadic/io.hpp"
#include "dyadic/maximal.hpp"
#include "dyadic/oscillation.hpp"
#include "dyadic/sparse.hpp"
#include "dyadic/weights.hpp"

namespace py = pybind11;
using namespace dyadic;

namespace {

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_py(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

CubePolicy default_policy(const MeshFunction& f, std::optional<int> kmax) {
  return CubePolicy::all_grids(f.domain(), kmax.value_or(f.level()));
}

py::dict constant_dict(const ConstantReport& c) {
  py::dict d;
  d["name"] = c.name;
  d["value"] = c.value;
  if (c.attained) d["attained"] = py::make_tuple(c.attained->grid.alpha, c.attained->k, c.attained->j);
  else d["attained"] = py::none();
  d["policy"] = c.policy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Dyadic grids, weight constants, maximal and sparse operators";
  m.attr("__version__") = kVersion;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<MeshFunction>(m, "MeshFunction")
      .def(py::init([](int n, int K, int level, std::vector<double> values) {
             return MeshFunction(DomainBox{n, K}, level, std::move(values));
           }),
           py::arg("n"), py::arg("K"), py::arg("level"), py::arg("values"))
      .def_static("constant", [](int n, int K, int level, double c) {
        return MeshFunction::constant(DomainBox{n, K}, level, c);
      })
      .def_property_readonly("n", &MeshFunction::dim)
      .def_property_readonly("K", [](const MeshFunction& f) { return f.domain().K; })
      .def_property_readonly("level", &MeshFunction::level)
      .def_property_readonly("values", [](const MeshFunction& f) {
        const auto v = f.values();
        return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
      })
      .def("__len__", &MeshFunction::size)
      .def("integral", py::overload_cast<>(&MeshFunction::integral, py::const_))
      .def("box_average", [](const MeshFunction& f, std::vector<double> lo, std::vector<double> hi) {
        return f.average(Box{std::move(lo), std::move(hi)});
      })
      .def("refine", &MeshFunction::refine)
      .def("to_mfn", [](const MeshFunction& f) { return format_mesh(f); })
      .def_static("from_mfn", &parse_mesh);

  m.def("load_mesh", &load_mesh);
  m.def("store_mesh", &store_mesh);

  m.def("ap_constant", [](const MeshFunction& w, double p, std::optional<int> kmax) {
    return constant_dict(ap_constant(w, p, default_policy(w, kmax)));
  }, py::arg("w"), py::arg("p"), py::arg("kmax") = py::none());

  m.def("ainfty_constant", [](const MeshFunction& w, std::optional<int> kmax) {
    return constant_dict(ainfty_constant(w, default_policy(w, kmax)));
  }, py::arg("w"), py::arg("kmax") = py::none());

  m.def("apvec_constant", [](const std::vector<MeshFunction>& ws, std::vector<double> P, std::optional<int> kmax) {
    if (ws.empty()) throw DomainError("need at least one weight");
    const auto sys = WeightSystem::make(std::vector<Density>(ws.begin(), ws.end()), std::move(P));
    return constant_dict(apvec_constant(sys, default_policy(ws.front(), kmax)));
  }, py::arg("weights"), py::arg("P"), py::arg("kmax") = py::none());

  m.def("multilinear_maximal", [](const std::vector<MeshFunction>& fs, std::optional<unsigned> grid) {
    if (fs.empty()) throw DomainError("need at least one function");
    auto pol = default_policy(fs.front(), std::nullopt);
    if (!grid) return multilinear_maximal(fs, pol).lower;
    pol.grids = {GridId{*grid}};
    return dyadic_multilinear_maximal(fs, GridId{*grid}, pol).values;
  }, py::arg("fs"), py::arg("grid") = py::none(),
        "Cell-resolution lower bound of M(f); all grids unless one is named.");

  py::class_<SparseFamily>(m, "SparseFamily")
      .def_property_readonly("grid", [](const SparseFamily& s) { return s.grid.alpha; })
      .def_readonly("a", &SparseFamily::a)
      .def("__len__", &SparseFamily::size)
      .def("cubes", [](const SparseFamily& s) {
        std::vector<py::tuple> out;
        for (const auto& q : s.cubes()) out.push_back(py::make_tuple(q.k, q.j));
        return out;
      })
      .def("generations", [](const SparseFamily& s) {
        std::map<int, std::vector<py::tuple>> out;
        for (const auto& [g, cubes] : s.generations)
          for (const auto& q : cubes) out[g].push_back(py::make_tuple(q.k, q.j));
        return out;
      })
      .def("to_text", [](const SparseFamily& s) { return format_family(s); })
      .def_static("from_text", &parse_family);

  m.def("build_cz_sparse", [](const std::vector<MeshFunction>& fs, unsigned grid) {
    if (fs.empty()) throw DomainError("need at least one function");
    return build_cz_sparse(fs, GridId{grid}, default_policy(fs.front(), std::nullopt));
  }, py::arg("fs"), py::arg("grid") = 0u);
  m.def("restrict_to_domain", &restrict_to_domain);
  m.def("verify_sparse", [](const SparseFamily& s) {
    const auto r = verify_sparse(s);
    py::dict d;
    d["pass"] = r.pass;
    d["invariant"] = r.invariant;
    d["detail"] = r.detail;
    d["cubes"] = r.cubes;
    d["worst_overlap"] = r.worst_overlap;
    return d;
  });
  m.def("sparse_apply", [](const SparseFamily& s, const std::vector<MeshFunction>& fs) {
    return sparse_apply(s, fs);
  });

  m.def("median", [](const MeshFunction& f, std::vector<double> lo, std::vector<double> hi) {
    return median(f, Box{std::move(lo), std::move(hi)});
  });
  m.def("local_oscillation", [](const MeshFunction& f, std::vector<double> lo, std::vector<double> hi,
                                double lambda) {
    return local_oscillation(f, Box{std::move(lo), std::move(hi)}, lambda);
  });
  m.def("decomposition_check", [](const MeshFunction& f, int k, std::vector<std::int64_t> j, double lambda) {
    const auto r = decomposition_check(f, DyadicCube{GridId{0}, k, std::move(j)}, lambda);
    py::dict d;
    d["pass"] = r.pass;
    d["scale"] = r.scale;
    d["c1_min"] = r.c1_min;
    d["c2_min"] = r.c2_min;
    d["family_sparse"] = r.family_sparse;
    std::size_t size = 0;
    for (const auto& [g, cubes] : r.family) size += cubes.size();
    d["family_size"] = size;
    return d;
  }, py::arg("f"), py::arg("k"), py::arg("j"), py::arg("lambda_") = 0.0);

  m.def("sharpness_run", [](int mm, std::vector<double> P, std::vector<double> eps, int level) {
    return to_py(sharpness_run(mm, P, eps, level).to_json());
  }, py::arg("m"), py::arg("P"), py::arg("eps"), py::arg("level") = 16);

  m.def("gen_corpus", [](const py::object& spec, const std::filesystem::path& out) {
    return to_py(write_corpus(make_corpus(CorpusSpec::from_json(from_py(spec))), out));
  }, py::arg("spec"), py::arg("out"));

  m.def("theorem_names", &theorem_names);
  m.def("verify", [](const std::string& theorem, const std::filesystem::path& corpus) {
    return to_py(run_theorem(theorem, load_corpus(corpus)).to_json());
  }, py::arg("theorem"), py::arg("corpus"));
}
