#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dircalc/calculus.hpp"
#include "dircalc/errors.hpp"
#include "dircalc/functionals.hpp"
#include "dircalc/nonlinearity.hpp"
#include "dircalc/paraproduct.hpp"
#include "dircalc/probes.hpp"
#include "dircalc/space.hpp"
#include "dircalc/special.hpp"
#include "dircalc/spectral_cache.hpp"
#include "dircalc/suites.hpp"

namespace py = pybind11;
using namespace dircalc;
using nlohmann::json;

namespace {

json parse(const std::string& text) { return text.empty() ? json::object() : json::parse(text); }

}  // namespace

PYBIND11_MODULE(_dircalc, m) {
  m.doc() = "Heat-semigroup calculus on finite Dirichlet spaces";

  static py::exception<ValidationError> validation(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical, e.what());
    }
  });

  py::class_<DirichletSpace>(m, "Space")
      .def_property_readonly("size", &DirichletSpace::size)
      .def_property_readonly("mesh", &DirichletSpace::mesh)
      .def_property_readonly("kind", &DirichletSpace::kind)
      .def_property_readonly("measure", &DirichletSpace::measure)
      .def_property_readonly("hash", [](const DirichletSpace& s) { return hash_hex(s.hash()); })
      .def_property_readonly("params", [](const DirichletSpace& s) { return s.params().dump(); })
      .def("distance", [](const DirichletSpace& s, Vertex x, Vertex y) { return distance(s, x, y); })
      .def("volume", [](const DirichletSpace& s, Vertex x, double r) { return volume(s, x, r); })
      .def("diameter", [](const DirichletSpace& s) { return s.metric().diameter(); })
      .def("to_json", [](const DirichletSpace& s) { return space_to_json(s).dump(); })
      .def("save", [](const DirichletSpace& s, const std::string& path) { save_space(s, path); });

  m.def("generate", [](const std::string& kind, const std::string& params) { return generate(kind, parse(params)); },
        py::arg("kind"), py::arg("params") = "");
  m.def("space_from_json", [](const std::string& text) { return space_from_json(json::parse(text)); });
  m.def("load_space", &load_space);
  m.def("generator_kinds", &generator_kinds);

  m.def("apply_generator", &apply_generator);
  m.def("energy", &energy);
  m.def("carre_du_champ", &carre_du_champ);
  m.def("gradient_length", &gradient_length);

  py::class_<SpectralData>(m, "Spectrum")
      .def_readonly("eigenvalues", &SpectralData::eigenvalues)
      .def_readonly("eigenfields", &SpectralData::eigenfields)
      .def_readonly("measure", &SpectralData::measure)
      .def_readonly("residual", &SpectralData::residual)
      .def_readonly("orthogonality_error", &SpectralData::orthogonality_error)
      .def("lambda_min", &SpectralData::lambda_min)
      .def("lambda_max", &SpectralData::lambda_max)
      .def("coefficients", &SpectralData::coefficients)
      .def("synthesize", &SpectralData::synthesize);

  m.def("decompose", [](const DirichletSpace& s, const std::string& cache_dir) { return decompose_cached(s, cache_dir); },
        py::arg("space"), py::arg("cache_dir") = "");
  m.def("heat", &heat);
  m.def("heat_kernel", &heat_kernel);
  m.def("fractional_power", &fractional_power);
  m.def("sobolev_norm", &sobolev_norm);
  m.def("q_op", &q_op);
  m.def("p_op", &p_op);
  m.def("r_op", &r_op);
  m.def("calderon_reconstruct", &calderon_reconstruct, py::arg("spec"), py::arg("N"), py::arg("f"), py::arg("a") = 0.0,
        py::arg("b") = kInfinity);
  m.def("gamma_q", &gamma_q);

  py::class_<ScaleGrid>(m, "ScaleGrid")
      .def_readonly("nodes", &ScaleGrid::nodes)
      .def_readonly("weights", &ScaleGrid::weights)
      .def_static("geometric", &ScaleGrid::geometric)
      .def_static("for_spectrum", &ScaleGrid::for_spectrum, py::arg("spec"), py::arg("points_per_decade") = 32,
                  py::arg("N") = 2.0);

  py::class_<ParaproductConfig>(m, "ParaproductConfig")
      .def_readwrite("order", &ParaproductConfig::order)
      .def_readwrite("alpha", &ParaproductConfig::alpha)
      .def_readonly("grid", &ParaproductConfig::grid);
  m.def("make_config", &make_config, py::arg("spec"), py::arg("nu") = 2.0, py::arg("alpha") = 0.5,
        py::arg("points_per_decade") = 32);
  m.def("paraproduct", &paraproduct);
  m.def("product_decomposition_residual", &product_decomposition_residual, py::arg("spec"), py::arg("cfg"),
        py::arg("f"), py::arg("g"), py::arg("p") = kInfinity);
  m.def("chain_residual", [](const SpectralData& spec, const ParaproductConfig& cfg, const std::string& F, const Field& f) {
    return chain_transform(spec, cfg, nonlinearity(F), f).residual;
  });

  m.def("maximal", &maximal);
  m.def("s_alpha", [](const DirichletSpace& s, const Field& f, double alpha, double rho) { return s_alpha(s, f, alpha, rho); });

  m.def("hypothesis_tags", &hypothesis_tags);
  m.def(
      "run_probe",
      [](const DirichletSpace& s, const SpectralData& spec, const std::string& tag, const std::string& params,
         std::uint64_t seed) { return to_json(run_probe(s, spec, tag, parse(params), seed)).dump(); },
      py::arg("space"), py::arg("spec"), py::arg("tag"), py::arg("params") = "", py::arg("seed") = 0);
  m.def("run_suite", [](const std::vector<DirichletSpace>& spaces, const std::string& config) {
    return to_json(run_suite(spaces, suite_config_from_json(parse(config)))).dump();
  });
}
