#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "imcert/certify.hpp"
#include "imcert/embedding.hpp"
#include "imcert/errors.hpp"
#include "imcert/io.hpp"
#include "imcert/linalg.hpp"
#include "imcert/network.hpp"

namespace py = pybind11;
using namespace imcert;

namespace {

Matrix to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols_if_empty = 0) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? cols_if_empty : rows.front().size();
  std::vector<double> flat;
  flat.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return {r, c, std::move(flat)};
}

std::vector<std::vector<double>> from_matrix(const Matrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out[i].assign(m.row(i).begin(), m.row(i).end());
  return out;
}

SolverOptions make_opts(double tol, std::size_t max_iter, std::optional<double> alpha) {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.alpha = alpha;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Implicit neural network evaluation and robustness certification";
  m.attr("__version__") = "0.1.0";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<NotWellPosed>(m, "NotWellPosed", base);
  py::register_exception<MaxIterExceeded>(m, "MaxIterExceeded", base);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base);
  py::register_exception<NonSquareError>(m, "NonSquareError", base);
  py::register_exception<ValueError>(m, "ValueError", base);
  py::register_exception<ShapeError>(m, "ShapeError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<InvalidLabel>(m, "InvalidLabel", base);
  py::register_exception<IoError>(m, "IoError", base);

  m.def("weighted_linf_measure",
        [](const std::vector<std::vector<double>>& a, std::optional<std::vector<double>> eta) {
          const Matrix A = to_matrix(a);
          return weighted_linf_measure(A, eta ? WeightVector(*eta) : WeightVector::ones(A.rows()));
        },
        py::arg("A"), py::arg("eta") = py::none());
  m.def("build_wellposed_weights",
        [](const std::vector<std::vector<double>>& t, std::optional<std::vector<double>> eta) {
          const Matrix T = to_matrix(t);
          return from_matrix(build_wellposed_weights(
              T, eta ? WeightVector(*eta) : WeightVector::ones(T.rows())));
        },
        py::arg("T"), py::arg("eta") = py::none());

  py::class_<WellPosednessReport>(m, "WellPosednessReport")
      .def_readonly("measure", &WellPosednessReport::measure)
      .def_readonly("alpha_star", &WellPosednessReport::alpha_star)
      .def_readonly("contraction_factor", &WellPosednessReport::contraction_factor)
      .def_readonly("well_posed", &WellPosednessReport::well_posed);

  py::class_<SolveDiagnostics>(m, "SolveDiagnostics")
      .def_readonly("iterations", &SolveDiagnostics::iterations)
      .def_readonly("final_residual", &SolveDiagnostics::final_residual)
      .def_readonly("converged", &SolveDiagnostics::converged)
      .def_readonly("alpha", &SolveDiagnostics::alpha);

  py::class_<ImplicitNetwork>(m, "ImplicitNetwork")
      .def(py::init([](const std::vector<std::vector<double>>& A,
                       const std::vector<std::vector<double>>& B,
                       const std::vector<std::vector<double>>& C, std::vector<double> b,
                       std::vector<double> c, const std::string& activation,
                       std::optional<std::vector<double>> eta) {
             std::optional<WeightVector> w;
             if (eta) w = WeightVector(*eta);
             Activation act = Activation::relu();
             switch (Activation::parse_kind(activation)) {
               case Activation::Kind::relu: break;
               case Activation::Kind::identity: act = Activation::identity(); break;
               case Activation::Kind::tanh: act = Activation::tanh(); break;
               default: throw ValueError("parametrized activations: load the model from JSON");
             }
             return ImplicitNetwork(to_matrix(A), to_matrix(B), to_matrix(C), std::move(b),
                                    std::move(c), act, std::move(w));
           }),
           py::arg("A"), py::arg("B"), py::arg("C"), py::arg("b"), py::arg("c"),
           py::arg("activation") = "relu", py::arg("eta") = py::none())
      .def_property_readonly("n", &ImplicitNetwork::n)
      .def_property_readonly("r", &ImplicitNetwork::r)
      .def_property_readonly("q", &ImplicitNetwork::q)
      .def_property_readonly("A", [](const ImplicitNetwork& n) { return from_matrix(n.A()); })
      .def_property_readonly("B", [](const ImplicitNetwork& n) { return from_matrix(n.B()); })
      .def_property_readonly("C", [](const ImplicitNetwork& n) { return from_matrix(n.C()); })
      .def_property_readonly("activation",
                             [](const ImplicitNetwork& n) { return n.activation().name(); });

  m.def("load_model", [](const std::filesystem::path& p) { return io::load_model(p); });
  m.def("save_model", [](const ImplicitNetwork& n, const std::filesystem::path& p) {
    io::save_model(n, p);
  });
  m.def("synth_model", &io::synth_model, py::arg("n"), py::arg("r"), py::arg("q"),
        py::arg("seed") = 0);

  m.def("check_well_posedness", &check_well_posedness);

  m.def("forward_solve",
        [](const ImplicitNetwork& net, const std::vector<double>& u, double tol,
           std::size_t max_iter, std::optional<double> alpha) {
          auto sol = forward_solve(net, u, make_opts(tol, max_iter, alpha));
          return py::make_tuple(sol.x, sol.y, sol.diag);
        },
        py::arg("net"), py::arg("u"), py::arg("tol") = 1e-10, py::arg("max_iter") = 100000,
        py::arg("alpha") = py::none());

  py::class_<EmbeddedFixedPoint>(m, "EmbeddedFixedPoint")
      .def_readonly("x_lower", &EmbeddedFixedPoint::x_lower)
      .def_readonly("x_upper", &EmbeddedFixedPoint::x_upper)
      .def_property_readonly("y_lower",
                             [](const EmbeddedFixedPoint& e) { return e.y_box.lower(); })
      .def_property_readonly("y_upper",
                             [](const EmbeddedFixedPoint& e) { return e.y_box.upper(); })
      .def_readonly("diag", &EmbeddedFixedPoint::diag);

  m.def("embedded_solve",
        [](const ImplicitNetwork& net, std::vector<double> lower, std::vector<double> upper,
           double tol, std::size_t max_iter, std::optional<double> alpha) {
          return embedded_solve(net, IntervalVector(std::move(lower), std::move(upper)),
                                make_opts(tol, max_iter, alpha));
        },
        py::arg("net"), py::arg("lower"), py::arg("upper"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100000, py::arg("alpha") = py::none());
  m.def("ibp_solve",
        [](const ImplicitNetwork& net, std::vector<double> lower, std::vector<double> upper,
           double tol, std::size_t max_iter) {
          return ibp_solve(net, IntervalVector(std::move(lower), std::move(upper)),
                           make_opts(tol, max_iter, std::nullopt));
        },
        py::arg("net"), py::arg("lower"), py::arg("upper"), py::arg("tol") = 1e-10,
        py::arg("max_iter") = 100000);
  m.def("reach_box",
        [](const ImplicitNetwork& net, const std::vector<double>& u, double eps) {
          return reach_box(net, u, eps);
        },
        py::arg("net"), py::arg("u"), py::arg("epsilon"));

  m.def("lipschitz_bound", &lipschitz_bound);
  m.def("relative_classifier_matrix", [](std::size_t label, std::size_t q) {
    return from_matrix(build_T(label, q).matrix());
  });

  py::class_<CertificationResult>(m, "CertificationResult")
      .def_property_readonly("method",
                             [](const CertificationResult& r) { return to_string(r.method); })
      .def_readonly("epsilon", &CertificationResult::epsilon)
      .def_readonly("delta", &CertificationResult::delta)
      .def_readonly("certified", &CertificationResult::certified)
      .def_readonly("nonconvergent", &CertificationResult::nonconvergent)
      .def_readonly("flags", &CertificationResult::flags);

  m.def("certify",
        [](const ImplicitNetwork& net, std::vector<double> u, std::size_t label,
           const std::string& method, double eps) {
          return certify(net, LabeledInput{std::move(u), label}, parse_method(method), eps);
        },
        py::arg("net"), py::arg("u"), py::arg("label"), py::arg("method"), py::arg("epsilon"));
  m.def("certified_radius",
        [](const ImplicitNetwork& net, std::vector<double> u, std::size_t label,
           const std::string& method, double eps_max, double tol_eps) {
          return certified_radius(net, LabeledInput{std::move(u), label}, parse_method(method),
                                  RadiusOptions{eps_max, tol_eps});
        },
        py::arg("net"), py::arg("u"), py::arg("label"), py::arg("method"),
        py::arg("eps_max") = 1.0, py::arg("tol_eps") = 1e-4);
  m.def("certified_fraction_curve",
        [](const ImplicitNetwork& net, const std::vector<std::pair<std::vector<double>, std::size_t>>& data,
           const std::vector<std::string>& methods, const std::vector<double>& eps_grid) {
          std::vector<LabeledInput> inputs;
          for (const auto& [u, label] : data) inputs.push_back({u, label});
          std::vector<CertMethod> ms;
          for (const auto& s : methods) ms.push_back(parse_method(s));
          std::vector<std::tuple<std::string, double, double>> out;
          for (const auto& p : certified_fraction_curve(net, inputs, ms, eps_grid)) {
            out.emplace_back(to_string(p.method), p.epsilon, p.fraction);
          }
          return out;
        },
        py::arg("net"), py::arg("data"), py::arg("methods"), py::arg("eps_grid"));
}
