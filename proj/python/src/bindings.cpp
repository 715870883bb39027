#include "sapinn/errors.hpp"
#include "sapinn/oracles.hpp"
#include "sapinn/runner.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace sapinn;

namespace {

py::dict grid_to_dict(const GridField& g) {
    py::dict d;
    d["axis_names"] = g.axis_names;
    d["axes"] = g.axes;
    d["values"] = g.values;
    return d;
}

InterfaceScheme scheme_of(const std::string& s) {
    if (s == "strong") return InterfaceScheme::strong;
    if (s == "harmonic_flux") return InterfaceScheme::harmonic_flux;
    throw std::invalid_argument("scheme must be 'strong' or 'harmonic_flux'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Sensitivity-regularized PINN core";

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    m.def("adv_diff_exact", &adv_diff_exact, py::arg("x"), py::arg("eps"),
          "Closed-form advection-diffusion solution and its eps-derivative.");

    m.def(
        "poisson9_fd_solve",
        [](const std::vector<double>& k, int grid_n, const std::string& scheme) {
            return grid_to_dict(poisson9_fd_solve(k, grid_n, scheme_of(scheme)));
        },
        py::arg("k"), py::arg("grid_n") = 129, py::arg("scheme") = "strong");

    m.def(
        "poisson9_sensitivity",
        [](const std::vector<double>& k, int index, int grid_n, const std::string& scheme, double h) {
            const InterfaceScheme s = scheme_of(scheme);
            const ParamSolver solver = [grid_n, s](std::span<const double> kk) { return poisson9_fd_solve(kk, grid_n, s); };
            return grid_to_dict(fd_param_sensitivity(solver, k, index, "k" + std::to_string(index + 1), h).field);
        },
        py::arg("k"), py::arg("index"), py::arg("grid_n") = 129, py::arg("scheme") = "strong", py::arg("h") = 0.0,
        "Central-difference du/dk_i (index 0..8) of the finite-difference solution.");

    m.def(
        "twophase1d_front",
        [](double t, double k, double x_star) {
            const FrontEstimate f = twophase1d_front(t, k, x_star);
            return py::make_tuple(f.x_f, f.dx_f_dk, f.t_fill);
        },
        py::arg("t"), py::arg("k") = 1.0, py::arg("x_star") = 0.5, "(x_f, dx_f/dk, t_fill) of the sharp interface.");

    m.def("level_crossing",
          [](const std::vector<double>& xs, const std::vector<double>& values, double level) {
              return level_crossing(xs, values, level);
          },
          py::arg("xs"), py::arg("values"), py::arg("level") = 0.5);

    m.def(
        "canonical_config", [](const std::string& text) { return to_json(parse_config(text)).dump(); },
        py::arg("text"), "Validated config with every default made explicit, as JSON text.");
    m.def(
        "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text"));

    m.def(
        "run",
        [](const std::string& text, bool write_outputs) {
            RunOptions o;
            o.write_outputs = write_outputs;
            RunResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(parse_config(text), o);
            }
            return py::make_tuple(r.metrics.dump(), r.directory.string(), r.network.save());
        },
        py::arg("text"), py::arg("write_outputs") = true,
        "Train and evaluate; returns (metrics JSON, bundle directory, checkpoint JSON).");

    m.def(
        "sweep_loss",
        [](const std::string& checkpoint, const std::string& text) {
            const ExperimentConfig c = parse_config(text);
            const Network net = Network::load(checkpoint);
            const ProblemSpec p = build_problem(c);
            const CollocationSet pts = build_points(c, p);
            std::vector<std::pair<std::vector<std::string>, std::vector<std::vector<double>>>> out;
            for (const auto& s : c.evaluation.sweeps) {
                SweepTable t = sweep_loss(net, p, pts, s);
                out.emplace_back(t.params, std::move(t.rows));
            }
            return out;
        },
        py::arg("checkpoint"), py::arg("text"), "Per configured sweep: (parameter names, rows of params then loss_f).");

    m.def(
        "forward",
        [](const std::string& checkpoint, const std::vector<double>& point) { return Network::load(checkpoint).forward(point); },
        py::arg("checkpoint"), py::arg("point"));
}
