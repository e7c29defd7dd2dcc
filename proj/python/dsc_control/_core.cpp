#include "dsc/baselines.hpp"
#include "dsc/double_spectral.hpp"
#include "dsc/errors.hpp"
#include "dsc/harness.hpp"
#include "dsc/signals.hpp"
#include "dsc/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <random>

namespace py = pybind11;
using namespace dsc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<VectorXd> trace_from(const MatrixXd& rows) {
    std::vector<VectorXd> out;
    out.reserve(rows.rows());
    for (Eigen::Index t = 0; t < rows.rows(); ++t) out.push_back(rows.row(t).transpose());
    return out;
}

py::dict result_to_dict(const ExperimentResult& r) {
    py::dict d;
    d["name"] = r.config.name;
    d["controllers"] = r.aggregate.controllers;
    d["mean"] = r.aggregate.mean;
    d["half_width"] = r.aggregate.half_width;
    d["trials"] = r.aggregate.trials;
    py::list failures;
    for (std::size_t i = 0; i < r.failures.size(); ++i) {
        py::dict f;
        f["trial"] = r.failed_trials[i];
        f["controller"] = r.failures[i].controller;
        f["t"] = r.failures[i].t;
        f["message"] = r.failures[i].message;
        failures.append(f);
    }
    d["failures"] = failures;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "Double spectral control: filters, controllers and the benchmark harness";

    py::register_exception<ParameterError>(mod, "ParameterError", PyExc_ValueError);
    py::register_exception<NumericalError>(mod, "NumericalError", PyExc_ArithmeticError);

    // spectral filters
    mod.def("build_hankel", [](int size, double gamma) { return build_hankel(size, gamma).entries; },
            py::arg("size"), py::arg("gamma"));

    py::class_<SpectralBasis>(mod, "SpectralBasis")
        .def_readonly("gamma", &SpectralBasis::gamma)
        .def_readonly("window", &SpectralBasis::window)
        .def_readonly("count", &SpectralBasis::count)
        .def_readonly("eigenvalues", &SpectralBasis::eigenvalues)
        .def_readonly("filters", &SpectralBasis::filters)
        .def("weight", &SpectralBasis::weight);

    mod.def("top_eigenpairs", [](int size, double gamma, int k) { return top_eigenpairs(build_hankel(size, gamma), k); },
            py::arg("size"), py::arg("gamma"), py::arg("k"));
    mod.def("make_basis", &make_basis, py::arg("window"), py::arg("count"), py::arg("gamma"));
    mod.def("save_basis", &save_basis, py::arg("basis"), py::arg("path"));
    mod.def("load_basis", &load_basis, py::arg("path"));

    // systems
    py::class_<SystemModel>(mod, "SystemModel")
        .def(py::init([](MatrixXd A, MatrixXd B, MatrixXd C) {
                 SystemModel m;
                 m.A = std::move(A);
                 m.B = std::move(B);
                 m.C = std::move(C);
                 m.validate();
                 fill_bounds(m);
                 return m;
             }),
             py::arg("A"), py::arg("B"), py::arg("C"))
        .def_readwrite("A", &SystemModel::A)
        .def_readwrite("B", &SystemModel::B)
        .def_readwrite("C", &SystemModel::C)
        .def_readwrite("kappa", &SystemModel::kappa)
        .def_readwrite("kappa_B", &SystemModel::kappa_B)
        .def_readwrite("kappa_C", &SystemModel::kappa_C)
        .def_readwrite("gamma", &SystemModel::gamma)
        .def_readwrite("W", &SystemModel::W)
        .def_readwrite("G", &SystemModel::G);

    mod.def(
        "random_system",
        [](int d, int n, int p, double rho, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return random_system(d, n, p, rho, rng);
        },
        py::arg("d"), py::arg("n"), py::arg("p"), py::arg("spectral_radius"), py::arg("seed"));
    mod.def("markov_parameters", &markov_parameters, py::arg("model"), py::arg("count"));

    py::class_<CostFunction>(mod, "CostFunction")
        .def_static("quadratic", &CostFunction::quadratic, py::arg("Q"), py::arg("R"))
        .def("__call__",
             [](const CostFunction& c, const VectorXd& y, const VectorXd& u) {
                 const CostEval e = c(y, u);
                 return py::make_tuple(e.value, e.grad_y, e.grad_u);
             })
        .def_property_readonly("Q", &CostFunction::Q)
        .def_property_readonly("R", &CostFunction::R);

    // streaming convolution and nature tracking
    py::class_<StreamConvolver>(mod, "StreamConvolver")
        .def(py::init([](int dim, MatrixXd filters, bool naive) {
                 return StreamConvolver(dim, std::move(filters), naive ? ConvMode::Naive : ConvMode::Fast);
             }),
             py::arg("dim"), py::arg("filters"), py::arg("naive") = false)
        .def("push", &StreamConvolver::push)
        .def("query", &StreamConvolver::query)
        .def_property_readonly("time", &StreamConvolver::time);

    py::class_<NatureState>(mod, "NatureState")
        .def(py::init<int, int, int>(), py::arg("d"), py::arg("p"), py::arg("capacity"))
        .def("update", &NatureState::update, py::arg("model"), py::arg("u_prev"), py::arg("y"), py::arg("t"))
        .def("at", &NatureState::at)
        .def_property_readonly("time", &NatureState::time);

    // double spectral control
    py::class_<DscParams>(mod, "DscParams")
        .def(py::init(&DscParams::create), py::arg("n"), py::arg("p"), py::arg("h"), py::arg("h_tilde"), py::arg("m"),
             py::arg("m_tilde"), py::arg("gamma"), py::arg("eta") = 0.0)
        .def_readonly("h", &DscParams::h)
        .def_readonly("h_tilde", &DscParams::h_tilde)
        .def_readonly("m", &DscParams::m)
        .def_readonly("m_tilde", &DscParams::m_tilde)
        .def_readonly("lifting", &DscParams::lifting)
        .def_readonly("learning", &DscParams::learning)
        .def_property(
            "M", [](const DscParams& p) { return p.M.data; },
            [](DscParams& p, const MatrixXd& m) {
                detail::require(m.rows() == p.M.data.rows() && m.cols() == p.M.data.cols(),
                                "DscParams.M: expected " + detail::dims(p.M.data.rows(), p.M.data.cols()));
                p.M.data = m;
            })
        .def_property_readonly("feature_dim", &DscParams::feature_dim);

    mod.def(
        "dsc_features", [](const DscParams& p, const MatrixXd& y_nat, long t) {
            return dsc_features_at(p, trace_from(y_nat), t);
        },
        py::arg("params"), py::arg("y_nat"), py::arg("t"), "y_nat holds one observation per row");
    mod.def(
        "dsc_control", [](const DscParams& p, const MatrixXd& y_nat, long t) {
            return VectorXd(p.M.data * dsc_features_at(p, trace_from(y_nat), t));
        },
        py::arg("params"), py::arg("y_nat"), py::arg("t"));
    mod.def(
        "counterfactual_outputs",
        [](const DscParams& p, const MatrixXd& y_nat, long t, const SystemModel& model, int truncation) {
            const Counterfactual cf = counterfactual_outputs(p, trace_from(y_nat), t, model, truncation);
            return py::make_tuple(cf.y, cf.u);
        },
        py::arg("params"), py::arg("y_nat"), py::arg("t"), py::arg("model"), py::arg("truncation"));
    mod.def(
        "loss_gradient",
        [](const DscParams& p, const MatrixXd& y_nat, long t, const SystemModel& model, const CostFunction& cost,
           int truncation) { return loss_gradient(p, trace_from(y_nat), t, model, cost, truncation).data; },
        py::arg("params"), py::arg("y_nat"), py::arg("t"), py::arg("model"), py::arg("cost"), py::arg("truncation"));

    mod.def(
        "schedule_params",
        [](long T, double gamma, double kappa, double kappa_B, double kappa_C, double W, double G, int d, double C0) {
            const Schedule s = schedule_params({T, gamma, kappa, kappa_B, kappa_C, W, G, d, C0});
            py::dict out;
            out["m"] = s.m;
            out["h"] = s.h;
            out["m_tilde"] = s.m_tilde;
            out["h_tilde"] = s.h_tilde;
            out["eta"] = s.eta;
            out["R"] = s.R;
            out["R_M"] = s.R_M;
            return out;
        },
        py::arg("T"), py::arg("gamma"), py::arg("kappa") = 1.0, py::arg("kappa_B") = 1.0, py::arg("kappa_C") = 1.0,
        py::arg("W") = 1.0, py::arg("G") = 1.0, py::arg("d") = 1, py::arg("C0") = 1.0);

    // baselines
    mod.def(
        "solve_dare",
        [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R, double tol, int max_iter) {
            const DareSolution s = solve_dare(A, B, Q, R, tol, max_iter);
            return py::make_tuple(s.P, s.gain);
        },
        py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), py::arg("tol") = 1e-10, py::arg("max_iter") = 100000);

    // harness
    mod.def("sliding_window", &sliding_window, py::arg("costs"), py::arg("fraction"));
    mod.def(
        "run_experiment",
        [](const std::string& config_json, int threads) {
            py::list out;
            for (const auto& c : parse_config(config_json)) {
                ExperimentResult r;
                {
                    py::gil_scoped_release release;
                    r = run_experiment(c, threads);
                }
                out.append(result_to_dict(r));
            }
            return out;
        },
        py::arg("config_json"), py::arg("threads") = 0);
    mod.def(
        "run_benchmark",
        [](const std::filesystem::path& config, const std::filesystem::path& out, std::optional<int> trials,
           std::optional<std::uint64_t> seed, bool naive_conv, int threads) {
            RunOverrides ov{trials, seed, naive_conv, threads};
            auto configs = load_config(config);
            std::vector<ExperimentResult> results;
            {
                py::gil_scoped_release release;
                results = run_benchmark(std::move(configs), out, ov);
            }
            py::list lst;
            for (const auto& r : results) lst.append(result_to_dict(r));
            return lst;
        },
        py::arg("config"), py::arg("out"), py::arg("trials") = py::none(), py::arg("seed") = py::none(),
        py::arg("naive_conv") = false, py::arg("threads") = 0);
    mod.def("read_csv", [](const std::filesystem::path& path) {
        py::list rows;
        for (const auto& r : read_csv(path)) rows.append(py::make_tuple(r.t, r.controller, r.mean, r.ci_low, r.ci_high));
        return rows;
    });
}
