#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "projlab/experiment.hpp"

namespace py = pybind11;
using namespace projlab;

namespace {

py::dict to_dict(const Estimate& e) {
    py::dict d;
    d["value"] = e.value;
    d["stderr"] = e.stderr_;
    d["n"] = e.n;
    d["params"] = e.params;
    d["notes"] = e.notes;
    return d;
}

// Group and form shared by every structure built from one session.
class Session {
public:
    Session(double r_trunc, const std::string& cache_dir) : group_(punctured_torus_group()) {
        ExperimentConfig cfg;
        cfg.r_trunc = r_trunc;
        cfg.cache_dir = cache_dir;
        form_ = std::make_unique<CuspForm4>(obtain_form(group_, cfg));
    }

    ProjectiveStructure structure(cplx c) const { return {group_, *form_, c}; }
    const FuchsianGroup& group() const { return group_; }
    const CuspForm4& form() const { return *form_; }

private:
    FuchsianGroup group_;
    std::unique_ptr<CuspForm4> form_;
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Monte Carlo estimators for projective structures on the once-punctured torus";

    py::register_exception<Error>(m, "ProjlabError", PyExc_ValueError);

    m.def("predict_chi", &predict_chi, py::arg("delta"), py::arg("k") = 0);
    m.def("parse_complex", &parse_complex, py::arg("text"));
    m.def("translation_length", [](const std::string& word) {
        static const FuchsianGroup g = punctured_torus_group();
        return translation_length(g.element(word).matrix);
    });
    m.def(
        "run_experiment",
        [](const std::string& config_text, const std::string& command, const std::string& out_dir) {
            ExperimentConfig cfg = parse_config(config_text);
            if (!command.empty()) cfg.command = command;
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            std::ostringstream log;
            int status;
            {
                py::gil_scoped_release release;
                status = run_experiment(cfg, log);
            }
            return py::make_tuple(status, log.str());
        },
        py::arg("config_text"), py::arg("command") = "", py::arg("out_dir") = "",
        "Runs a pipeline from key = value text; returns (exit status, log).");

    py::class_<Session>(m, "Session")
        .def(py::init<double, const std::string&>(), py::arg("r_trunc") = 14.0, py::arg("cache_dir") = "")
        .def("sup_norm", [](const Session& s) { return s.form().sup_norm(); })
        .def("trace_squared",
             [](const Session& s, cplx c, const std::string& word) {
                 return holonomy(s.structure(c)).evaluate(word).trace_squared();
             },
             py::arg("c"), py::arg("word"))
        .def("parabolicity_error",
             [](const Session& s, cplx c) {
                 return std::abs(holonomy(s.structure(c)).evaluate("ABab").trace_squared() - 4.0);
             },
             py::arg("c"))
        .def("lyapunov",
             [](const Session& s, cplx c, double T, int n, double dt, std::uint64_t seed, int workers) {
                 Representation rep = holonomy(s.structure(c));
                 py::gil_scoped_release release;
                 Estimate e = lyapunov_brownian(rep, s.group(), T, n, dt, seed, workers);
                 py::gil_scoped_acquire acquire;
                 return to_dict(e);
             },
             py::arg("c"), py::arg("T") = 200.0, py::arg("n") = 400, py::arg("dt") = 0.005, py::arg("seed") = 1,
             py::arg("workers") = 1)
        .def("lyapunov_ball",
             [](const Session& s, cplx c, double R, int n, std::uint64_t seed) {
                 return to_dict(lyapunov_ball(holonomy(s.structure(c)), s.group(), R, n, seed));
             },
             py::arg("c"), py::arg("R") = 12.0, py::arg("n") = 2000, py::arg("seed") = 1)
        .def("degree",
             [](const Session& s, cplx c, double R) {
                 return to_dict(degree_estimate(s.structure(c), R, default_centers(), default_targets()));
             },
             py::arg("c"), py::arg("R") = 8.0);
}
