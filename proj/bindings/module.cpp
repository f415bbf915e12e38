#include "cslbeables/config.hpp"
#include "cslbeables/experiment.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/jump.hpp"
#include "cslbeables/stats.hpp"
#include "cslbeables/verify.hpp"
#include "cslbeables/wavefunction.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

PYBIND11_MODULE(_core, m) {
    m.doc() = "beable trajectories for a lattice collapse model";
    m.attr("schema_version") = csl::schema_version;

    py::class_<csl::Grid>(m, "Grid")
        .def_readonly("n_sites", &csl::Grid::n_sites)
        .def_readonly("spacing", &csl::Grid::spacing)
        .def_readonly("origin", &csl::Grid::origin)
        .def("site", &csl::Grid::site, py::arg("k"))
        .def("sites", &csl::Grid::sites)
        .def("extent", &csl::Grid::extent)
        .def("wrap", &csl::Grid::wrap, py::arg("x"));
    m.def(
        "make_grid",
        [](int n_sites, double spacing, double origin) {
            return csl::make_grid(n_sites, spacing, origin, csl::Representation::Position);
        },
        py::arg("n_sites"), py::arg("spacing"), py::arg("origin"));

    py::class_<csl::WaveFunction>(m, "WaveFunction")
        .def_readonly("grid", &csl::WaveFunction::grid)
        .def_readonly("amplitudes", &csl::WaveFunction::amplitudes)
        .def_readonly("time", &csl::WaveFunction::time)
        .def("norm", &csl::WaveFunction::norm)
        .def("probability", &csl::WaveFunction::probability);
    m.def("gaussian_packet", &csl::gaussian_packet, py::arg("grid"), py::arg("center"),
          py::arg("width"), py::arg("momentum") = 0.0, py::arg("hbar") = 1.0);
    m.def("plane_wave", &csl::plane_wave, py::arg("grid"), py::arg("momentum"),
          py::arg("hbar") = 1.0);
    m.def("two_packet_superposition", &csl::two_packet_superposition, py::arg("grid"),
          py::arg("center"), py::arg("separation"), py::arg("width"), py::arg("hbar") = 1.0);
    m.def("probability_vector", &csl::probability_vector, py::arg("phi"));

    py::class_<csl::GeneratorMatrix>(m, "GeneratorMatrix")
        .def_readonly("matrix", &csl::GeneratorMatrix::matrix)
        .def_readonly("hermitian", &csl::GeneratorMatrix::hermitian)
        .def("hermiticity_defect", &csl::GeneratorMatrix::hermiticity_defect);
    m.def(
        "build_hamiltonian",
        [](const csl::Grid& grid, double mass, const std::string& potential, double hbar) {
            return csl::build_hamiltonian(grid, mass, csl::parse_potential(potential), hbar);
        },
        py::arg("grid"), py::arg("mass") = 1.0, py::arg("potential") = "free",
        py::arg("hbar") = 1.0);

    py::class_<csl::JumpParams>(m, "JumpParams")
        .def_readwrite("beta", &csl::JumpParams::beta)
        .def_readwrite("sigma", &csl::JumpParams::sigma)
        .def_readwrite("xi", &csl::JumpParams::xi)
        .def_readwrite("omega", &csl::JumpParams::omega)
        .def_readwrite("epsilon_floor_rel", &csl::JumpParams::epsilon_floor_rel);
    m.def("make_jump_params", &csl::make_jump_params, py::arg("beta") = 0.0,
          py::arg("sigma") = 1.0, py::arg("xi") = 0.0, py::arg("omega") = 1.0,
          py::arg("epsilon_floor_rel") = 1e-12);
    py::class_<csl::TransitionMatrix>(m, "TransitionMatrix")
        .def_readonly("t", &csl::TransitionMatrix::t);
    m.def("transition_at", &csl::transition_at, py::arg("phi"), py::arg("hamiltonian"),
          py::arg("jump"));
    m.def("column_drift_velocity", &csl::column_drift_velocity, py::arg("transition"),
          py::arg("grid"), py::arg("from_site"));

    py::class_<csl::ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_property(
            "scenario",
            [](const csl::ExperimentConfig& c) { return std::string(csl::to_string(c.scenario)); },
            [](csl::ExperimentConfig& c, const std::string& name) {
                c.scenario = csl::scenario_from_string(name);
            })
        .def_readwrite("n_sites", &csl::ExperimentConfig::n_sites)
        .def_readwrite("spacing", &csl::ExperimentConfig::spacing)
        .def_readwrite("origin", &csl::ExperimentConfig::origin)
        .def_property(
            "potential",
            [](const csl::ExperimentConfig& c) { return csl::potential_to_string(c.potential); },
            [](csl::ExperimentConfig& c, const std::string& text) {
                c.potential = csl::parse_potential(text);
            })
        .def_readwrite("alpha", &csl::ExperimentConfig::alpha)
        .def_readwrite("lambda_", &csl::ExperimentConfig::lambda)
        .def_readwrite("mass", &csl::ExperimentConfig::mass)
        .def_readwrite("hbar", &csl::ExperimentConfig::hbar)
        .def_readwrite("nu", &csl::ExperimentConfig::nu)
        .def_readwrite("route", &csl::ExperimentConfig::route)
        .def_readwrite("beta", &csl::ExperimentConfig::beta)
        .def_readwrite("sigma", &csl::ExperimentConfig::sigma)
        .def_readwrite("xi", &csl::ExperimentConfig::xi)
        .def_readwrite("omega", &csl::ExperimentConfig::omega)
        .def_readwrite("calibration", &csl::ExperimentConfig::calibration)
        .def_readwrite("walkers", &csl::ExperimentConfig::walkers)
        .def_readwrite("epsilon_floor", &csl::ExperimentConfig::epsilon_floor)
        .def_readwrite("integrator", &csl::ExperimentConfig::integrator)
        .def_readwrite("drift_mode", &csl::ExperimentConfig::drift_mode)
        .def_readwrite("dt", &csl::ExperimentConfig::dt)
        .def_readwrite("t_final", &csl::ExperimentConfig::t_final)
        .def_readwrite("trajectories", &csl::ExperimentConfig::trajectories)
        .def_readwrite("seed", &csl::ExperimentConfig::seed)
        .def_readwrite("checkpoints", &csl::ExperimentConfig::checkpoints)
        .def_readwrite("packet_center", &csl::ExperimentConfig::packet_center)
        .def_readwrite("packet_width", &csl::ExperimentConfig::packet_width)
        .def_readwrite("packet_momentum", &csl::ExperimentConfig::packet_momentum)
        .def_readwrite("packet_momentum_width", &csl::ExperimentConfig::packet_momentum_width)
        .def_readwrite("separation", &csl::ExperimentConfig::separation)
        .def_readwrite("dump_wavefunctions", &csl::ExperimentConfig::dump_wavefunctions)
        .def_readwrite("out_dir", &csl::ExperimentConfig::out_dir);
    m.def(
        "default_config",
        [](const std::string& scenario) {
            return csl::default_config(csl::scenario_from_string(scenario));
        },
        py::arg("scenario"));
    m.def("load_config", &csl::load_config, py::arg("path"));
    m.def("parse_config", &csl::parse_config, py::arg("json_text"));
    m.def("scenario_names", [] {
        return std::vector<std::string>{
            "unitary_equivariance",     "bohm_limit",       "nelson_variance", "csl_collapse",
            "csl_momentum_diffusion",   "phase_space_fokker_planck",           "decoherence_rate"};
    });

    py::class_<csl::FitResult>(m, "FitResult")
        .def_readonly("value", &csl::FitResult::value)
        .def_readonly("standard_error", &csl::FitResult::standard_error);
    py::class_<csl::EnsembleStats>(m, "EnsembleStats")
        .def_readonly("times", &csl::EnsembleStats::times)
        .def_readonly("mean_x", &csl::EnsembleStats::mean_x)
        .def_readonly("var_x", &csl::EnsembleStats::var_x)
        .def_readonly("mean_p", &csl::EnsembleStats::mean_p)
        .def_readonly("var_p", &csl::EnsembleStats::var_p)
        .def_readonly("cov_xp", &csl::EnsembleStats::cov_xp)
        .def_readonly("histograms", &csl::EnsembleStats::histograms)
        .def_readonly("tv_distance", &csl::EnsembleStats::tv_distance)
        .def_readonly("offdiag_abs", &csl::EnsembleStats::offdiag_abs)
        .def_readonly("fit_results", &csl::EnsembleStats::fit_results);
    m.def("run_experiment", &csl::run_experiment, py::arg("config"),
          py::call_guard<py::gil_scoped_release>());

    py::class_<csl::CriterionResult>(m, "CriterionResult")
        .def_readonly("name", &csl::CriterionResult::name)
        .def_readonly("pass_", &csl::CriterionResult::pass)
        .def_readonly("detail", &csl::CriterionResult::detail);
    m.def("run_verification", &csl::run_verification, py::arg("scratch_dir"),
          py::arg("seed") = 20250815, py::call_guard<py::gil_scoped_release>());
    m.def("format_criterion_line", &csl::format_criterion_line, py::arg("result"));
    m.def("write_verification_report", &csl::write_verification_report, py::arg("path"),
          py::arg("results"));
}
