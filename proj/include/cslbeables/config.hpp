#pragma once

#include "cslbeables/generators.hpp"

#include <cstdint>
#include <string>

namespace csl {

enum class Scenario {
    UnitaryEquivariance,
    BohmLimit,
    NelsonVariance,
    CslCollapse,
    CslMomentumDiffusion,
    PhaseSpaceFokkerPlanck,
    DecoherenceRate,
};

Scenario scenario_from_string(const std::string& name);
const char* to_string(Scenario scenario);

// Flat key-value configuration.  Every field has a scenario-dependent
// default; a config file needs only `scenario` plus whatever it overrides.
struct ExperimentConfig {
    Scenario scenario = Scenario::UnitaryEquivariance;

    // lattice
    int n_sites = 64;
    double spacing = 0.25;
    double origin = -8.0;
    Potential potential; // "free", "harmonic(omega)", or a (x, V) table

    // physics
    double alpha = 1.0;
    double lambda = 0.0;
    double mass = 1.0;
    double hbar = 1.0;
    double nu = -1.0; // sentinel: hbar / (2 mass)
    std::string route = "linear"; // linear | nonlinear

    // jump process
    double beta = 0.0;
    double sigma = 1.0;
    double xi = 0.0;
    double omega = 1.0;
    std::string calibration = "manual"; // nelson | grw | manual
    int walkers = 10000;
    double epsilon_floor = 1e-12; // relative to max(P)

    // langevin
    std::string integrator = "bohm"; // bohm | nelson | csl_x | csl_p | phase_space
    std::string drift_mode = "coupled"; // p0 | coupled

    // run control
    double dt = 0.01;
    double t_final = 1.0;
    int trajectories = 10000;
    std::uint64_t seed = 20250815;
    int checkpoints = 20;

    // initial state
    double packet_center = 0.0;
    double packet_width = 1.0;
    double packet_momentum = 0.0;
    double packet_momentum_width = 0.5; // phase-space density width in p
    double separation = 2.0;            // two-packet scenarios

    bool dump_wavefunctions = false;
    std::string out_dir = ".";
};

ExperimentConfig default_config(Scenario scenario);

// Strict parser: the text must be a flat JSON object containing `scenario`;
// unknown keys, wrong types, and invalid enum strings raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// "free", "harmonic(omega)", or "table(x:V; x:V; ...)"
Potential parse_potential(const std::string& text);
std::string potential_to_string(const Potential& potential);

} // namespace csl
