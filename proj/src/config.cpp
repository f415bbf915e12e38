#include "cslbeables/config.hpp"

#include "cslbeables/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

namespace csl {

Scenario scenario_from_string(const std::string& name) {
    if (name == "unitary_equivariance") return Scenario::UnitaryEquivariance;
    if (name == "bohm_limit") return Scenario::BohmLimit;
    if (name == "nelson_variance") return Scenario::NelsonVariance;
    if (name == "csl_collapse") return Scenario::CslCollapse;
    if (name == "csl_momentum_diffusion") return Scenario::CslMomentumDiffusion;
    if (name == "phase_space_fokker_planck") return Scenario::PhaseSpaceFokkerPlanck;
    if (name == "decoherence_rate") return Scenario::DecoherenceRate;
    throw ConfigError("unknown scenario: " + name);
}

const char* to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::UnitaryEquivariance: return "unitary_equivariance";
        case Scenario::BohmLimit: return "bohm_limit";
        case Scenario::NelsonVariance: return "nelson_variance";
        case Scenario::CslCollapse: return "csl_collapse";
        case Scenario::CslMomentumDiffusion: return "csl_momentum_diffusion";
        case Scenario::PhaseSpaceFokkerPlanck: return "phase_space_fokker_planck";
        case Scenario::DecoherenceRate: return "decoherence_rate";
    }
    return "unknown";
}

Potential parse_potential(const std::string& text) {
    Potential out;
    if (text == "free") {
        out.kind = Potential::Kind::Free;
        return out;
    }
    if (text.rfind("harmonic(", 0) == 0 && text.back() == ')') {
        const std::string inner = text.substr(9, text.size() - 10);
        char* end = nullptr;
        const double omega = std::strtod(inner.c_str(), &end);
        if (end == inner.c_str() || *end != '\0' || !(omega > 0.0))
            throw ConfigError("harmonic potential needs a positive frequency: " + text);
        out.kind = Potential::Kind::Harmonic;
        out.omega = omega;
        return out;
    }
    if (text.rfind("table(", 0) == 0 && text.back() == ')') {
        const std::string inner = text.substr(6, text.size() - 7);
        std::stringstream rows(inner);
        std::string row;
        while (std::getline(rows, row, ';')) {
            const auto colon = row.find(':');
            if (colon == std::string::npos)
                throw ConfigError("table potential entries must look like x:V, got: " + row);
            char* end = nullptr;
            const std::string xs = row.substr(0, colon);
            const std::string vs = row.substr(colon + 1);
            const double x = std::strtod(xs.c_str(), &end);
            if (end == xs.c_str()) throw ConfigError("bad table abscissa: " + row);
            const double v = std::strtod(vs.c_str(), &end);
            if (end == vs.c_str()) throw ConfigError("bad table value: " + row);
            out.table.emplace_back(x, v);
        }
        if (out.table.empty()) throw ConfigError("table potential has no entries");
        std::sort(out.table.begin(), out.table.end());
        out.kind = Potential::Kind::Table;
        return out;
    }
    throw ConfigError("cannot parse potential: " + text +
                      " (expected free, harmonic(omega), or table(x:V; ...))");
}

std::string potential_to_string(const Potential& potential) {
    switch (potential.kind) {
        case Potential::Kind::Free: return "free";
        case Potential::Kind::Harmonic: {
            std::ostringstream out;
            out << "harmonic(" << potential.omega << ")";
            return out.str();
        }
        case Potential::Kind::Table: {
            std::ostringstream out;
            out << "table(";
            for (std::size_t i = 0; i < potential.table.size(); ++i) {
                if (i > 0) out << "; ";
                out << potential.table[i].first << ":" << potential.table[i].second;
            }
            out << ")";
            return out.str();
        }
    }
    return "free";
}

ExperimentConfig default_config(Scenario scenario) {
    ExperimentConfig c;
    c.scenario = scenario;
    switch (scenario) {
        case Scenario::UnitaryEquivariance:
            c.n_sites = 64;
            c.spacing = 0.25;
            c.origin = -8.0;
            c.potential = parse_potential("harmonic(1.0)");
            c.lambda = 0.0;
            c.beta = 0.0;
            c.walkers = 10000;
            c.dt = 0.01;
            c.t_final = 2.0 * std::numbers::pi;
            c.checkpoints = 8;
            break;
        case Scenario::BohmLimit:
            c.n_sites = 256;
            c.spacing = 0.25;
            c.origin = -32.0;
            c.lambda = 0.0;
            c.beta = 0.0;
            c.walkers = 2000;
            c.dt = 0.01;
            c.t_final = 5.0;
            // 12th momentum mode of the 64-unit box
            c.packet_momentum = 12.0 * 2.0 * std::numbers::pi / 64.0;
            c.checkpoints = 10;
            break;
        case Scenario::NelsonVariance:
            c.n_sites = 512;
            c.spacing = 0.125;
            c.origin = -32.0;
            c.lambda = 0.0;
            c.calibration = "nelson";
            c.sigma = 2.0;
            c.walkers = 10000;
            c.dt = 0.01;
            c.t_final = 3.0;
            c.packet_width = 1.0;
            c.checkpoints = 12;
            break;
        case Scenario::CslCollapse:
            c.n_sites = 64;
            c.spacing = 0.5;
            c.origin = -16.0;
            c.alpha = 1.0;
            c.lambda = 0.25;
            c.beta = 0.0;
            c.walkers = 10000;
            c.dt = 0.01;
            c.t_final = 2.0;
            c.packet_width = 1.0;
            c.separation = 8.0;
            c.checkpoints = 10;
            break;
        case Scenario::CslMomentumDiffusion:
            c.integrator = "csl_p";
            c.alpha = 1.0;
            c.lambda = 0.04;
            c.dt = 0.01;
            c.t_final = 10.0;
            c.trajectories = 10000;
            c.checkpoints = 20;
            c.packet_momentum = 0.0;
            break;
        case Scenario::PhaseSpaceFokkerPlanck:
            c.integrator = "phase_space";
            c.n_sites = 320;
            c.spacing = 0.1;
            c.origin = -12.0;
            c.alpha = 1.0;
            c.lambda = 0.3;
            c.nu = 0.0; // matches the transport + momentum-diffusion oracle
            c.dt = 0.01;
            c.t_final = 4.0;
            c.trajectories = 10000;
            c.checkpoints = 16;
            c.packet_center = 0.0;
            c.packet_width = 1.0;
            c.packet_momentum = 1.0;
            c.packet_momentum_width = 0.5;
            break;
        case Scenario::DecoherenceRate:
            c.n_sites = 128;
            c.spacing = 0.25;
            c.origin = -16.0;
            c.alpha = 1.0;
            c.lambda = 0.5;
            c.dt = 0.01;
            c.t_final = 2.4;
            c.trajectories = 2000;
            c.separation = 2.0;
            c.packet_width = 0.5;
            c.checkpoints = 24;
            break;
    }
    return c;
}

namespace {

double as_double(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number())
        throw ConfigError("config key '" + key + "' must be a number");
    return value.get<double>();
}

int as_int(const nlohmann::json& value, const std::string& key) {
    if (!value.is_number_integer())
        throw ConfigError("config key '" + key + "' must be an integer");
    return value.get<int>();
}

std::uint64_t as_seed(const nlohmann::json& value, const std::string& key) {
    if (value.is_number_unsigned()) return value.get<std::uint64_t>();
    if (value.is_number_integer() && value.get<long long>() >= 0)
        return static_cast<std::uint64_t>(value.get<long long>());
    throw ConfigError("config key '" + key + "' must be a nonnegative integer");
}

bool as_bool(const nlohmann::json& value, const std::string& key) {
    if (!value.is_boolean())
        throw ConfigError("config key '" + key + "' must be true or false");
    return value.get<bool>();
}

std::string as_string(const nlohmann::json& value, const std::string& key) {
    if (!value.is_string())
        throw ConfigError("config key '" + key + "' must be a string");
    return value.get<std::string>();
}

void require_choice(const std::string& value, std::initializer_list<const char*> choices,
                    const std::string& key) {
    for (const char* choice : choices)
        if (value == choice) return;
    std::string allowed;
    for (const char* choice : choices) {
        if (!allowed.empty()) allowed += ", ";
        allowed += choice;
    }
    throw ConfigError("config key '" + key + "' must be one of {" + allowed + "}, got: " + value);
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& error) {
        throw ConfigError(std::string("config is not valid JSON: ") + error.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (!doc.contains("scenario"))
        throw ConfigError("config must name a scenario");
    ExperimentConfig c = default_config(scenario_from_string(as_string(doc["scenario"], "scenario")));

    for (const auto& [key, value] : doc.items()) {
        if (key == "scenario") continue;
        else if (key == "n_sites") c.n_sites = as_int(value, key);
        else if (key == "spacing") c.spacing = as_double(value, key);
        else if (key == "origin") c.origin = as_double(value, key);
        else if (key == "potential") c.potential = parse_potential(as_string(value, key));
        else if (key == "alpha") c.alpha = as_double(value, key);
        else if (key == "lambda") c.lambda = as_double(value, key);
        else if (key == "mass") c.mass = as_double(value, key);
        else if (key == "hbar") c.hbar = as_double(value, key);
        else if (key == "nu") c.nu = as_double(value, key);
        else if (key == "route") {
            c.route = as_string(value, key);
            require_choice(c.route, {"linear", "nonlinear"}, key);
        } else if (key == "beta") c.beta = as_double(value, key);
        else if (key == "sigma") c.sigma = as_double(value, key);
        else if (key == "xi") c.xi = as_double(value, key);
        else if (key == "omega") c.omega = as_double(value, key);
        else if (key == "calibration") {
            c.calibration = as_string(value, key);
            require_choice(c.calibration, {"nelson", "grw", "manual"}, key);
        } else if (key == "walkers") c.walkers = as_int(value, key);
        else if (key == "epsilon_floor") c.epsilon_floor = as_double(value, key);
        else if (key == "integrator") {
            c.integrator = as_string(value, key);
            require_choice(c.integrator, {"bohm", "nelson", "csl_x", "csl_p", "phase_space"}, key);
        } else if (key == "drift_mode") {
            c.drift_mode = as_string(value, key);
            require_choice(c.drift_mode, {"p0", "coupled"}, key);
        } else if (key == "dt") c.dt = as_double(value, key);
        else if (key == "t_final") c.t_final = as_double(value, key);
        else if (key == "trajectories") c.trajectories = as_int(value, key);
        else if (key == "seed") c.seed = as_seed(value, key);
        else if (key == "checkpoints") c.checkpoints = as_int(value, key);
        else if (key == "packet_center") c.packet_center = as_double(value, key);
        else if (key == "packet_width") c.packet_width = as_double(value, key);
        else if (key == "packet_momentum") c.packet_momentum = as_double(value, key);
        else if (key == "packet_momentum_width") c.packet_momentum_width = as_double(value, key);
        else if (key == "separation") c.separation = as_double(value, key);
        else if (key == "dump_wavefunctions") c.dump_wavefunctions = as_bool(value, key);
        else if (key == "out_dir") c.out_dir = as_string(value, key);
        else throw ConfigError("unknown config key: " + key);
    }

    if (c.n_sites < 2) throw ConfigError("n_sites must be at least 2");
    if (!(c.spacing > 0.0)) throw ConfigError("spacing must be positive");
    if (!(c.alpha > 0.0)) throw ConfigError("alpha must be positive");
    if (c.lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    if (!(c.mass > 0.0)) throw ConfigError("mass must be positive");
    if (!(c.hbar > 0.0)) throw ConfigError("hbar must be positive");
    if (c.beta < 0.0) throw ConfigError("beta must be nonnegative");
    if (!(c.sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (c.xi < 0.0) throw ConfigError("xi must be nonnegative");
    if (!(c.omega > 0.0)) throw ConfigError("omega must be positive");
    if (c.walkers < 1) throw ConfigError("walkers must be positive");
    if (!(c.epsilon_floor > 0.0)) throw ConfigError("epsilon_floor must be positive");
    if (!(c.dt > 0.0)) throw ConfigError("dt must be positive");
    if (c.t_final < 0.0) throw ConfigError("t_final must be nonnegative");
    if (c.trajectories < 1) throw ConfigError("trajectories must be positive");
    if (c.checkpoints < 1) throw ConfigError("checkpoints must be positive");
    if (!(c.packet_width > 0.0)) throw ConfigError("packet_width must be positive");
    if (!(c.packet_momentum_width > 0.0))
        throw ConfigError("packet_momentum_width must be positive");
    if (!(c.separation >= 0.0)) throw ConfigError("separation must be nonnegative");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

} // namespace csl
