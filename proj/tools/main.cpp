#include "cslbeables/config.hpp"
#include "cslbeables/errors.hpp"
#include "cslbeables/experiment.hpp"
#include "cslbeables/stats.hpp"
#include "cslbeables/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

namespace {

struct ScenarioNote {
    const char* name;
    const char* note;
};

constexpr ScenarioNote scenario_notes[] = {
    {"unitary_equivariance",
     "stationary two-mode superposition in a harmonic trap; the jump-driven walker "
     "histogram must keep tracking |phi|^2"},
    {"bohm_limit",
     "plane wave on a periodic lattice; walkers drift at the lattice group velocity, "
     "approaching p/M as the spacing shrinks"},
    {"nelson_variance",
     "diffusive guidance on a free Gaussian packet; the ensemble variance follows the "
     "packet dispersion law"},
    {"csl_collapse",
     "two-packet superposition under collapse noise; the weighted walker ensemble tracks "
     "the weighted ensemble density while single runs localize"},
    {"csl_momentum_diffusion",
     "collapse noise kicking a free momentum variable; Var[p] grows linearly at the "
     "predicted rate"},
    {"phase_space_fokker_planck",
     "position-momentum pair under transport plus collapse kicks; moments are checked "
     "against an independent grid solution"},
    {"decoherence_rate",
     "two-packet superposition with no Hamiltonian; off-diagonal coherence decays "
     "exponentially at the closed-form rate"},
};

int run_scenario(const std::string& config_path, const std::string& scenario_name,
                 bool seed_set, std::uint64_t seed, int trajectories,
                 const std::string& out_dir) {
    csl::ExperimentConfig config;
    if (!config_path.empty()) config = csl::load_config(config_path);
    else if (!scenario_name.empty())
        config = csl::default_config(csl::scenario_from_string(scenario_name));
    else
        throw csl::ConfigError("pass --config FILE or --scenario NAME");
    if (seed_set) config.seed = seed;
    if (trajectories > 0) {
        config.trajectories = trajectories;
        config.walkers = trajectories;
    }
    if (!out_dir.empty()) config.out_dir = out_dir;

    const csl::EnsembleStats stats = csl::run_experiment(config);
    std::printf("scenario %s: %d checkpoints, final t = %.6g\n", csl::to_string(config.scenario),
                static_cast<int>(stats.times.size()), stats.times[stats.times.size() - 1]);
    for (const auto& [name, fit] : stats.fit_results) {
        if (fit.standard_error > 0.0)
            std::printf("  %s = %.8g +- %.3g\n", name.c_str(), fit.value, fit.standard_error);
        else
            std::printf("  %s = %.8g\n", name.c_str(), fit.value);
    }
    std::printf("outputs in %s: trajectories.csv, moments.json, histograms.json\n",
                config.out_dir.c_str());
    return 0;
}

int verify_all(bool seed_set, std::uint64_t seed, const std::string& out_dir) {
    const std::string base = out_dir.empty() ? std::string(".") : out_dir;
    const std::vector<csl::CriterionResult> results =
        seed_set ? csl::run_verification(base + "/verify_runs", seed)
                 : csl::run_verification(base + "/verify_runs");
    for (const auto& r : results) std::printf("%s\n", csl::format_criterion_line(r).c_str());
    const bool all = csl::write_verification_report(base + "/verify_report.json", results);
    std::printf("%s (report: %s/verify_report.json)\n",
                all ? "all criteria passed" : "verification FAILED", base.c_str());
    return all ? 0 : 3;
}

int print_moments(const std::string& input) {
    const auto frames = csl::read_trajectories_csv(input);
    const auto [times, rows] = csl::moments_by_time(frames);
    nlohmann::json doc;
    doc["schema_version"] = csl::schema_version;
    doc["times"] = std::vector<double>(times.data(), times.data() + times.size());
    for (const char* key : {"mean_x", "var_x", "mean_p", "var_p", "cov_xp"})
        doc[key] = nlohmann::json::array();
    for (const auto& row : rows) {
        doc["mean_x"].push_back(row.mean_x);
        doc["var_x"].push_back(row.var_x);
        doc["mean_p"].push_back(row.mean_p);
        doc["var_p"].push_back(row.var_p);
        doc["cov_xp"].push_back(row.cov_xp);
    }
    std::printf("%s\n", doc.dump(2).c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"beable trajectories for a lattice collapse model"};
    app.require_subcommand(1);

    std::string config_path;
    std::string scenario_name;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trajectories = 0;
    std::string out_dir;

    CLI::App* run = app.add_subcommand("run", "run one scenario and write its outputs");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--scenario", scenario_name, "scenario name (see `scenarios`)");
    run->add_option("--seed", seed, "override the random seed")->each([&](const std::string&) {
        seed_set = true;
    });
    run->add_option("--trajectories", trajectories,
                    "override both the trajectory and walker counts");
    run->add_option("--out-dir", out_dir, "output directory");

    CLI::App* verify = app.add_subcommand("verify", "run the acceptance battery");
    verify->add_option("--seed", seed, "override the random seed")
        ->each([&](const std::string&) { seed_set = true; });
    verify->add_option("--out-dir", out_dir, "directory for the report and scratch runs");

    CLI::App* moments = app.add_subcommand("moments", "recompute moments from a trajectory CSV");
    std::string input;
    moments->add_option("--input", input, "trajectories.csv path")->required();

    CLI::App* scenarios = app.add_subcommand("scenarios", "list scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return run_scenario(config_path, scenario_name, seed_set, seed, trajectories,
                                out_dir);
        if (verify->parsed()) return verify_all(seed_set, seed, out_dir);
        if (moments->parsed()) return print_moments(input);
        if (scenarios->parsed()) {
            for (const auto& s : scenario_notes) std::printf("%-26s %s\n", s.name, s.note);
            return 0;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::runtime_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
