#include "cslbeables/experiment.hpp"

#include "cslbeables/errors.hpp"
#include "cslbeables/evolution.hpp"
#include "cslbeables/fokker_planck.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/langevin.hpp"
#include "cslbeables/parallel.hpp"
#include "cslbeables/rng.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csl {

WaveFunction two_packet_superposition(const Grid& grid, double center, double separation,
                                      double width, double hbar) {
    const WaveFunction left = gaussian_packet(grid, center - 0.5 * separation, width, 0.0, hbar);
    const WaveFunction right = gaussian_packet(grid, center + 0.5 * separation, width, 0.0, hbar);
    WaveFunction out = make_wavefunction(grid, left.amplitudes + right.amplitudes);
    out.normalize();
    return out;
}

WaveFunction hamiltonian_eigenstate(const ExactPropagator& propagator, const Grid& grid,
                                    int index) {
    const Eigen::MatrixXcd& modes = propagator.modes();
    if (index < 0 || index >= modes.cols())
        throw std::invalid_argument("eigenstate index out of range");
    if (modes.rows() != grid.n_sites)
        throw std::invalid_argument("grid size does not match the propagator");
    Eigen::VectorXcd amps = modes.col(index) / std::sqrt(grid.spacing);
    Eigen::Index peak = 0;
    amps.cwiseAbs().maxCoeff(&peak);
    const std::complex<double> z = amps[peak];
    amps *= std::abs(z) / z;
    WaveFunction out = make_wavefunction(grid, std::move(amps));
    out.normalize();
    return out;
}

int nearest_site(const Grid& grid, double x) {
    const double wrapped = grid.wrap(x);
    int k = static_cast<int>(std::lround((wrapped - grid.origin) / grid.spacing));
    if (k >= grid.n_sites) k -= grid.n_sites;
    if (k < 0) k += grid.n_sites;
    return k;
}

TransitionMatrix transition_at(const WaveFunction& phi, const GeneratorMatrix& h,
                               const JumpParams& jump) {
    const Eigen::VectorXd p = probability_vector(phi);
    const double floor = jump.epsilon_floor_rel * p.maxCoeff();
    TransitionMatrix t = bell_transition(source_matrix(phi, h), p, floor);
    if (jump.beta > 0.0) t.t += gaussian_homogeneous(p, jump.sigma, jump.beta, floor).t;
    return t;
}

double column_drift_velocity(const TransitionMatrix& t, const Grid& grid, int from) {
    const Eigen::Index n = t.t.rows();
    if (from < 0 || from >= n) throw std::invalid_argument("site lies outside the lattice");
    double v = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
        if (m == from) continue;
        long long diff = m - from;
        if (2 * diff > n) diff -= n;
        else if (2 * diff < -n) diff += n;
        v += t.t(m, from) * static_cast<double>(diff) * grid.spacing;
    }
    return v;
}

namespace {

struct StepPlan {
    int n_steps = 1;
    double dt = 0.0;
    std::vector<int> checkpoint_steps; // ascending, starts at 0, ends at n_steps
    Eigen::VectorXd times;
};

StepPlan plan_steps(double t_final, double dt, int checkpoints) {
    if (!(t_final > 0.0)) throw ConfigError("t_final must be positive");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (checkpoints < 1) throw ConfigError("checkpoints must be at least 1");
    StepPlan plan;
    plan.n_steps = std::max(1, static_cast<int>(std::ceil(t_final / dt - 1e-9)));
    plan.dt = t_final / plan.n_steps;
    plan.checkpoint_steps.push_back(0);
    for (int k = 1; k <= checkpoints; ++k) {
        const int step = static_cast<int>(std::llround(
            static_cast<double>(k) * plan.n_steps / checkpoints));
        if (step > plan.checkpoint_steps.back()) plan.checkpoint_steps.push_back(step);
    }
    if (plan.checkpoint_steps.back() != plan.n_steps)
        plan.checkpoint_steps.push_back(plan.n_steps);
    plan.times.resize(static_cast<Eigen::Index>(plan.checkpoint_steps.size()));
    for (std::size_t i = 0; i < plan.checkpoint_steps.size(); ++i)
        plan.times[static_cast<Eigen::Index>(i)] = plan.checkpoint_steps[i] * plan.dt;
    return plan;
}

Grid config_grid(const ExperimentConfig& c) {
    return make_grid(c.n_sites, c.spacing, c.origin, Representation::Position);
}

CslParams config_params(const ExperimentConfig& c) {
    return make_csl_params(c.alpha, c.lambda, c.mass, c.hbar, c.nu);
}

JumpParams config_jump_params(const ExperimentConfig& c, const CslParams& params) {
    JumpParams jump;
    if (c.calibration == "nelson") {
        jump = nelson_calibrated(params.nu, c.sigma, c.spacing);
    } else if (c.calibration == "grw") {
        const double b = 2.0 * std::numbers::pi * c.hbar / (c.n_sites * c.spacing);
        jump = grw_calibrated(params, c.omega, b);
    } else {
        jump = make_jump_params(c.beta, c.sigma, c.xi, c.omega, c.epsilon_floor);
    }
    jump.epsilon_floor_rel = c.epsilon_floor;
    return jump;
}

void fill_moments_from_frames(EnsembleStats& stats, const std::vector<TrajectoryFrame>& frames) {
    if (frames.empty()) return;
    const auto grouped = moments_by_time(frames);
    const auto& rows = grouped.second;
    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    stats.mean_x.resize(n);
    stats.var_x.resize(n);
    stats.mean_p.resize(n);
    stats.var_p.resize(n);
    stats.cov_xp.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        stats.mean_x[i] = rows[static_cast<std::size_t>(i)].mean_x;
        stats.var_x[i] = rows[static_cast<std::size_t>(i)].var_x;
        stats.mean_p[i] = rows[static_cast<std::size_t>(i)].mean_p;
        stats.var_p[i] = rows[static_cast<std::size_t>(i)].var_p;
        stats.cov_xp[i] = rows[static_cast<std::size_t>(i)].cov_xp;
    }
}

std::string checkpoint_dump_path(const std::string& out_dir, std::size_t ck) {
    char name[64];
    std::snprintf(name, sizeof(name), "/wavefunctions/state_%02zu.csv", ck);
    return out_dir + name;
}

std::string trajectory_dump_path(const std::string& out_dir, int trajectory) {
    char name[64];
    std::snprintf(name, sizeof(name), "/wavefunctions/trajectory_%02d.csv", trajectory);
    return out_dir + name;
}

void dump_wavefunction(const std::string& path, const WaveFunction& phi) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# schema_version=" << schema_version << "\n";
    out << "site,re,im\n";
    for (Eigen::Index n = 0; n < phi.amplitudes.size(); ++n) {
        out << n << ',' << format_double(phi.amplitudes[n].real()) << ','
            << format_double(phi.amplitudes[n].imag()) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

int pieces_for(const TransitionMatrix& t, double dt) {
    const double worst = t.t.colwise().sum().maxCoeff();
    return std::max(1, static_cast<int>(std::ceil(worst * dt / 0.5)));
}

// fixed-size reduction blocks keep weighted sums independent of worker count
constexpr int reduction_block = 256;

int block_count(int items) { return (items + reduction_block - 1) / reduction_block; }

struct SharedJumpSetup {
    WaveFunction phi0;
    GeneratorMatrix h;
    const ExactPropagator* propagator = nullptr; // optional reuse
    bool static_rates = false;                   // P and J of phi0 never change
    bool unwrap_positions = false;
    bool uniform_window_start = false;
    double window_center = 0.0;
    double window_width = 0.0;
};

// Walkers ride one exactly evolved wavefunction; transition matrices are
// shared per step, so walkers advance with precomputed sub-step counts.
EnsembleStats run_shared_jump(const ExperimentConfig& config, const SharedJumpSetup& setup,
                              std::vector<TrajectoryFrame>& frames) {
    const Grid grid = setup.phi0.grid;
    const CslParams params = config_params(config);
    const JumpParams jump = config_jump_params(config, params);
    const StepPlan plan = plan_steps(config.t_final, config.dt, config.checkpoints);
    const int walkers = config.walkers;
    if (walkers < 1) throw ConfigError("walkers must be at least 1");

    std::optional<ExactPropagator> own;
    const ExactPropagator* propagator = setup.propagator;
    if (propagator == nullptr) {
        own.emplace(setup.h);
        propagator = &*own;
    }
    const Eigen::VectorXd p0 = probability_vector(setup.phi0);

    std::vector<BeableState> states(static_cast<std::size_t>(walkers));
    std::vector<int> initial_sites(states.size(), 0);
    std::vector<PhiloxRng> rngs;
    rngs.reserve(states.size());
    for (int w = 0; w < walkers; ++w) {
        PhiloxRng init(config.seed, stream_id(StreamPurpose::InitialDraw,
                                              static_cast<std::uint64_t>(w)));
        int site = 0;
        if (setup.uniform_window_start) {
            const double x =
                setup.window_center + (init.next_uniform() - 0.5) * setup.window_width;
            site = nearest_site(grid, x);
        } else {
            site = sample_site(p0, init);
        }
        states[static_cast<std::size_t>(w)].site = site;
        initial_sites[static_cast<std::size_t>(w)] = site;
        rngs.emplace_back(config.seed, stream_id(StreamPurpose::JumpDraws,
                                                 static_cast<std::uint64_t>(w)));
    }

    EnsembleStats stats;
    stats.times = plan.times;
    stats.tv_distance.resize(plan.times.size());
    frames.clear();
    frames.reserve(plan.checkpoint_steps.size() * states.size());

    const auto record = [&](std::size_t ck) {
        const double t = plan.times[static_cast<Eigen::Index>(ck)];
        Eigen::VectorXd p_ref = p0;
        if (!setup.static_rates || config.dump_wavefunctions) {
            const WaveFunction phi_ck = propagator->evolve(setup.phi0, t);
            if (!setup.static_rates) p_ref = probability_vector(phi_ck);
            if (config.dump_wavefunctions)
                dump_wavefunction(checkpoint_dump_path(config.out_dir, ck), phi_ck);
        }
        Eigen::VectorXd hist = Eigen::VectorXd::Zero(grid.n_sites);
        for (const auto& s : states) hist[s.site] += 1.0;
        stats.tv_distance[static_cast<Eigen::Index>(ck)] = tv_distance(hist, p_ref);
        stats.histograms.push_back(std::move(hist));
        for (std::size_t w = 0; w < states.size(); ++w) {
            TrajectoryFrame f;
            f.t = t;
            f.trajectory_id = static_cast<long>(w);
            f.x = setup.unwrap_positions
                      ? states[w].unwrapped_value(grid, initial_sites[w])
                      : states[w].value(grid);
            f.p = 0.0;
            frames.push_back(f);
        }
    };

    struct StepRates {
        TransitionMatrix t;
        int pieces = 1;
    };
    StepRates fixed;
    if (setup.static_rates) {
        fixed.t = transition_at(setup.phi0, setup.h, jump);
        fixed.pieces = pieces_for(fixed.t, plan.dt);
    }
    const long long matrix_bytes =
        static_cast<long long>(grid.n_sites) * grid.n_sites * 8;
    const int chunk_cap =
        std::max(1, static_cast<int>(25'000'000 / std::max<long long>(1, matrix_bytes)));

    record(0);
    std::vector<StepRates> chunk;
    for (std::size_t ck = 1; ck < plan.checkpoint_steps.size(); ++ck) {
        int step = plan.checkpoint_steps[ck - 1];
        const int end = plan.checkpoint_steps[ck];
        while (step < end) {
            const int chunk_end = std::min(end, step + chunk_cap);
            if (!setup.static_rates) {
                chunk.clear();
                for (int s = step; s < chunk_end; ++s) {
                    const WaveFunction phi = propagator->evolve(setup.phi0, s * plan.dt);
                    StepRates sr;
                    sr.t = transition_at(phi, setup.h, jump);
                    sr.pieces = pieces_for(sr.t, plan.dt);
                    chunk.push_back(std::move(sr));
                }
            }
            const int base = step;
            parallel_for(states.size(), [&](std::size_t w) {
                for (int s = base; s < chunk_end; ++s) {
                    const StepRates& sr =
                        setup.static_rates ? fixed : chunk[static_cast<std::size_t>(s - base)];
                    const double sub = plan.dt / sr.pieces;
                    for (int piece = 0; piece < sr.pieces; ++piece)
                        jump_step(states[w], sr.t, sub, rngs[w]);
                }
            });
            step = chunk_end;
        }
        record(ck);
    }

    fill_moments_from_frames(stats, frames);
    return stats;
}

EnsembleStats scenario_unitary_equivariance(const ExperimentConfig& config,
                                            std::vector<TrajectoryFrame>& frames) {
    const Grid grid = config_grid(config);
    SharedJumpSetup setup;
    setup.h = build_hamiltonian(grid, config.mass, config.potential, config.hbar);
    const ExactPropagator propagator(setup.h);
    setup.propagator = &propagator;
    const WaveFunction e0 = hamiltonian_eigenstate(propagator, grid, 0);
    const WaveFunction e1 = hamiltonian_eigenstate(propagator, grid, 1);
    setup.phi0 = make_wavefunction(grid, e0.amplitudes + e1.amplitudes);
    setup.phi0.normalize();
    EnsembleStats stats = run_shared_jump(config, setup, frames);
    stats.fit_results["tv_final"] = {stats.tv_distance[stats.tv_distance.size() - 1], 0.0};
    return stats;
}

EnsembleStats scenario_bohm_limit(const ExperimentConfig& config,
                                  std::vector<TrajectoryFrame>& frames) {
    const Grid grid = config_grid(config);
    SharedJumpSetup setup;
    setup.h = build_hamiltonian(grid, config.mass, config.potential, config.hbar);
    setup.phi0 = plane_wave(grid, config.packet_momentum, config.hbar);
    setup.static_rates = config.potential.kind == Potential::Kind::Free;
    setup.unwrap_positions = true;
    EnsembleStats stats = run_shared_jump(config, setup, frames);

    const CslParams params = config_params(config);
    const JumpParams jump = config_jump_params(config, params);
    const TransitionMatrix t0 = transition_at(setup.phi0, setup.h, jump);
    stats.fit_results["plane_wave_momentum"] = {
        nearest_lattice_momentum(grid, config.packet_momentum, config.hbar), 0.0};
    stats.fit_results["rate_velocity"] = {
        column_drift_velocity(t0, grid, grid.n_sites / 2), 0.0};
    stats.fit_results["mean_velocity"] = fit_linear_slope(stats.times, stats.mean_x);
    stats.fit_results["tv_final"] = {stats.tv_distance[stats.tv_distance.size() - 1], 0.0};
    return stats;
}

EnsembleStats scenario_nelson_variance(const ExperimentConfig& config,
                                       std::vector<TrajectoryFrame>& frames) {
    const Grid grid = config_grid(config);
    SharedJumpSetup setup;
    setup.h = build_hamiltonian(grid, config.mass, config.potential, config.hbar);
    const ExactPropagator propagator(setup.h);
    setup.propagator = &propagator;
    if (config.potential.kind == Potential::Kind::Harmonic) {
        // relaxation mode: walkers launched uniformly over a window around
        // the stationary ground state must settle onto R^2
        setup.phi0 = hamiltonian_eigenstate(propagator, grid, 0);
        setup.static_rates = true;
        setup.uniform_window_start = true;
        setup.window_center = config.packet_center;
        setup.window_width = config.separation;
    } else {
        setup.phi0 = gaussian_packet(grid, config.packet_center, config.packet_width,
                                     config.packet_momentum, config.hbar);
        setup.unwrap_positions = true;
    }
    EnsembleStats stats = run_shared_jump(config, setup, frames);
    stats.fit_results["tv_final"] = {stats.tv_distance[stats.tv_distance.size() - 1], 0.0};
    return stats;
}

EnsembleStats scenario_csl_collapse(const ExperimentConfig& config,
                                    std::vector<TrajectoryFrame>& frames) {
    const Grid grid = config_grid(config);
    const CslParams params = config_params(config);
    const JumpParams jump = config_jump_params(config, params);
    const StepPlan plan = plan_steps(config.t_final, config.dt, config.checkpoints);
    const int walkers = config.walkers;
    if (walkers < 1) throw ConfigError("walkers must be at least 1");
    const GeneratorMatrix h = build_hamiltonian(grid, config.mass, config.potential, config.hbar);
    const LocalizationKernel kernel(grid, config.alpha);
    const WaveFunction phi0 = two_packet_superposition(
        grid, config.packet_center, config.separation, config.packet_width, config.hbar);
    const Eigen::VectorXd p0 = probability_vector(phi0);

    const std::size_t n_ck = plan.checkpoint_steps.size();
    const Eigen::Index n = grid.n_sites;
    const int blocks = block_count(walkers);
    const int dumps = config.dump_wavefunctions ? std::min(walkers, 4) : 0;

    std::vector<double> xs(n_ck * static_cast<std::size_t>(walkers));
    std::vector<std::vector<Eigen::VectorXd>> block_hist(
        static_cast<std::size_t>(blocks),
        std::vector<Eigen::VectorXd>(n_ck, Eigen::VectorXd::Zero(n)));
    std::vector<std::vector<Eigen::VectorXd>> block_ref = block_hist;
    std::vector<WaveFunction> dumped(static_cast<std::size_t>(dumps), phi0);

    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        const int w_begin = static_cast<int>(b) * reduction_block;
        const int w_end = std::min(walkers, w_begin + reduction_block);
        for (int w = w_begin; w < w_end; ++w) {
            const auto id = static_cast<std::uint64_t>(w);
            PhiloxRng init(config.seed, stream_id(StreamPurpose::InitialDraw, id));
            PhiloxRng draws(config.seed, stream_id(StreamPurpose::JumpDraws, id));
            LinearTrajectory trajectory(
                phi0, grid, PhiloxRng(config.seed, stream_id(StreamPurpose::CollapseNoise, id)));
            BeableState state;
            state.site = sample_site(p0, init);

            const auto record = [&](std::size_t ck) {
                const double weight = std::exp(trajectory.weight_log());
                block_hist[b][ck][state.site] += weight;
                block_ref[b][ck] += weight * probability_vector(trajectory.phi);
                xs[ck * static_cast<std::size_t>(walkers) + static_cast<std::size_t>(w)] =
                    state.value(grid);
            };
            record(0);
            std::size_t next_ck = 1;
            for (int s = 0; s < plan.n_steps; ++s) {
                advance_guided(state, trajectory.phi, &h, jump, plan.dt, draws);
                trajectory.step(&h, kernel, params, plan.dt);
                if (next_ck < n_ck && s + 1 == plan.checkpoint_steps[next_ck]) {
                    record(next_ck);
                    ++next_ck;
                }
            }
            if (w < dumps) dumped[static_cast<std::size_t>(w)] = trajectory.phi;
        }
    });

    EnsembleStats stats;
    stats.times = plan.times;
    stats.tv_distance.resize(plan.times.size());
    for (std::size_t ck = 0; ck < n_ck; ++ck) {
        Eigen::VectorXd hist = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd ref = Eigen::VectorXd::Zero(n);
        for (int b = 0; b < blocks; ++b) {
            hist += block_hist[static_cast<std::size_t>(b)][ck];
            ref += block_ref[static_cast<std::size_t>(b)][ck];
        }
        stats.tv_distance[static_cast<Eigen::Index>(ck)] = tv_distance(hist, ref);
        const double mass = hist.sum();
        stats.histograms.push_back(hist * (static_cast<double>(walkers) / mass));
    }
    frames.clear();
    frames.reserve(n_ck * static_cast<std::size_t>(walkers));
    for (std::size_t ck = 0; ck < n_ck; ++ck) {
        for (int w = 0; w < walkers; ++w) {
            TrajectoryFrame f;
            f.t = plan.times[static_cast<Eigen::Index>(ck)];
            f.trajectory_id = w;
            f.x = xs[ck * static_cast<std::size_t>(walkers) + static_cast<std::size_t>(w)];
            f.p = 0.0;
            frames.push_back(f);
        }
    }
    for (int d = 0; d < dumps; ++d)
        dump_wavefunction(trajectory_dump_path(config.out_dir, d),
                          dumped[static_cast<std::size_t>(d)]);
    fill_moments_from_frames(stats, frames);
    stats.fit_results["tv_final"] = {stats.tv_distance[stats.tv_distance.size() - 1], 0.0};
    return stats;
}

EnsembleStats scenario_csl_momentum_diffusion(const ExperimentConfig& config,
                                              std::vector<TrajectoryFrame>& frames) {
    const CslParams params = config_params(config);
    const StepPlan plan = plan_steps(config.t_final, config.dt, config.checkpoints);
    const int trajectories = config.trajectories;
    if (trajectories < 1) throw ConfigError("trajectories must be at least 1");

    const std::size_t n_ck = plan.checkpoint_steps.size();
    std::vector<double> ps(n_ck * static_cast<std::size_t>(trajectories));
    parallel_for(static_cast<std::size_t>(trajectories), [&](std::size_t k) {
        PhiloxRng rng(config.seed, stream_id(StreamPurpose::MomentumNoise, k));
        LangevinState state;
        state.x = config.packet_center;
        state.p = config.packet_momentum;
        state.p0 = config.packet_momentum;
        ps[k] = state.p;
        std::size_t next_ck = 1;
        for (int s = 0; s < plan.n_steps; ++s) {
            step_csl_momentum(state, params, plan.dt, rng);
            state.t += plan.dt;
            if (next_ck < n_ck && s + 1 == plan.checkpoint_steps[next_ck]) {
                ps[next_ck * static_cast<std::size_t>(trajectories) + k] = state.p;
                ++next_ck;
            }
        }
    });

    EnsembleStats stats;
    stats.times = plan.times;
    frames.clear();
    frames.reserve(n_ck * static_cast<std::size_t>(trajectories));
    for (std::size_t ck = 0; ck < n_ck; ++ck) {
        for (int k = 0; k < trajectories; ++k) {
            TrajectoryFrame f;
            f.t = plan.times[static_cast<Eigen::Index>(ck)];
            f.trajectory_id = k;
            f.x = config.packet_center;
            f.p = ps[ck * static_cast<std::size_t>(trajectories) + static_cast<std::size_t>(k)];
            frames.push_back(f);
        }
    }
    fill_moments_from_frames(stats, frames);
    stats.fit_results["var_p_slope"] = fit_linear_slope(stats.times, stats.var_p);
    stats.fit_results["mean_p_slope"] = fit_linear_slope(stats.times, stats.mean_p);
    return stats;
}

EnsembleStats scenario_phase_space(const ExperimentConfig& config,
                                   std::vector<TrajectoryFrame>& frames) {
    const CslParams params = config_params(config);
    const StepPlan plan = plan_steps(config.t_final, config.dt, config.checkpoints);
    const int trajectories = config.trajectories;
    if (trajectories < 1) throw ConfigError("trajectories must be at least 1");

    const std::size_t n_ck = plan.checkpoint_steps.size();
    std::vector<double> xs(n_ck * static_cast<std::size_t>(trajectories));
    std::vector<double> ps(xs.size());
    parallel_for(static_cast<std::size_t>(trajectories), [&](std::size_t k) {
        PhiloxRng init(config.seed, stream_id(StreamPurpose::InitialDraw, k));
        PhiloxRng momentum_rng(config.seed, stream_id(StreamPurpose::MomentumNoise, k));
        PhiloxRng position_rng(config.seed, stream_id(StreamPurpose::LangevinNoise, k));
        LangevinState state;
        state.x = config.packet_center + config.packet_width * init.next_gaussian();
        state.p = config.packet_momentum + config.packet_momentum_width * init.next_gaussian();
        state.p0 = state.p;
        xs[k] = state.x;
        ps[k] = state.p;
        std::size_t next_ck = 1;
        for (int s = 0; s < plan.n_steps; ++s) {
            step_phase_space(state, nullptr, params, plan.dt, momentum_rng, position_rng);
            state.t += plan.dt;
            if (next_ck < n_ck && s + 1 == plan.checkpoint_steps[next_ck]) {
                const std::size_t slot = next_ck * static_cast<std::size_t>(trajectories) + k;
                xs[slot] = state.x;
                ps[slot] = state.p;
                ++next_ck;
            }
        }
    });

    EnsembleStats stats;
    stats.times = plan.times;
    frames.clear();
    frames.reserve(n_ck * static_cast<std::size_t>(trajectories));
    for (std::size_t ck = 0; ck < n_ck; ++ck) {
        for (int k = 0; k < trajectories; ++k) {
            const std::size_t slot =
                ck * static_cast<std::size_t>(trajectories) + static_cast<std::size_t>(k);
            TrajectoryFrame f;
            f.t = plan.times[static_cast<Eigen::Index>(ck)];
            f.trajectory_id = k;
            f.x = xs[slot];
            f.p = ps[slot];
            frames.push_back(f);
        }
    }
    fill_moments_from_frames(stats, frames);

    // independent finite-difference solution of the same phase-space flow
    const Grid x_grid = config_grid(config);
    const double diffusion = params.hbar * params.hbar * params.alpha * params.lambda / 4.0;
    const double var_p_final = config.packet_momentum_width * config.packet_momentum_width +
                               2.0 * diffusion * config.t_final;
    const double sigma_p = std::sqrt(var_p_final);
    const int np = 256;
    const double p_span = 16.0 * sigma_p;
    const Grid p_grid = make_grid(np, p_span / np, config.packet_momentum - 0.5 * p_span,
                                  Representation::Momentum);
    const Eigen::MatrixXd q0 =
        gaussian_phase_density(x_grid, p_grid, config.packet_center, config.packet_width,
                               config.packet_momentum, config.packet_momentum_width);
    const double p_max = std::max(std::abs(p_grid.site(0)), std::abs(p_grid.site(np - 1)));
    double dt_fp = config.dt;
    if (p_max > 0.0)
        dt_fp = std::min(dt_fp, 1.8 * x_grid.spacing * params.mass / p_max);
    if (diffusion > 0.0)
        dt_fp = std::min(dt_fp, 0.45 * p_grid.spacing * p_grid.spacing / diffusion);
    const Eigen::MatrixXd q =
        fokker_planck_oracle(params, x_grid, p_grid, q0, config.t_final, dt_fp);
    const MomentRow fp = phase_space_moments(q, x_grid, p_grid);
    stats.fit_results["fp_mean_x"] = {fp.mean_x, 0.0};
    stats.fit_results["fp_var_x"] = {fp.var_x, 0.0};
    stats.fit_results["fp_mean_p"] = {fp.mean_p, 0.0};
    stats.fit_results["fp_var_p"] = {fp.var_p, 0.0};
    stats.fit_results["fp_cov_xp"] = {fp.cov_xp, 0.0};
    return stats;
}

EnsembleStats scenario_decoherence_rate(const ExperimentConfig& config,
                                        std::vector<TrajectoryFrame>& frames) {
    const Grid grid = config_grid(config);
    const CslParams params = config_params(config);
    const StepPlan plan = plan_steps(config.t_final, config.dt, config.checkpoints);
    const int trajectories = config.trajectories;
    if (trajectories < 2) throw ConfigError("decoherence needs at least 2 trajectories");
    const LocalizationKernel kernel(grid, config.alpha);
    // collapse-only dynamics: the closed off-diagonal decay law holds exactly
    // when no Hamiltonian mixes the sites
    const WaveFunction phi0 = two_packet_superposition(
        grid, config.packet_center, config.separation, config.packet_width, config.hbar);
    const int site1 = nearest_site(grid, config.packet_center - 0.5 * config.separation);
    const int site2 = nearest_site(grid, config.packet_center + 0.5 * config.separation);

    const std::size_t n_ck = plan.checkpoint_steps.size();
    const Eigen::Index n = grid.n_sites;
    const int blocks = block_count(trajectories);
    const int dumps = config.dump_wavefunctions ? std::min(trajectories, 4) : 0;

    std::vector<std::vector<std::complex<double>>> block_rho(
        static_cast<std::size_t>(blocks), std::vector<std::complex<double>>(n_ck, {0.0, 0.0}));
    std::vector<std::vector<Eigen::VectorXd>> block_dens(
        static_cast<std::size_t>(blocks),
        std::vector<Eigen::VectorXd>(n_ck, Eigen::VectorXd::Zero(n)));
    std::vector<WaveFunction> dumped(static_cast<std::size_t>(dumps), phi0);

    parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b) {
        const int k_begin = static_cast<int>(b) * reduction_block;
        const int k_end = std::min(trajectories, k_begin + reduction_block);
        for (int k = k_begin; k < k_end; ++k) {
            LinearTrajectory trajectory(
                phi0, grid,
                PhiloxRng(config.seed, stream_id(StreamPurpose::CollapseNoise,
                                                 static_cast<std::uint64_t>(k))));
            const auto record = [&](std::size_t ck) {
                const double weight = std::exp(trajectory.weight_log());
                block_rho[b][ck] += weight * trajectory.phi.amplitudes[site1] *
                                    std::conj(trajectory.phi.amplitudes[site2]);
                block_dens[b][ck] += weight * probability_vector(trajectory.phi);
            };
            record(0);
            std::size_t next_ck = 1;
            for (int s = 0; s < plan.n_steps; ++s) {
                trajectory.step(nullptr, kernel, params, plan.dt);
                if (next_ck < n_ck && s + 1 == plan.checkpoint_steps[next_ck]) {
                    record(next_ck);
                    ++next_ck;
                }
            }
            if (k < dumps) dumped[static_cast<std::size_t>(k)] = trajectory.phi;
        }
    });

    EnsembleStats stats;
    stats.times = plan.times;
    stats.offdiag_abs.resize(plan.times.size());
    std::vector<std::pair<double, double>> series;
    series.reserve(n_ck);
    for (std::size_t ck = 0; ck < n_ck; ++ck) {
        std::complex<double> rho{0.0, 0.0};
        Eigen::VectorXd dens = Eigen::VectorXd::Zero(n);
        for (int b = 0; b < blocks; ++b) {
            rho += block_rho[static_cast<std::size_t>(b)][ck];
            dens += block_dens[static_cast<std::size_t>(b)][ck];
        }
        // raw-measure average: divide by the trajectory count, whose expected
        // total weight is the trajectory count itself
        const double magnitude = std::abs(rho) / trajectories;
        stats.offdiag_abs[static_cast<Eigen::Index>(ck)] = magnitude;
        series.emplace_back(plan.times[static_cast<Eigen::Index>(ck)], magnitude);
        stats.histograms.push_back(dens * (static_cast<double>(trajectories) / dens.sum()));
    }
    for (int d = 0; d < dumps; ++d)
        dump_wavefunction(trajectory_dump_path(config.out_dir, d),
                          dumped[static_cast<std::size_t>(d)]);
    frames.clear();
    stats.fit_results["offdiag_decay_rate"] = fit_decay_rate(series);
    return stats;
}

} // namespace

EnsembleStats run_experiment(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
    if (config.dump_wavefunctions)
        std::filesystem::create_directories(config.out_dir + "/wavefunctions");

    std::vector<TrajectoryFrame> frames;
    EnsembleStats stats;
    switch (config.scenario) {
        case Scenario::UnitaryEquivariance:
            stats = scenario_unitary_equivariance(config, frames);
            break;
        case Scenario::BohmLimit:
            stats = scenario_bohm_limit(config, frames);
            break;
        case Scenario::NelsonVariance:
            stats = scenario_nelson_variance(config, frames);
            break;
        case Scenario::CslCollapse:
            stats = scenario_csl_collapse(config, frames);
            break;
        case Scenario::CslMomentumDiffusion:
            stats = scenario_csl_momentum_diffusion(config, frames);
            break;
        case Scenario::PhaseSpaceFokkerPlanck:
            stats = scenario_phase_space(config, frames);
            break;
        case Scenario::DecoherenceRate:
            stats = scenario_decoherence_rate(config, frames);
            break;
    }

    write_trajectories_csv(config.out_dir + "/trajectories.csv", frames);
    write_moments_json(config.out_dir + "/moments.json", stats);
    write_histograms_json(config.out_dir + "/histograms.json", stats, config_grid(config));
    return stats;
}

} // namespace csl
