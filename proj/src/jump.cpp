#include "cslbeables/jump.hpp"

#include "cslbeables/errors.hpp"
#include "cslbeables/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

namespace csl {

Eigen::VectorXd probability_vector(const WaveFunction& phi) {
    return phi.amplitudes.cwiseAbs2() * phi.grid.spacing;
}

SourceMatrix source_matrix(const WaveFunction& phi, const GeneratorMatrix& generator) {
    const Eigen::Index n = phi.grid.n_sites;
    if (generator.matrix.rows() != n || generator.matrix.cols() != n)
        throw RepresentationMismatch("generator size does not match the wavefunction grid");
    if (generator.representation != phi.grid.representation)
        throw RepresentationMismatch("generator and wavefunction representations differ");
    const Eigen::MatrixXcd outer = phi.amplitudes.conjugate() * phi.amplitudes.transpose();
    SourceMatrix out;
    out.j = 2.0 * phi.grid.spacing * outer.cwiseProduct(generator.matrix).imag();
    out.representation = generator.representation;
    out.includes_nonunitary = !generator.hermitian;
    return out;
}

Eigen::VectorXd csl_source_terms(const WaveFunction& phi, const LocalizationKernel& kernel,
                                 const NoiseField& noise, const CslParams& params, double dt,
                                 double norm_source) {
    const Eigen::VectorXd rates = nonunitary_rates(kernel, noise, params, dt, norm_source);
    const Eigen::VectorXd p = probability_vector(phi);
    if (phi.grid.representation == Representation::Momentum)
        return 2.0 * rates.mean() * p;
    if (rates.size() != p.size())
        throw RepresentationMismatch("kernel grid does not match the wavefunction grid");
    return 2.0 * rates.cwiseProduct(p);
}

TransitionMatrix bell_transition(const SourceMatrix& j, const Eigen::VectorXd& p,
                                 double epsilon_floor) {
    const Eigen::Index n = p.size();
    if (j.j.rows() != n || j.j.cols() != n)
        throw std::invalid_argument("source matrix and probability vector sizes differ");
    if (!(epsilon_floor > 0.0))
        throw std::invalid_argument("epsilon_floor must be positive");
    TransitionMatrix out;
    out.t = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index from = 0; from < n; ++from) {
        if (p[from] <= epsilon_floor) continue;
        for (Eigen::Index to = 0; to < n; ++to) {
            if (to == from || p[to] <= epsilon_floor) continue;
            const double flux = j.j(to, from);
            if (flux > 0.0) out.t(to, from) = flux / p[from];
        }
    }
    return out;
}

TransitionMatrix gaussian_homogeneous(const Eigen::VectorXd& p, double width, double rate,
                                      double epsilon_floor) {
    const Eigen::Index n = p.size();
    if (!(width > 0.0)) throw std::invalid_argument("width must be positive");
    if (rate < 0.0) throw std::invalid_argument("rate must be nonnegative");
    if (!(epsilon_floor > 0.0))
        throw std::invalid_argument("epsilon_floor must be positive");
    TransitionMatrix out;
    out.t = Eigen::MatrixXd::Zero(n, n);
    if (rate == 0.0) return out;
    int reach = static_cast<int>(std::ceil(6.0 * std::sqrt(width)));
    reach = std::min<int>(reach, (static_cast<int>(n) - 1) / 2);
    reach = std::max(reach, 1);
    for (Eigen::Index from = 0; from < n; ++from) {
        if (p[from] <= epsilon_floor) continue;
        // the stay-put weight keeps its share of the kernel mass so the
        // emitted jumps carry displacement moments rate*width and
        // rate*width*tilt exactly; its tilt is the symmetric k -> 0 limit
        const Eigen::Index up = (from + 1) % n;
        const Eigen::Index down = (from + n - 1) % n;
        double slope = 0.0;
        if (p[up] > epsilon_floor && p[down] > epsilon_floor)
            slope = 0.5 * std::log(p[up] / p[down]);
        const double mu = 0.5 * width * slope;
        double total = std::exp(-mu * mu / (2.0 * width));
        for (int k = -reach; k <= reach; ++k) {
            if (k == 0) continue;
            Eigen::Index to = (from + k) % n;
            if (to < 0) to += n;
            if (to == from || p[to] <= epsilon_floor) continue;
            const double log_ratio = std::log(p[to] / p[from]);
            const double shifted = k - width * log_ratio / (2.0 * k);
            const double weight = std::exp(-shifted * shifted / (2.0 * width));
            out.t(to, from) += weight;
            total += weight;
        }
        out.t.col(from) *= rate / total;
    }
    return out;
}

namespace {

// One categorical draw from `rates_to * dt`; returns the target site (== from
// when no jump fires).  Always consumes exactly one uniform.
int sample_target(const Eigen::Ref<const Eigen::VectorXd>& rates_to, int from, double dt,
                  PhiloxRng& rng) {
    const double total = rates_to.sum() * dt;
    if (total > 1.0)
        throw StepTooLarge("jump exit probability exceeds 1; reduce dt");
    const double u = rng.next_uniform();
    if (u >= total) return from;
    double cumulative = 0.0;
    for (Eigen::Index m = 0; m < rates_to.size(); ++m) {
        cumulative += rates_to[m] * dt;
        if (u < cumulative) return static_cast<int>(m);
    }
    return from;
}

void move_to(BeableState& state, int target, int n_sites) {
    if (target == state.site) return;
    int diff = target - state.site;
    if (2 * diff > n_sites) diff -= n_sites;
    else if (2 * diff < -n_sites) diff += n_sites;
    state.displacement += diff;
    state.site = target;
}

} // namespace

void jump_step(BeableState& state, const TransitionMatrix& t, double dt, PhiloxRng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Eigen::Index n = t.t.rows();
    if (state.site < 0 || state.site >= n)
        throw std::invalid_argument("beable site lies outside the lattice");
    const int target = sample_target(t.t.col(state.site), state.site, dt, rng);
    move_to(state, target, static_cast<int>(n));
}

void jump_advance(BeableState& state, const TransitionMatrix& t, double dt, PhiloxRng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double worst_exit = t.t.colwise().sum().maxCoeff();
    const int pieces =
        std::max(1, static_cast<int>(std::ceil(worst_exit * dt / 0.5)));
    const double sub = dt / pieces;
    for (int i = 0; i < pieces; ++i) jump_step(state, t, sub, rng);
}

double check_continuity(const WaveFunction& before, const WaveFunction& after,
                        const SourceMatrix& j, double dt) {
    if (!(before.grid == after.grid))
        throw RepresentationMismatch("continuity check needs both states on one grid");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Eigen::VectorXd p_before = probability_vector(before);
    const Eigen::VectorXd p_after = probability_vector(after);
    if (j.j.rows() != p_before.size())
        throw std::invalid_argument("source matrix size does not match the grid");
    const Eigen::VectorXd implied = (p_after - p_before) / dt;
    const Eigen::VectorXd sourced = j.j.rowwise().sum();
    return (implied - sourced).cwiseAbs().maxCoeff();
}

double tv_distance(const Eigen::VectorXd& counts, const Eigen::VectorXd& reference) {
    if (counts.size() != reference.size())
        throw std::invalid_argument("histogram and reference sizes differ");
    const double mass = counts.sum();
    const double ref_mass = reference.sum();
    if (!(mass > 0.0)) throw std::invalid_argument("histogram carries no mass");
    if (!(ref_mass > 0.0)) throw std::invalid_argument("reference carries no mass");
    return 0.5 * (counts / mass - reference / ref_mass).cwiseAbs().sum();
}

int sample_site(const Eigen::VectorXd& p, PhiloxRng& rng) {
    const double mass = p.sum();
    if (!(mass > 0.0)) throw std::invalid_argument("probability vector carries no mass");
    const double u = rng.next_uniform() * mass;
    double cumulative = 0.0;
    for (Eigen::Index m = 0; m < p.size(); ++m) {
        cumulative += p[m];
        if (u < cumulative) return static_cast<int>(m);
    }
    return static_cast<int>(p.size() - 1);
}

JumpParams make_jump_params(double beta, double sigma, double xi, double omega,
                            double epsilon_floor_rel) {
    if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (xi < 0.0) throw std::invalid_argument("xi must be nonnegative");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    if (!(epsilon_floor_rel > 0.0))
        throw std::invalid_argument("epsilon_floor_rel must be positive");
    JumpParams out;
    out.beta = beta;
    out.sigma = sigma;
    out.xi = xi;
    out.omega = omega;
    out.epsilon_floor_rel = epsilon_floor_rel;
    return out;
}

JumpParams nelson_calibrated(double nu, double sigma, double spacing) {
    if (nu < 0.0) throw std::invalid_argument("nu must be nonnegative");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (!(spacing > 0.0)) throw std::invalid_argument("spacing must be positive");
    JumpParams out;
    out.sigma = sigma;
    out.beta = 2.0 * nu / (sigma * spacing * spacing);
    return out;
}

JumpParams grw_calibrated(const CslParams& params, double omega, double momentum_spacing) {
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    if (!(momentum_spacing > 0.0))
        throw std::invalid_argument("momentum spacing must be positive");
    JumpParams out;
    out.omega = omega;
    out.xi = params.hbar * params.hbar * params.alpha * params.lambda /
             (2.0 * omega * momentum_spacing * momentum_spacing);
    return out;
}

namespace {

// Jump rates out of `from` for the current state: Bell rates built from one
// column of the Hamiltonian flux plus the homogeneous Gaussian column.
void fill_column_rates(Eigen::VectorXd& rates, const WaveFunction& phi,
                       const Eigen::VectorXd& p, const GeneratorMatrix* h,
                       double homogeneous_rate, double width, double epsilon_floor, int from) {
    rates.setZero();
    if (p[from] <= epsilon_floor) return;
    const Eigen::Index n = p.size();
    if (h != nullptr) {
        const Eigen::VectorXcd flux_col = h->matrix.col(from) * phi.amplitudes[from];
        for (Eigen::Index to = 0; to < n; ++to) {
            if (to == from || p[to] <= epsilon_floor) continue;
            const double flux = 2.0 * phi.grid.spacing *
                                std::imag(std::conj(phi.amplitudes[to]) * flux_col[to]);
            if (flux > 0.0) rates[to] = flux / p[from];
        }
    }
    if (homogeneous_rate > 0.0) {
        int reach = static_cast<int>(std::ceil(6.0 * std::sqrt(width)));
        reach = std::min<int>(reach, (static_cast<int>(n) - 1) / 2);
        reach = std::max(reach, 1);
        // the stay-put weight keeps its share of the kernel mass, same as the
        // full-matrix build, so the emitted moments stay calibrated
        const Eigen::Index up = (from + 1) % n;
        const Eigen::Index down = (from + n - 1) % n;
        double slope = 0.0;
        if (p[up] > epsilon_floor && p[down] > epsilon_floor)
            slope = 0.5 * std::log(p[up] / p[down]);
        const double mu = 0.5 * width * slope;
        double total = std::exp(-mu * mu / (2.0 * width));
        Eigen::VectorXd weights = Eigen::VectorXd::Zero(n);
        for (int k = -reach; k <= reach; ++k) {
            if (k == 0) continue;
            Eigen::Index to = (from + k) % n;
            if (to < 0) to += n;
            if (to == static_cast<Eigen::Index>(from) || p[to] <= epsilon_floor) continue;
            const double log_ratio = std::log(p[to] / p[from]);
            const double shifted = k - width * log_ratio / (2.0 * k);
            const double weight = std::exp(-shifted * shifted / (2.0 * width));
            weights[to] += weight;
            total += weight;
        }
        if (total > 0.0) rates += weights * (homogeneous_rate / total);
    }
}

// Advances a walker across dt against a frozen wavefunction, rebuilding the
// rate column after every move and capping each sub-step's exit probability
// at 0.5.
void advance_adaptive(BeableState& state, double dt, PhiloxRng& rng, Eigen::VectorXd& rates,
                      const std::function<void(int, Eigen::VectorXd&)>& fill) {
    double remaining = dt;
    fill(state.site, rates);
    const Eigen::Index n = rates.size();
    long safety = 0;
    while (remaining > 0.0) {
        if (++safety > 10'000'000)
            throw NumericalAbort("jump sub-stepping failed to terminate; rates diverged");
        const double exit = rates.sum();
        double sub = remaining;
        if (exit > 0.0 && exit * sub > 0.5) sub = 0.5 / exit;
        const int target = sample_target(rates, state.site, sub, rng);
        remaining -= sub;
        if (target != state.site) {
            move_to(state, target, static_cast<int>(n));
            if (remaining > 0.0) fill(state.site, rates);
        }
    }
}

} // namespace

Eigen::VectorXd outgoing_rates(const WaveFunction& phi, const GeneratorMatrix* h,
                               const JumpParams& jump, int from) {
    const Eigen::VectorXd p = probability_vector(phi);
    if (from < 0 || from >= p.size())
        throw std::invalid_argument("beable site lies outside the lattice");
    const double floor = jump.epsilon_floor_rel * p.maxCoeff();
    Eigen::VectorXd rates(p.size());
    fill_column_rates(rates, phi, p, h, jump.beta, jump.sigma, floor, from);
    return rates;
}

void advance_guided(BeableState& state, const WaveFunction& phi, const GeneratorMatrix* h,
                    const JumpParams& jump, double dt, PhiloxRng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Eigen::VectorXd p = probability_vector(phi);
    if (state.site < 0 || state.site >= p.size())
        throw std::invalid_argument("beable site lies outside the lattice");
    const double floor = jump.epsilon_floor_rel * p.maxCoeff();
    Eigen::VectorXd rates(p.size());
    advance_adaptive(state, dt, rng, rates, [&](int from, Eigen::VectorXd& out) {
        fill_column_rates(out, phi, p, h, jump.beta, jump.sigma, floor, from);
    });
}

EquivarianceResult equivariance_run_unitary(const WaveFunction& phi0, const GeneratorMatrix& h,
                                            const ExactPropagator& propagator,
                                            const JumpParams& jump, int walkers, double t_final,
                                            double dt, std::uint64_t seed) {
    if (walkers < 100) throw std::invalid_argument("equivariance runs need at least 100 walkers");
    if (t_final < 0.0) throw std::invalid_argument("t_final must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Eigen::Index n = phi0.grid.n_sites;

    std::vector<BeableState> states(static_cast<std::size_t>(walkers));
    std::vector<PhiloxRng> rngs;
    rngs.reserve(static_cast<std::size_t>(walkers));
    const Eigen::VectorXd p0 = probability_vector(phi0);
    for (int w = 0; w < walkers; ++w) {
        PhiloxRng init(seed, stream_id(StreamPurpose::InitialDraw, static_cast<std::uint64_t>(w)));
        states[static_cast<std::size_t>(w)].site = sample_site(p0, init);
        rngs.emplace_back(seed, stream_id(StreamPurpose::JumpDraws, static_cast<std::uint64_t>(w)));
    }

    const int steps = t_final > 0.0 ? std::max(1, static_cast<int>(std::lround(t_final / dt))) : 0;
    const double step_dt = steps > 0 ? t_final / steps : 0.0;
    for (int step = 0; step < steps; ++step) {
        const WaveFunction phi = propagator.evolve(phi0, step * step_dt);
        const Eigen::VectorXd p = probability_vector(phi);
        const double floor = jump.epsilon_floor_rel * p.maxCoeff();
        TransitionMatrix rates = bell_transition(source_matrix(phi, h), p, floor);
        if (jump.beta > 0.0)
            rates.t += gaussian_homogeneous(p, jump.sigma, jump.beta, floor).t;
        parallel_for(states.size(), [&](std::size_t w) {
            jump_advance(states[w], rates, step_dt, rngs[w]);
        });
    }

    EquivarianceResult out;
    out.histogram = Eigen::VectorXd::Zero(n);
    for (const auto& s : states) out.histogram[s.site] += 1.0;
    out.reference = probability_vector(propagator.evolve(phi0, t_final));
    out.tv = tv_distance(out.histogram, out.reference);
    return out;
}

EquivarianceResult equivariance_run_csl(const WaveFunction& phi0, const GeneratorMatrix* h,
                                        const LocalizationKernel& kernel, const CslParams& params,
                                        const JumpParams& jump, int walkers, double t_final,
                                        double dt, std::uint64_t seed) {
    if (walkers < 100) throw std::invalid_argument("equivariance runs need at least 100 walkers");
    if (t_final < 0.0) throw std::invalid_argument("t_final must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const Eigen::Index n = phi0.grid.n_sites;
    const int steps = t_final > 0.0 ? std::max(1, static_cast<int>(std::lround(t_final / dt))) : 0;
    const double step_dt = steps > 0 ? t_final / steps : 0.0;

    std::vector<int> final_sites(static_cast<std::size_t>(walkers), 0);
    std::vector<double> weight_logs(static_cast<std::size_t>(walkers), 0.0);
    Eigen::MatrixXd final_p(n, walkers);

    parallel_for(static_cast<std::size_t>(walkers), [&](std::size_t w) {
        PhiloxRng init(seed, stream_id(StreamPurpose::InitialDraw, w));
        PhiloxRng draws(seed, stream_id(StreamPurpose::JumpDraws, w));
        LinearTrajectory trajectory(phi0, kernel.grid(),
                                    PhiloxRng(seed, stream_id(StreamPurpose::CollapseNoise, w)));
        BeableState state;
        state.site = sample_site(probability_vector(phi0), init);

        Eigen::VectorXd rates(n);
        Eigen::VectorXd p = probability_vector(trajectory.phi);
        for (int step = 0; step < steps; ++step) {
            const double floor = jump.epsilon_floor_rel * p.maxCoeff();
            const WaveFunction& phi = trajectory.phi;
            advance_adaptive(state, step_dt, draws, rates, [&](int from, Eigen::VectorXd& out) {
                fill_column_rates(out, phi, p, h, jump.beta, jump.sigma, floor, from);
            });
            trajectory.step(h, kernel, params, step_dt);
            p = probability_vector(trajectory.phi);
        }
        final_sites[w] = state.site;
        weight_logs[w] = trajectory.weight_log();
        final_p.col(static_cast<Eigen::Index>(w)) = p;
    });

    double max_log = weight_logs[0];
    for (double wl : weight_logs) max_log = std::max(max_log, wl);
    EquivarianceResult out;
    out.histogram = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd reference = Eigen::VectorXd::Zero(n);
    double total_weight = 0.0;
    for (std::size_t w = 0; w < static_cast<std::size_t>(walkers); ++w) {
        const double weight = std::exp(weight_logs[w] - max_log);
        out.histogram[final_sites[w]] += weight;
        reference += weight * final_p.col(static_cast<Eigen::Index>(w));
        total_weight += weight;
    }
    out.reference = reference / total_weight;
    out.tv = tv_distance(out.histogram, out.reference);
    return out;
}

} // namespace csl
