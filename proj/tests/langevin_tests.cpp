#include <doctest.h>

#include "cslbeables/errors.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/jump.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/langevin.hpp"
#include "cslbeables/polar.hpp"
#include "cslbeables/rng.hpp"
#include "cslbeables/stats.hpp"
#include "cslbeables/wavefunction.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

using namespace csl;

TEST_CASE("guidance field of a plane wave is uniform drift with no osmosis") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const double mass = 2.0;
    const WaveFunction psi = plane_wave(grid, 1.3, 1.0);
    const double p = nearest_lattice_momentum(grid, 1.3, 1.0);

    const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), mass);
    for (int k = 0; k < grid.n_sites; ++k) {
        CHECK(field.velocity[k] == doctest::Approx(p / mass).epsilon(1e-10));
        CHECK(std::abs(field.osmotic[k]) < 1e-12);
        CHECK(!field.clamped[k]);
    }
}

TEST_CASE("gaussian osmotic term is exact at staggered midpoints") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    const double width = 1.0;
    const WaveFunction psi = gaussian_packet(grid, 0.0, width, 0.0, 1.0);
    const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);

    // R = exp(-x^2 / (4 w^2)), so (ln R)' at the midpoint is -(x + a/2)/(2 w^2)
    for (int k = 44; k < 84; ++k) {
        const double mid = grid.site(k) + 0.5 * grid.spacing;
        CHECK(field.osmotic[k] ==
              doctest::Approx(-mid / (2.0 * width * width)).epsilon(1e-8));
    }
}

TEST_CASE("nodes clamp the osmotic field without breaking it") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    Eigen::VectorXcd amps(grid.n_sites);
    for (int n = 0; n < grid.n_sites; ++n) {
        const double x = grid.site(n);
        amps[n] = x * std::exp(-x * x / 4.0);
    }
    WaveFunction excited = make_wavefunction(grid, amps);
    excited.normalize();

    const GuidanceField field = guidance_field(polar_decompose(excited, 1e-8, 1.0), 1.0);
    CHECK(field.velocity.allFinite());
    CHECK(field.osmotic.allFinite());
    CHECK(field.clamped.any());
    const double bound = 1.0 / (1e-8 * grid.spacing);
    CHECK(field.osmotic.cwiseAbs().maxCoeff() <= bound);
}

TEST_CASE("deterministic guidance moves at the phase velocity") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const WaveFunction psi = plane_wave(grid, 1.0, 1.0);
    const double p = nearest_lattice_momentum(grid, 1.0, 1.0);
    const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);

    LangevinState state;
    state.x = -2.0;
    const double dt = 0.01;
    for (int s = 0; s < 300; ++s) step_bohm(state, field, dt);
    CHECK(state.x == doctest::Approx(-2.0 + 300 * dt * p).epsilon(1e-10));
}

TEST_CASE("deterministic trajectories never cross") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    Potential well;
    well.kind = Potential::Kind::Harmonic;
    well.omega = 1.0;
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, well, 1.0);
    const ExactPropagator propagator(h);
    const WaveFunction psi0 = gaussian_packet(grid, 2.0, 1.0, 0.0, 1.0);

    const int walkers = 100;
    std::vector<LangevinState> states(walkers);
    for (int w = 0; w < walkers; ++w) states[w].x = -1.0 + 0.05 * w;

    const double dt = 0.005;
    for (int s = 0; s < 300; ++s) {
        const WaveFunction psi = propagator.evolve(psi0, s * dt);
        const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);
        for (auto& state : states) step_bohm(state, field, dt);
    }
    for (int w = 1; w < walkers; ++w) CHECK(states[w].x > states[w - 1].x);
}

TEST_CASE("zero diffusion collapses the stochastic steps onto the deterministic one") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const WaveFunction psi = gaussian_packet(grid, 0.5, 1.0, 0.8, 1.0);
    const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);

    LangevinState nelson;
    LangevinState bohm;
    nelson.x = bohm.x = 0.3;
    PhiloxRng rng(5, stream_id(StreamPurpose::LangevinNoise, 0));
    const std::uint64_t before = rng.words_consumed();
    step_nelson(nelson, field, 0.0, 0.02, rng);
    CHECK(rng.words_consumed() == before);
    step_bohm(bohm, field, 0.02);
    CHECK(nelson.x == bohm.x);

    LangevinState p0_state;
    p0_state.x = 0.0;
    p0_state.p0 = 2.0;
    p0_state.p = -1.0;
    step_csl_position(p0_state, nullptr, 0.0, 2.0, 0.1, rng, DriftMode::P0);
    CHECK(p0_state.x == doctest::Approx(0.1).epsilon(1e-14));

    LangevinState coupled;
    coupled.x = 0.0;
    coupled.p0 = 2.0;
    coupled.p = -1.0;
    step_csl_position(coupled, nullptr, 0.0, 2.0, 0.1, rng, DriftMode::Coupled);
    CHECK(coupled.x == doctest::Approx(-0.05).epsilon(1e-14));
    CHECK(rng.words_consumed() == before);
}

TEST_CASE("nelson process preserves the ground state density") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    Potential well;
    well.kind = Potential::Kind::Harmonic;
    well.omega = 1.0;
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, well, 1.0);
    const ExactPropagator propagator(h);

    // ground state is stationary, so one field serves every step
    Eigen::VectorXcd ground = propagator.modes().col(0) / std::sqrt(grid.spacing);
    WaveFunction e0 = make_wavefunction(grid, ground);
    e0.normalize();
    const GuidanceField field = guidance_field(polar_decompose(e0, 1e-8, 1.0), 1.0);
    const Eigen::VectorXd p_ref = e0.probability();

    const int walkers = 4000;
    const double nu = 0.5;
    std::vector<LangevinState> states(walkers);
    for (int w = 0; w < walkers; ++w) {
        PhiloxRng init(91, stream_id(StreamPurpose::InitialDraw, w));
        states[w].x = grid.site(sample_site(p_ref, init));
    }
    for (int w = 0; w < walkers; ++w) {
        PhiloxRng rng(91, stream_id(StreamPurpose::LangevinNoise, w));
        for (int s = 0; s < 400; ++s) step_nelson(states[w], field, nu, 0.01, rng);
    }

    Eigen::VectorXd xs(walkers);
    for (int w = 0; w < walkers; ++w) xs[w] = states[w].x;
    const double tv = tv_distance(histogram_counts(xs, grid), p_ref);
    MESSAGE("stationary nelson tv ", tv);
    CHECK(tv < 0.07);
}

TEST_CASE("nelson ensemble tracks the spreading packet variance") {
    const Grid grid = make_grid(256, 0.25, -32.0, Representation::Position);
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, Potential{}, 1.0);
    const ExactPropagator propagator(h);
    const WaveFunction psi0 = gaussian_packet(grid, 0.0, 1.0, 0.0, 1.0);

    const int walkers = 10000;
    const double dt = 0.005;
    const int steps = 300; // T = 1.5
    std::vector<LangevinState> states(walkers);
    std::vector<PhiloxRng> rngs;
    rngs.reserve(walkers);
    for (int w = 0; w < walkers; ++w) {
        PhiloxRng init(137, stream_id(StreamPurpose::InitialDraw, w));
        states[w].x = init.next_gaussian(); // exact N(0, 1) initial density
        rngs.emplace_back(137, stream_id(StreamPurpose::LangevinNoise, w));
    }

    for (int s = 0; s < steps; ++s) {
        const WaveFunction psi = propagator.evolve(psi0, s * dt);
        const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);
        for (int w = 0; w < walkers; ++w) step_nelson(states[w], field, 0.5, dt, rngs[w]);
    }

    double mean = 0.0;
    for (const auto& s : states) mean += s.x;
    mean /= walkers;
    double var = 0.0;
    for (const auto& s : states) var += (s.x - mean) * (s.x - mean);
    var /= walkers;

    const double t_final = steps * dt;
    const double expected = 1.0 + 0.25 * t_final * t_final; // w^2 (1 + (hbar t / 2 M w^2)^2)
    MESSAGE("nelson spreading var ", var, " expected ", expected);
    CHECK(std::abs(var - expected) <= 0.05 * expected);
    CHECK(std::abs(mean) < 0.05);
}

TEST_CASE("momentum kicks are gaussian with the collapse diffusion variance") {
    const CslParams params = make_csl_params(1.0, 0.3, 1.0, 1.0);
    const double dt = 0.04;
    const double sd = params.hbar * std::sqrt(0.5 * params.alpha * params.lambda * dt);

    const int draws = 100000;
    PhiloxRng rng(12, stream_id(StreamPurpose::MomentumNoise, 0));
    std::vector<double> increments(draws);
    double sumsq = 0.0;
    for (int i = 0; i < draws; ++i) {
        LangevinState state;
        step_csl_momentum(state, params, dt, rng);
        increments[i] = state.p;
        sumsq += state.p * state.p;
    }
    const double var = sumsq / draws;
    CHECK(std::abs(var - sd * sd) <= 0.02 * sd * sd);

    // decile counts against the exact normal quantiles, chi-square at 1%
    const double edges[9] = {-1.2815515655446004, -0.8416212335729142, -0.5244005127080407,
                             -0.2533471031357997, 0.0,                 0.2533471031357997,
                             0.5244005127080407,  0.8416212335729142,  1.2815515655446004};
    int counts[10] = {0};
    for (double value : increments) {
        const double z = value / sd;
        int bin = 0;
        while (bin < 9 && z > edges[bin]) ++bin;
        ++counts[bin];
    }
    double chi2 = 0.0;
    const double expected = draws / 10.0;
    for (int bin = 0; bin < 10; ++bin)
        chi2 += (counts[bin] - expected) * (counts[bin] - expected) / expected;
    MESSAGE("momentum normality chi2 ", chi2);
    CHECK(chi2 < 21.67); // 9 dof
}

TEST_CASE("accumulated noise integral tracks the smeared field") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    AccumulatedNoiseIntegral acc(grid);

    Eigen::VectorXd increments = Eigen::VectorXd::Zero(grid.n_sites);
    increments[40] = 40.0; // spike at x = 2
    acc.accumulate(kernel, increments);

    const double peak = acc.value_at(2.0);
    CHECK(peak == doctest::Approx(40.0 * grid.spacing * std::sqrt(1.0 / (2.0 * M_PI)))
                      .epsilon(1e-12));
    CHECK(peak > acc.value_at(1.5));
    CHECK(peak > acc.value_at(2.5));
    CHECK(acc.derivative_at(1.5) > 0.0);
    CHECK(acc.derivative_at(2.5) < 0.0);

    const double h = 0.125;
    const double secant = (acc.value_at(2.5 + h) - acc.value_at(2.5 - h)) / (2.0 * h);
    CHECK(std::abs(acc.derivative_at(2.5) - secant) <= 0.10 * std::abs(secant));
}

TEST_CASE("tracking term drifts walkers towards accumulated noise") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    AccumulatedNoiseIntegral acc(grid);
    Eigen::VectorXd increments = Eigen::VectorXd::Zero(grid.n_sites);
    increments[40] = 40.0;
    acc.accumulate(kernel, increments);

    const double nu = 0.5;
    const double dt = 0.01;
    const double expected = 2.0 * nu * acc.derivative_at(1.5) * dt;

    const int draws = 20000;
    double sum = 0.0;
    for (int w = 0; w < draws; ++w) {
        LangevinState state;
        state.x = 1.5;
        PhiloxRng rng(13, stream_id(StreamPurpose::LangevinNoise, w));
        step_csl_position(state, &acc, nu, 1.0, dt, rng, DriftMode::P0);
        sum += state.x - 1.5;
    }
    const double mean = sum / draws;
    const double se = std::sqrt(2.0 * nu * dt / draws);
    CHECK(expected > 4.0 * se); // the signal must be resolvable at all
    CHECK(std::abs(mean - expected) <= 4.0 * se);
}

TEST_CASE("phase space step kicks momentum first") {
    const CslParams params = make_csl_params(1.0, 0.4, 2.0, 1.0, 0.3);
    const double dt = 0.02;

    LangevinState state;
    state.x = 0.7;
    state.p = -0.9;
    PhiloxRng momentum_rng(70, stream_id(StreamPurpose::MomentumNoise, 3));
    PhiloxRng position_rng(70, stream_id(StreamPurpose::LangevinNoise, 3));

    // replay the same streams through the component steps
    LangevinState expected = state;
    PhiloxRng momentum_clone = momentum_rng;
    PhiloxRng position_clone = position_rng;
    step_csl_momentum(expected, params, dt, momentum_clone);
    step_csl_position(expected, nullptr, params.nu, params.mass, dt, position_clone,
                      DriftMode::Coupled);

    step_phase_space(state, nullptr, params, dt, momentum_rng, position_rng);
    CHECK(state.p == expected.p);
    CHECK(state.x == expected.x);
}

TEST_CASE("out-of-cell positions use the periodic image and count wraps") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const WaveFunction psi = gaussian_packet(grid, 0.0, 2.0, 1.0, 1.0);
    const GuidanceField field = guidance_field(polar_decompose(psi, 1e-8, 1.0), 1.0);

    LangevinState outside;
    outside.x = 9.3; // image at -6.7
    LangevinState inside;
    inside.x = -6.7;
    step_bohm(outside, field, 0.01);
    step_bohm(inside, field, 0.01);
    CHECK(outside.x - 9.3 == doctest::Approx(inside.x - (-6.7)).epsilon(1e-12));
    CHECK(outside.wrap_events > 0);
    CHECK(inside.wrap_events == 0);
}
