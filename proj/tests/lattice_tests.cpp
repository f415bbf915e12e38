#include <doctest.h>

#include "cslbeables/config.hpp"
#include "cslbeables/errors.hpp"
#include "cslbeables/fourier.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/noise.hpp"
#include "cslbeables/polar.hpp"
#include "cslbeables/rng.hpp"
#include "cslbeables/wavefunction.hpp"

#include <cmath>
#include <complex>
#include <numbers>

using namespace csl;

namespace {
const double pi = std::numbers::pi;
}

TEST_CASE("grid construction and wrapping") {
    CHECK_THROWS_AS(make_grid(1, 0.5, 0.0, Representation::Position), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(8, 0.0, 0.0, Representation::Position), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(8, -1.0, 0.0, Representation::Position), std::invalid_argument);

    const Grid grid = make_grid(16, 0.5, -4.0, Representation::Position);
    CHECK(grid.extent() == doctest::Approx(8.0));
    CHECK(grid.site(0) == doctest::Approx(-4.0));
    CHECK(grid.site(15) == doctest::Approx(3.5));
    CHECK(grid.wrap(1.25) == doctest::Approx(1.25));
    CHECK(grid.wrap(1.25 + 8.0) == doctest::Approx(1.25));
    CHECK(grid.wrap(-4.0 - 0.5) == doctest::Approx(3.5));
}

TEST_CASE("momentum grid carries the conjugate spacing") {
    const Grid x = make_grid(64, 0.25, -8.0, Representation::Position);
    const Grid p = momentum_grid_for(x, 1.0);
    CHECK(p.spacing == doctest::Approx(2.0 * pi / 16.0));
    CHECK(p.site(32) == doctest::Approx(0.0));
    CHECK(p.n_sites == 64);
}

TEST_CASE("gaussian packet has unit norm, the requested spread and momentum") {
    const Grid grid = make_grid(256, 0.125, -16.0, Representation::Position);
    const WaveFunction psi = gaussian_packet(grid, 1.5, 1.2, 0.8, 1.0);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));

    const Eigen::VectorXd p = psi.probability();
    double mean = 0.0;
    double var = 0.0;
    for (int n = 0; n < grid.n_sites; ++n) mean += p[n] * grid.site(n);
    for (int n = 0; n < grid.n_sites; ++n) {
        const double d = grid.site(n) - mean;
        var += p[n] * d * d;
    }
    CHECK(mean == doctest::Approx(1.5).epsilon(1e-8));
    CHECK(var == doctest::Approx(1.44).epsilon(1e-6));

    const Eigen::VectorXd grad = phase_gradient(psi, 1.0);
    const int center = 140; // x = 1.5
    CHECK(grad[center] == doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("plane wave snaps to the lattice momentum and is translation invariant") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const double b = 2.0 * pi / 16.0;
    CHECK(nearest_lattice_momentum(grid, 3.7 * b, 1.0) == doctest::Approx(4.0 * b));

    const WaveFunction psi = plane_wave(grid, 3.7 * b, 1.0);
    CHECK(psi.norm() == doctest::Approx(1.0).epsilon(1e-12));
    const Eigen::VectorXd grad = phase_gradient(psi, 1.0);
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(grad[n] == doctest::Approx(4.0 * b).epsilon(1e-10));
    const Eigen::VectorXd p = psi.probability();
    CHECK(p.maxCoeff() == doctest::Approx(p.minCoeff()).epsilon(1e-12));
}

TEST_CASE("fourier transform round-trips and preserves the norm") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const FourierTransform fourier(grid, 1.0);
    const WaveFunction psi = gaussian_packet(grid, -0.5, 1.0, 1.3, 1.0);
    const WaveFunction hat = fourier.to_momentum(psi);
    CHECK(hat.norm() == doctest::Approx(1.0).epsilon(1e-10));
    const WaveFunction back = fourier.to_position(hat);
    CHECK((back.amplitudes - psi.amplitudes).cwiseAbs().maxCoeff() < 1e-12);

    // momentum density peaks at the packet momentum
    const Eigen::VectorXd density = hat.probability();
    Eigen::Index peak = 0;
    density.maxCoeff(&peak);
    CHECK(std::abs(hat.grid.site(peak) - 1.3) <= hat.grid.spacing);
}

TEST_CASE("free hamiltonian reproduces the lattice dispersion") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, Potential{}, 1.0);
    CHECK(h.hermitian);
    CHECK(h.hermiticity_defect() == doctest::Approx(0.0).epsilon(1e-14));

    const double p = 6.0 * 2.0 * pi / 16.0;
    const WaveFunction psi = plane_wave(grid, p, 1.0);
    const Eigen::VectorXcd hpsi = h.matrix * psi.amplitudes;
    const double expected = (1.0 / (0.25 * 0.25)) * (1.0 - std::cos(p * 0.25));
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(std::abs(hpsi[n] - expected * psi.amplitudes[n]) < 1e-10);
}

TEST_CASE("exact propagator is unitary with harmonic level spacing") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    Potential well;
    well.kind = Potential::Kind::Harmonic;
    well.omega = 1.0;
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, well, 1.0);
    const ExactPropagator propagator(h);

    const Eigen::VectorXd freq = propagator.frequencies();
    for (int k = 1; k < 20; ++k) CHECK(freq[k] > freq[k - 1]);
    // lattice dispersion lowers level k by roughly 3k a^2 / 24
    for (int k = 1; k < 6; ++k) CHECK(std::abs(freq[k] - freq[k - 1] - 1.0) < 0.05);
    CHECK(std::abs(freq[0] - 0.5) < 0.01);

    const WaveFunction psi = gaussian_packet(grid, 1.0, 0.8, 0.0, 1.0);
    const WaveFunction evolved = propagator.evolve(psi, 1.7);
    CHECK(evolved.norm() == doctest::Approx(1.0).epsilon(1e-10));
    const WaveFunction same = propagator.evolve(psi, 0.0);
    CHECK((same.amplitudes - psi.amplitudes).cwiseAbs().maxCoeff() < 1e-10);

    // two shorter evolutions compose into one long one
    const WaveFunction two = propagator.evolve(propagator.evolve(psi, 0.9), 0.8);
    CHECK((two.amplitudes - evolved.amplitudes).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("localization kernel quadratures match the closed forms") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const Eigen::VectorXd quad = kernel.g_squared_quadrature();
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(quad[n] == doctest::Approx(std::sqrt(1.0 / (4.0 * pi))).epsilon(1e-10));

    // unit increment at one site reproduces a kernel column scaled by a_z
    Eigen::VectorXd increments = Eigen::VectorXd::Zero(grid.n_sites);
    increments[40] = 1.0;
    const Eigen::VectorXd w = kernel.smear(increments);
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(w[n] == doctest::Approx(grid.spacing * kernel.g()(n, 40)).epsilon(1e-12));

    // derivative contraction agrees with a central difference across x
    const Eigen::VectorXd dw = kernel.smear_derivative(increments);
    for (int n = 2; n < grid.n_sites - 2; ++n) {
        const double fd = (w[n + 1] - w[n - 1]) / (2.0 * grid.spacing);
        if (std::abs(dw[n]) > 1e-2) CHECK(std::abs(fd / dw[n] - 1.0) < 0.05);
    }
}

TEST_CASE("noise increments carry variance gamma dt per site measure") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    NoiseField noise(grid);
    PhiloxRng rng(77, stream_id(StreamPurpose::CollapseNoise, 0));
    const double gamma = 0.9;
    const double dt = 0.01;
    double sq = 0.0;
    double sum = 0.0;
    Eigen::VectorXd total = Eigen::VectorXd::Zero(grid.n_sites);
    const int steps = 2000;
    for (int s = 0; s < steps; ++s) {
        sample_noise(noise, dt, gamma, rng);
        sq += noise.increments.squaredNorm();
        sum += noise.increments.sum();
        total += noise.increments;
    }
    const double n_samples = static_cast<double>(steps) * grid.n_sites;
    const double var = sq / n_samples;
    const double expected = gamma * dt / grid.spacing;
    CHECK(std::abs(var - expected) <= 0.02 * expected);
    CHECK(std::abs(sum / n_samples) < 4.0 * std::sqrt(expected / n_samples));
    CHECK((noise.accumulated - total).cwiseAbs().maxCoeff() < 1e-12);

    drive_noise(noise, 0.25, Eigen::VectorXd::Ones(grid.n_sites) * 2.0);
    for (int n = 0; n < grid.n_sites; ++n) CHECK(noise.increments[n] == doctest::Approx(0.5));
}

TEST_CASE("polar decomposition recovers amplitude and unwrapped phase") {
    const Grid grid = make_grid(128, 0.25, -16.0, Representation::Position);
    const WaveFunction psi = gaussian_packet(grid, 0.0, 1.0, 1.1, 1.0);
    const PolarFields polar = polar_decompose(psi, 1e-8, 1.0);
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(polar.amplitude_r[n] == doctest::Approx(std::abs(psi.amplitudes[n])).epsilon(1e-12));

    const Eigen::VectorXd ds = forward_difference(polar.phase_s, grid);
    for (int n = 40; n < 88; ++n) CHECK(ds[n] == doctest::Approx(1.1).epsilon(1e-6));

    // a node does not break the decomposition
    Eigen::VectorXcd odd(grid.n_sites);
    for (int n = 0; n < grid.n_sites; ++n) {
        const double x = grid.site(n);
        odd[n] = x * std::exp(-x * x / 4.0);
    }
    WaveFunction excited = make_wavefunction(grid, odd);
    excited.normalize();
    const PolarFields node_polar = polar_decompose(excited, 1e-8, 1.0);
    CHECK(node_polar.phase_s.allFinite());
    CHECK(node_polar.amplitude_r.allFinite());
}

TEST_CASE("config parsing rejects unknown keys and bad values") {
    CHECK_THROWS_AS(parse_config("{\"scenario\": \"bohm_limit\", \"lamda\": 0.1}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"scenario\": \"not_a_scenario\"}"), ConfigError);
    CHECK_THROWS_AS(parse_config("{\"scenario\": \"bohm_limit\", \"dt\": \"fast\"}"), ConfigError);
    CHECK_THROWS_AS(parse_config("not json"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

    const ExperimentConfig cfg =
        parse_config("{\"scenario\": \"nelson_variance\", \"lambda\": 0.25, "
                     "\"potential\": \"harmonic(2.0)\", \"walkers\": 500}");
    CHECK(cfg.scenario == Scenario::NelsonVariance);
    CHECK(cfg.lambda == doctest::Approx(0.25));
    CHECK(cfg.potential.kind == Potential::Kind::Harmonic);
    CHECK(cfg.potential.omega == doctest::Approx(2.0));
    CHECK(cfg.walkers == 500);
}

TEST_CASE("potential strings round-trip") {
    CHECK(parse_potential("free").kind == Potential::Kind::Free);
    const Potential harmonic = parse_potential("harmonic(1.5)");
    CHECK(harmonic.omega == doctest::Approx(1.5));
    const Potential table = parse_potential("table(0:1.0; 2:3.5)");
    CHECK(table.kind == Potential::Kind::Table);
    CHECK(table.evaluate(2.0, 1.0) == doctest::Approx(3.5));
    CHECK_THROWS_AS(parse_potential("quartic(1)"), ConfigError);

    for (const char* text : {"free", "harmonic(1.5)", "table(0:1; 2:3.5)"}) {
        const Potential p = parse_potential(text);
        const Potential q = parse_potential(potential_to_string(p));
        CHECK(p.kind == q.kind);
        CHECK(p.evaluate(1.0, 1.0) == doctest::Approx(q.evaluate(1.0, 1.0)));
    }
}
