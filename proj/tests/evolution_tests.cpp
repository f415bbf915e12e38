#include <doctest.h>

#include "cslbeables/errors.hpp"
#include "cslbeables/evolution.hpp"
#include "cslbeables/experiment.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/noise.hpp"
#include "cslbeables/rng.hpp"
#include "cslbeables/wavefunction.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <vector>

using namespace csl;

namespace {

double max_amplitude_diff(const WaveFunction& a, const WaveFunction& b) {
    return (a.amplitudes - b.amplitudes).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("collapse step rejects steps beyond its accuracy bounds") {
    const Grid grid = make_grid(32, 0.25, -4.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    NoiseField noise(grid);
    WaveFunction psi = gaussian_packet(grid, 0.0, 0.8, 0.0, 1.0);

    const CslParams hot = make_csl_params(1.0, 0.5, 1.0, 1.0);
    CHECK_THROWS_AS(step_linear_csl(psi, nullptr, kernel, noise, hot, 0.25), StepTooLarge);

    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, Potential{}, 1.0);
    const CslParams cold = make_csl_params(1.0, 0.0, 1.0, 1.0);
    CHECK_THROWS_AS(step_linear_csl(psi, &h, kernel, noise, cold, 0.01), StepTooLarge);

    CHECK_NOTHROW(step_linear_csl(psi, &h, kernel, noise, cold, 1e-3));
}

TEST_CASE("driven diagonal step matches the quadratic exponential expansion") {
    const Grid grid = make_grid(16, 0.5, -4.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const CslParams params = make_csl_params(1.0, 0.3, 1.0, 1.0);
    const double dt = 0.02;

    Eigen::VectorXd rate(grid.n_sites);
    for (int n = 0; n < grid.n_sites; ++n) rate[n] = 2.0 * std::sin(0.7 * n) - 0.4;
    NoiseField noise(grid);
    drive_noise(noise, dt, rate);
    const Eigen::VectorXd w = kernel.smear(noise.increments);

    WaveFunction psi = gaussian_packet(grid, 0.0, 1.0, 0.5, 1.0);
    WaveFunction expected = psi;
    for (int n = 0; n < grid.n_sites; ++n) {
        const std::complex<double> z(-params.lambda * dt + w[n], 0.0);
        expected.amplitudes[n] *= 1.0 + z + 0.5 * z * z;
    }
    step_linear_csl(psi, nullptr, kernel, noise, params, dt);
    CHECK(max_amplitude_diff(psi, expected) < 1e-14);
}

TEST_CASE("normalization is scale invariant and rejects dead states") {
    const Grid grid = make_grid(32, 0.25, -4.0, Representation::Position);
    WaveFunction psi = gaussian_packet(grid, 0.3, 0.7, 1.0, 1.0);
    const WaveFunction base = normalize_to_phi(psi);
    psi.amplitudes *= std::complex<double>(3.7, -1.2);
    const WaveFunction scaled = normalize_to_phi(psi);
    // same ray up to the constant phase of the scale factor
    const std::complex<double> phase =
        std::complex<double>(3.7, -1.2) / std::abs(std::complex<double>(3.7, -1.2));
    WaveFunction reference = base;
    reference.amplitudes *= phase;
    CHECK(max_amplitude_diff(scaled, reference) < 1e-14);
    CHECK(scaled.norm() == doctest::Approx(1.0).epsilon(1e-14));

    WaveFunction dead = make_wavefunction(grid, Eigen::VectorXcd::Zero(grid.n_sites));
    CHECK_THROWS_AS(normalize_to_phi(dead), ZeroNorm);
    CHECK_THROWS_AS(dead.normalize(), ZeroNorm);
}

TEST_CASE("nonunitary rates reduce to the collapse rate without noise") {
    // extent 12 makes the kernel quadrature exact to machine precision
    const Grid grid = make_grid(24, 0.5, -6.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const CslParams params = make_csl_params(1.0, 0.4, 1.0, 1.0);
    NoiseField noise(grid);

    const Eigen::VectorXd r0 = nonunitary_rates(kernel, noise, params, 0.01, 0.0);
    for (int n = 0; n < grid.n_sites; ++n)
        CHECK(r0[n] == doctest::Approx(-params.lambda).epsilon(1e-10));

    // both norm kernels vanish on the unit-norm manifold
    const Eigen::VectorXd r1 = nonunitary_rates(kernel, noise, params, 0.01, 1.0);
    CHECK(r1.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unit norm source turns the norm-coupled step purely unitary") {
    const Grid grid = make_grid(64, 0.25, -8.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, Potential{}, 1.0);
    NoiseField noise(grid);
    const double dt = 1e-3;

    const WaveFunction psi0 = gaussian_packet(grid, 0.0, 1.0, 0.5, 1.0);
    WaveFunction unitary = psi0;
    const CslParams off = make_csl_params(1.0, 0.0, 1.0, 1.0);
    step_linear_csl(unitary, &h, kernel, noise, off, dt);

    WaveFunction coupled = psi0;
    const CslParams on = make_csl_params(1.0, 0.3, 1.0, 1.0);
    step_nonlinear_csl(coupled, &h, kernel, noise, on, dt, 1.0, false, nullptr);
    CHECK(max_amplitude_diff(coupled, unitary) < 1e-14);

    WaveFunction renormed = psi0;
    double drift = 1.0;
    step_nonlinear_csl(renormed, &h, kernel, noise, on, dt, 1.0, true, &drift);
    CHECK(std::abs(drift) < 1e-10);
    CHECK(renormed.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("zero norm source makes the two routes coincide pathwise") {
    // at norm_source = 0 the coupled kernels reduce to the raw linear
    // coefficients; the per-step map is linear in the state, so stepwise
    // renormalization differs from final normalization only by a scalar
    // and the routes agree to the kernel quadrature defect
    const Grid grid = make_grid(32, 0.4, -6.4, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const GeneratorMatrix h = build_hamiltonian(grid, 1.0, Potential{}, 1.0);
    const CslParams params = make_csl_params(1.0, 0.3, 1.0, 1.0);
    const WaveFunction psi0 = gaussian_packet(grid, 0.0, 1.0, 0.5, 1.0);

    auto shared_noise_diff = [&](double dt, int steps, bool companion_norm) {
        WaveFunction lin = psi0;
        WaveFunction nl = psi0;
        NoiseField noise(grid);
        PhiloxRng rng(2024, stream_id(StreamPurpose::Scratch, 40));
        for (int s = 0; s < steps; ++s) {
            sample_noise(noise, dt, params.gamma(), rng);
            const double source = companion_norm ? lin.norm() : 0.0;
            step_linear_csl(lin, &h, kernel, noise, params, dt);
            step_nonlinear_csl(nl, &h, kernel, noise, params, dt, source);
        }
        return max_amplitude_diff(normalize_to_phi(lin), nl);
    };

    const double diff_fine = shared_noise_diff(1.0 / 800.0, 320, false);
    const double diff_coarse = shared_noise_diff(1.0 / 400.0, 160, false);
    MESSAGE("route agreement at raw coefficients: ", diff_fine, " / ", diff_coarse);
    CHECK(diff_fine < 1e-10);
    CHECK(diff_coarse < 1e-10);

    // feeding the companion norm instead couples the kernels to a running
    // scalar; the dynamics then genuinely differs from the linear route,
    // so only boundedness is pinned here
    const double gap = shared_noise_diff(1.0 / 800.0, 320, true);
    MESSAGE("companion-norm feeding gap ", gap);
    CHECK(std::isfinite(gap));
    CHECK(gap < 0.8);
}

TEST_CASE("linear trajectory weights are an unbiased ensemble measure") {
    const Grid grid = make_grid(16, 0.5, -4.0, Representation::Position);
    const LocalizationKernel kernel(grid, 1.0);
    const CslParams params = make_csl_params(1.0, 0.3, 1.0, 1.0);
    const WaveFunction psi0 = gaussian_packet(grid, 0.0, 0.8, 0.0, 1.0);

    const int n_traj = 500;
    std::vector<double> weights(n_traj);
    for (int i = 0; i < n_traj; ++i) {
        LinearTrajectory traj(psi0, grid, PhiloxRng(11, stream_id(StreamPurpose::CollapseNoise, i)));
        for (int s = 0; s < 30; ++s) traj.step(nullptr, kernel, params, 0.01);
        weights[i] = std::exp(traj.weight_log());
    }
    double mean = 0.0;
    for (double w : weights) mean += w;
    mean /= n_traj;
    double var = 0.0;
    for (double w : weights) var += (w - mean) * (w - mean);
    var /= n_traj - 1;
    const double se = std::sqrt(var / n_traj);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se + 1e-3);
}

TEST_CASE("ensemble density matrix of one snapshot is its projector") {
    const Grid grid = make_grid(24, 0.5, -6.0, Representation::Position);
    const WaveFunction phi = gaussian_packet(grid, 0.5, 1.0, 0.3, 1.0);
    const Eigen::MatrixXcd rho = ensemble_density_matrix({TrajectorySnapshot{phi, 0.7}});
    const Eigen::MatrixXcd projector = phi.amplitudes * phi.amplitudes.adjoint();
    CHECK((rho - projector).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(std::abs(rho.trace().real() - 1.0 / grid.spacing) < 1e-10);
    CHECK(std::abs(rho.trace().imag()) < 1e-14);
}

TEST_CASE("two branch collapse follows the log ratio diffusion law") {
    const Grid grid = make_grid(80, 0.25, -10.0, Representation::Position);
    const double width = 0.5;
    const double separation = 8.0;
    const WaveFunction psi0 = two_packet_superposition(grid, 0.0, separation, width, 1.0);
    const CslParams params = make_csl_params(0.25, 0.5, 1.0, 1.0);
    const LocalizationKernel kernel(grid, params.alpha);

    const double dt = 0.005;
    const int n_steps = 300; // T = 1.5
    const int n_traj = 1200;
    const std::array<int, 3> marks = {100, 200, 300};

    std::array<std::vector<double>, 3> weight_at;
    std::array<std::vector<double>, 3> left_at;
    for (auto& v : weight_at) v.reserve(n_traj);
    for (auto& v : left_at) v.reserve(n_traj);

    for (int i = 0; i < n_traj; ++i) {
        LinearTrajectory traj(psi0, grid,
                              PhiloxRng(99, stream_id(StreamPurpose::CollapseNoise, i)));
        std::size_t mark = 0;
        for (int s = 1; s <= n_steps; ++s) {
            traj.step(nullptr, kernel, params, dt);
            if (mark < marks.size() && s == marks[mark]) {
                double left = 0.0;
                const Eigen::VectorXd p = traj.phi.probability();
                for (int n = 0; n < grid.n_sites; ++n)
                    if (grid.site(n) < 0.0) left += p[n];
                weight_at[mark].push_back(std::exp(traj.weight_log()));
                left_at[mark].push_back(left);
                ++mark;
            }
        }
    }

    // raw-measure weights average to one while their variance is still tame
    {
        const auto& w = weight_at[0];
        double mean = 0.0;
        for (double v : w) mean += v;
        mean /= n_traj;
        double var = 0.0;
        for (double v : w) var += (v - mean) * (v - mean);
        var /= n_traj - 1;
        CHECK(std::abs(mean - 1.0) <= 3.0 * std::sqrt(var / n_traj) + 5e-3);
    }

    // weighted branch probability stays Born (1/2 for the symmetric state)
    {
        double acc = 0.0;
        std::vector<double> terms(n_traj);
        for (int i = 0; i < n_traj; ++i) {
            terms[i] = weight_at[0][i] * (left_at[0][i] > 0.5 ? 1.0 : 0.0);
            acc += terms[i];
        }
        const double born = acc / n_traj;
        double var = 0.0;
        for (double t : terms) var += (t - born) * (t - born);
        var /= n_traj - 1;
        CHECK(std::abs(born - 0.5) <= 3.0 * std::sqrt(var / n_traj) + 5e-3);
    }

    // raw-measure log ratio X diffuses without drift at the smeared-kernel rate
    {
        const double t_final = n_steps * dt;
        const double smear_var = 1.0 / params.alpha + width * width;
        const double overlap = std::exp(-separation * separation / (4.0 * smear_var));
        const double rate = 8.0 * params.lambda * (1.0 - overlap) /
                            std::sqrt(1.0 + params.alpha * width * width);
        const double expected_var = rate * t_final;

        std::vector<double> x(n_traj);
        double mean = 0.0;
        for (int i = 0; i < n_traj; ++i) {
            const double left = left_at[2][i];
            x[i] = std::log(left / std::max(1.0 - left, 1e-300));
            mean += x[i];
        }
        mean /= n_traj;
        double var = 0.0;
        for (double v : x) var += (v - mean) * (v - mean);
        var /= n_traj - 1;
        MESSAGE("log-ratio variance ", var, " expected ", expected_var);
        CHECK(std::abs(mean) <= 3.0 * std::sqrt(var / n_traj));
        CHECK(std::abs(var - expected_var) <= 0.15 * expected_var);
    }

    // physical-measure localization: dominant branch mass grows towards one
    {
        std::array<double, 3> loc{};
        for (std::size_t k = 0; k < marks.size(); ++k) {
            double num = 0.0;
            double den = 0.0;
            for (int i = 0; i < n_traj; ++i) {
                const double m = std::max(left_at[k][i], 1.0 - left_at[k][i]);
                num += weight_at[k][i] * m;
                den += weight_at[k][i];
            }
            loc[k] = num / den;
        }
        MESSAGE("weighted dominant-branch mass ", loc[0], " ", loc[1], " ", loc[2]);
        CHECK(loc[1] >= loc[0] - 0.02);
        CHECK(loc[2] >= loc[1] - 0.02);
        CHECK(loc[2] >= loc[0] + 0.03);
        CHECK(loc[2] >= 0.75);
    }
}
