#include "cslbeables/evolution.hpp"

#include "cslbeables/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace csl {

namespace {

using Eigen::VectorXcd;
using Eigen::VectorXd;

void check_step_bounds(const GeneratorMatrix* h, double lambda, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("csl step: dt must be positive");
    if (lambda * dt >= 0.1)
        throw StepTooLarge("csl step: lambda*dt = " + std::to_string(lambda * dt) +
                           " exceeds 0.1");
    if (h != nullptr) {
        const double hmax = h->matrix.cwiseAbs().maxCoeff();
        if (hmax * dt >= 0.1)
            throw StepTooLarge("csl step: max|H|*dt = " + std::to_string(hmax * dt) +
                               " exceeds 0.1");
    }
}

// Heun step for d psi = drift(psi) dt + W o psi with a fixed per-step noise
// amplitude W (Stratonovich reading: the same W multiplies both stages).
template <typename Drift>
void heun_multiplicative(VectorXcd& psi, const Drift& drift, const VectorXd& w, double dt) {
    const VectorXcd f0 = drift(psi);
    VectorXcd predictor = psi + dt * f0 + w.cast<std::complex<double>>().cwiseProduct(psi);
    const VectorXcd f1 = drift(predictor);
    psi += 0.5 * dt * (f0 + f1) +
           0.5 * w.cast<std::complex<double>>().cwiseProduct(psi + predictor);
}

} // namespace

void step_linear_csl(WaveFunction& psi, const GeneratorMatrix* hamiltonian,
                     const LocalizationKernel& kernel, const NoiseField& noise,
                     const CslParams& params, double dt) {
    if (psi.grid != kernel.grid() || psi.grid != noise.z_grid)
        throw std::invalid_argument("step_linear_csl: grids do not match");
    if (hamiltonian && hamiltonian->representation != psi.grid.representation)
        throw RepresentationMismatch("step_linear_csl: generator representation mismatch");
    check_step_bounds(hamiltonian, params.lambda, dt);

    const VectorXd w = kernel.smear(noise.increments);
    const double lambda = params.lambda;
    const std::complex<double> minus_i(0.0, -1.0);
    auto drift = [&](const VectorXcd& v) -> VectorXcd {
        if (hamiltonian) return minus_i * (hamiltonian->matrix * v) - lambda * v;
        return (-lambda) * v;
    };
    heun_multiplicative(psi.amplitudes, drift, w, dt);
    psi.time += dt;
}

WaveFunction normalize_to_phi(const WaveFunction& psi) {
    WaveFunction phi = psi;
    phi.normalize();
    return phi;
}

Eigen::VectorXd nonunitary_rates(const LocalizationKernel& kernel, const NoiseField& noise,
                                 const CslParams& params, double dt, double norm_source) {
    if (!(dt > 0.0)) throw std::invalid_argument("nonunitary_rates: dt must be positive");
    if (!(norm_source >= 0.0))
        throw std::invalid_argument("nonunitary_rates: norm_source must be nonnegative");
    const double s2 = norm_source * norm_source;
    const double c_k = 1.0 - 3.0 * s2 + 2.0 * s2 * s2;
    const double c_l = 1.0 - s2;
    const VectorXd w = kernel.smear(noise.increments);
    return -params.gamma() * c_k * kernel.g_squared_quadrature() + (c_l / dt) * w;
}

void step_nonlinear_csl(WaveFunction& phi, const GeneratorMatrix* hamiltonian,
                        const LocalizationKernel& kernel, const NoiseField& noise,
                        const CslParams& params, double dt, double norm_source,
                        bool renormalize, double* norm_drift) {
    if (phi.grid != kernel.grid() || phi.grid != noise.z_grid)
        throw std::invalid_argument("step_nonlinear_csl: grids do not match");
    check_step_bounds(hamiltonian, params.lambda, dt);

    const double s2 = norm_source * norm_source;
    const double c_k = 1.0 - 3.0 * s2 + 2.0 * s2 * s2;
    const double c_l = 1.0 - s2;
    const VectorXd decay = params.gamma() * c_k * kernel.g_squared_quadrature();
    const VectorXd w = c_l * kernel.smear(noise.increments);
    const std::complex<double> minus_i(0.0, -1.0);
    auto drift = [&](const VectorXcd& v) -> VectorXcd {
        VectorXcd out = -decay.cast<std::complex<double>>().cwiseProduct(v);
        if (hamiltonian) out += minus_i * (hamiltonian->matrix * v);
        return out;
    };
    heun_multiplicative(phi.amplitudes, drift, w, dt);
    phi.time += dt;

    const double n = phi.norm();
    if (norm_drift) *norm_drift = n - 1.0;
    if (renormalize) {
        if (!(n > 1e-150)) throw ZeroNorm("step_nonlinear_csl: norm underflow");
        phi.amplitudes /= n;
    }
}

GeneratorMatrix effective_generator(const GeneratorMatrix& hamiltonian,
                                    const Eigen::VectorXd& rates) {
    if (rates.size() != hamiltonian.matrix.rows())
        throw std::invalid_argument("effective_generator: size mismatch");
    GeneratorMatrix g;
    g.matrix = hamiltonian.matrix;
    g.matrix.diagonal() += std::complex<double>(0.0, 1.0) * rates.cast<std::complex<double>>();
    g.representation = hamiltonian.representation;
    g.hermitian = false;
    return g;
}

GeneratorMatrix momentum_effective_generator(const GeneratorMatrix& momentum_hamiltonian,
                                             const FourierTransform& fourier,
                                             const Eigen::VectorXd& rates) {
    if (momentum_hamiltonian.representation != Representation::Momentum)
        throw RepresentationMismatch("momentum_effective_generator: expected momentum generator");
    GeneratorMatrix g;
    g.matrix = momentum_hamiltonian.matrix +
               std::complex<double>(0.0, 1.0) * fourier.transform_diagonal_generator(rates);
    g.representation = Representation::Momentum;
    g.hermitian = false;
    return g;
}

void LinearTrajectory::step(const GeneratorMatrix* hamiltonian, const LocalizationKernel& kernel,
                            const CslParams& params, double dt) {
    sample_noise(noise, dt, params.gamma(), rng);
    step_linear_csl(phi, hamiltonian, kernel, noise, params, dt);
    const double n = phi.norm();
    if (!(n > 1e-150) || !std::isfinite(n))
        throw ZeroNorm("LinearTrajectory: norm underflow at t = " + std::to_string(phi.time));
    phi.amplitudes /= n;
    log_norm += std::log(n);
}

Eigen::MatrixXcd ensemble_density_matrix(const std::vector<TrajectorySnapshot>& trajectories) {
    if (trajectories.empty())
        throw std::invalid_argument("ensemble_density_matrix: empty ensemble");
    const Grid& grid = trajectories.front().phi.grid;
    double max_log = -1e300;
    for (const auto& t : trajectories) {
        if (t.phi.grid != grid)
            throw std::invalid_argument("ensemble_density_matrix: mixed grids");
        max_log = std::max(max_log, 2.0 * t.log_norm);
    }
    const int n = grid.n_sites;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(n, n);
    double total = 0.0;
    for (const auto& t : trajectories) {
        const double w = std::exp(2.0 * t.log_norm - max_log);
        rho.noalias() += w * (t.phi.amplitudes * t.phi.amplitudes.adjoint());
        total += w;
    }
    rho /= total;
    return rho;
}

} // namespace csl
