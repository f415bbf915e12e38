#pragma once

#include "cslbeables/csl_params.hpp"
#include "cslbeables/fourier.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/noise.hpp"
#include "cslbeables/wavefunction.hpp"

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace csl {

// One Heun (Stratonovich predictor-corrector) step of the linear collapse
// equation
//   d psi = [-i H - lambda] psi dt + W o psi,   W_n = sum_j a_z dB_j G(x_n - z_j),
// using the increments currently held by `noise`.  The norm is NOT preserved;
// pair with normalize_to_phi.  `hamiltonian` may be null for pure collapse
// dynamics.  Enforced step bounds: lambda*dt < 0.1 and max|H|*dt < 0.1.
void step_linear_csl(WaveFunction& psi, const GeneratorMatrix* hamiltonian,
                     const LocalizationKernel& kernel, const NoiseField& noise,
                     const CslParams& params, double dt);

// phi = psi / ||psi||; throws ZeroNorm on a numerically dead state
WaveFunction normalize_to_phi(const WaveFunction& psi);

// One Heun step of the norm-coupled equation
//   d phi = [-i H - gamma K_hat c_K] phi dt + c_L W o phi
// with c_K = 1 - 3 s^2 + 2 s^4, c_L = 1 - s^2, s = norm_source (the companion
// linear solution's norm; at s = 1 both kernels vanish and the step is purely
// unitary).  K_hat is the lattice quadrature of G^2.  When `renormalize` the
// output is rescaled to unit norm and the pre-rescale drift is reported.
void step_nonlinear_csl(WaveFunction& phi, const GeneratorMatrix* hamiltonian,
                        const LocalizationKernel& kernel, const NoiseField& noise,
                        const CslParams& params, double dt, double norm_source,
                        bool renormalize = true, double* norm_drift = nullptr);

// Diagonal non-unitary rate r_n = -gamma K_hat_n c_K + (W_n/dt) c_L entering
// the effective generator as +i diag(r); exposed because the jump machinery
// assembles its source terms from it.
Eigen::VectorXd nonunitary_rates(const LocalizationKernel& kernel, const NoiseField& noise,
                                 const CslParams& params, double dt, double norm_source);

// G_eff = H + i diag(r): feeding 2 Im{phi* G_eff phi} reproduces both the
// unitary flux and the diagonal norm terms.
GeneratorMatrix effective_generator(const GeneratorMatrix& hamiltonian,
                                    const Eigen::VectorXd& rates);

// Momentum-representation image H(p) + i F diag(r) F^{-1} (circulant noise block).
GeneratorMatrix momentum_effective_generator(const GeneratorMatrix& momentum_hamiltonian,
                                             const FourierTransform& fourier,
                                             const Eigen::VectorXd& rates);

// Linear-route trajectory holding a unit-norm state plus the accumulated
// log-norm of the underlying linear solution; exp(2 log_norm) is the ensemble
// weight that makes raw averages reproduce the closed evolution of rho.
struct LinearTrajectory {
    WaveFunction phi;
    NoiseField noise;
    PhiloxRng rng;
    double log_norm = 0.0;

    LinearTrajectory(WaveFunction initial, const Grid& noise_grid, PhiloxRng generator)
        : phi(std::move(initial)), noise(noise_grid), rng(generator) {}

    // sample noise, Heun step, renormalize, accumulate log norm
    void step(const GeneratorMatrix* hamiltonian, const LocalizationKernel& kernel,
              const CslParams& params, double dt);

    double weight_log() const { return 2.0 * log_norm; }
};

struct TrajectorySnapshot {
    WaveFunction phi;      // unit norm
    double log_norm = 0.0; // log of the linear solution's norm
};

// Norm^2-weighted ensemble density matrix rho = sum w_k phi phi^dag / sum w_k
// with w_k = exp(2 log_norm_k), evaluated stably in log space.
Eigen::MatrixXcd ensemble_density_matrix(const std::vector<TrajectorySnapshot>& trajectories);

} // namespace csl
