#pragma once

#include "cslbeables/evolution.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/rng.hpp"
#include "cslbeables/wavefunction.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace csl {

// P_m = |phi_m|^2 * spacing
Eigen::VectorXd probability_vector(const WaveFunction& phi);

// Probability flux matrix J_mn = 2 spacing Im{conj(phi_m) G_mn phi_n}.  For a
// Hermitian generator J is antisymmetric and its row sums reproduce dP_m/dt
// of the unitary flow; an anti-Hermitian part i*diag(r) lands on the
// diagonal, where it feeds continuity accounting but never a jump.
struct SourceMatrix {
    Eigen::MatrixXd j;
    Representation representation = Representation::Position;
    bool includes_nonunitary = false;
};

SourceMatrix source_matrix(const WaveFunction& phi, const GeneratorMatrix& generator);

// Diagonal source contribution 2 r_n P_n of the collapse terms, with the
// rates r built from the smeared noise exactly as the norm-coupled step uses
// them (norm_source = 0 recovers the linear equation's W/dt - lambda).
// Position representation applies the rates directly; momentum representation
// applies the diagonal of their DFT image, which is uniform by translation
// invariance of the circulant block.
Eigen::VectorXd csl_source_terms(const WaveFunction& phi, const LocalizationKernel& kernel,
                                 const NoiseField& noise, const CslParams& params, double dt,
                                 double norm_source);

// Jump rates t(m, n) from site n to site m.  Entries are nonnegative; columns
// with P_n <= epsilon_floor and rows with P_m <= epsilon_floor are zero, so
// jumps never start from or land on numerically unoccupied sites.
struct TransitionMatrix {
    Eigen::MatrixXd t;
};

// Bell's minimal solution t(m, n) = max(J_mn, 0) / max(P_n, epsilon_floor).
TransitionMatrix bell_transition(const SourceMatrix& j, const Eigen::VectorXd& p,
                                 double epsilon_floor);

// Homogeneous Gaussian kernel
//   t0(m, n) ~ exp(-[k - width*ln(P_m/P_n)/(2k)]^2 / (2 width)),  k = m - n,
// truncated at |k| > 6 sqrt(width), wrapped periodically, columns normalized
// to total exit rate `rate`.  The unnormalized kernel balances P exactly;
// normalization preserves the balance for slowly varying P (uniform P is
// exact).  Against a smooth density the kernel generates drift
// rate*width*a^2*(R'/R) and displacement variance at rate*width*a^2.
TransitionMatrix gaussian_homogeneous(const Eigen::VectorXd& p, double width, double rate,
                                      double epsilon_floor);

// Lattice beable: a site plus the total signed displacement in sites, so
// velocities and spreads survive periodic wrapping.
struct BeableState {
    int site = 0;
    long long displacement = 0;

    double value(const Grid& grid) const { return grid.site(site); }
    double unwrapped_value(const Grid& grid, int initial_site) const {
        return grid.site(initial_site) + static_cast<double>(displacement) * grid.spacing;
    }
};

// One categorical draw: jump to m with probability t(m, n) dt, stay put
// otherwise.  Throws StepTooLarge when the column's exit probability exceeds
// 1.  Exactly one uniform is consumed per call.
void jump_step(BeableState& state, const TransitionMatrix& t, double dt, PhiloxRng& rng);

// Subdividing wrapper: splits dt so that no column's exit probability per
// sub-step exceeds 0.5.
void jump_advance(BeableState& state, const TransitionMatrix& t, double dt, PhiloxRng& rng);

// max_m |(P_m(after) - P_m(before))/dt - sum_n J_mn|; the states may be
// unnormalized (linear-route continuity closes against the raw norm flow).
double check_continuity(const WaveFunction& before, const WaveFunction& after,
                        const SourceMatrix& j, double dt);

// Total-variation distance between a nonnegative mass vector (normalized
// internally) and a reference probability vector.
double tv_distance(const Eigen::VectorXd& counts, const Eigen::VectorXd& reference);

// Draw a site from a probability vector by cumulative inversion.
int sample_site(const Eigen::VectorXd& p, PhiloxRng& rng);

struct JumpParams {
    double beta = 0.0;   // position homogeneous rate
    double sigma = 1.0;  // position Gaussian width, site^2 units
    double xi = 0.0;     // momentum homogeneous rate
    double omega = 1.0;  // momentum Gaussian width, site^2 units
    double epsilon_floor_rel = 1e-12; // floor = rel * max(P)
};

JumpParams make_jump_params(double beta, double sigma, double xi, double omega,
                            double epsilon_floor_rel = 1e-12);

// beta sigma a^2 = 2 nu
JumpParams nelson_calibrated(double nu, double sigma, double spacing);
// xi omega b^2 = hbar^2 alpha lambda / 2
JumpParams grw_calibrated(const CslParams& params, double omega, double momentum_spacing);

// Outgoing jump rates from site `from` for the current state: Bell rates fed
// by one column of the generator flux plus the homogeneous Gaussian column.
// Diagonal collapse sources never drive a jump, so they do not appear.
Eigen::VectorXd outgoing_rates(const WaveFunction& phi, const GeneratorMatrix* h,
                               const JumpParams& jump, int from);

// Advances one beable against a frozen state, rebuilding the rate column
// after every move and capping each sub-step's exit probability at 0.5.
void advance_guided(BeableState& state, const WaveFunction& phi, const GeneratorMatrix* h,
                    const JumpParams& jump, double dt, PhiloxRng& rng);

struct EquivarianceResult {
    Eigen::VectorXd histogram;  // walker mass per site at t_final (weighted counts)
    Eigen::VectorXd reference;  // target probability vector
    double tv = 0.0;
};

// Shared-wavefunction run: walkers sampled from P(0) follow the Bell +
// homogeneous rates of the exactly evolved state; reference is P(t_final).
// Requires walkers >= 100; t_final = 0 measures pure sampling noise.
EquivarianceResult equivariance_run_unitary(const WaveFunction& phi0, const GeneratorMatrix& h,
                                            const ExactPropagator& propagator,
                                            const JumpParams& jump, int walkers, double t_final,
                                            double dt, std::uint64_t seed);

// Per-trajectory pairing: each walker rides one collapse realization's
// phi(t).  Both the walker histogram and the reference (ensemble mean of the
// per-trajectory probability vectors) carry the weight exp(2 log_norm): the
// physical trajectory law is the raw noise measure reweighted by the squared
// norm of the linear solution, and a guided walker inherits its trajectory's
// weight.
EquivarianceResult equivariance_run_csl(const WaveFunction& phi0, const GeneratorMatrix* h,
                                        const LocalizationKernel& kernel, const CslParams& params,
                                        const JumpParams& jump, int walkers, double t_final,
                                        double dt, std::uint64_t seed);

} // namespace csl
