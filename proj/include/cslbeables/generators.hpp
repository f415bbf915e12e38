#pragma once

#include "cslbeables/fourier.hpp"
#include "cslbeables/wavefunction.hpp"

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace csl {

// Evolution generators are kept in frequency units: the Schrodinger equation
// reads d(psi)/dt = -i H psi, i.e. H = p^2/(2 M hbar) + V/hbar.
struct GeneratorMatrix {
    Eigen::MatrixXcd matrix;
    Representation representation = Representation::Position;
    bool hermitian = true;

    double hermiticity_defect() const; // max |H - H^dagger|
};

struct Potential {
    enum class Kind { Free, Harmonic, Table };
    Kind kind = Kind::Free;
    double omega = 0.0;                              // Harmonic: V = 0.5 M omega^2 x^2
    std::vector<std::pair<double, double>> table;    // Table: sorted (x, V) samples

    double evaluate(double x, double mass) const;    // energy units
};

// Kinetic term is the three-point stencil -hbar/(2M) (psi_{n+1} - 2 psi_n +
// psi_{n-1})/a^2 with periodic closure, plus V_n/hbar on the diagonal.
GeneratorMatrix build_hamiltonian(const Grid& grid, double mass, const Potential& potential,
                                  double hbar);

// diag(p_k^2 / (2 M hbar)) on the momentum lattice
GeneratorMatrix build_momentum_hamiltonian(const Grid& momentum_grid, double mass, double hbar);

// Exact unitary propagator from the dense eigendecomposition; used where the
// wavefunction must be evolved to machine precision so that trajectory-level
// errors are attributable to the trajectory process alone.
class ExactPropagator {
public:
    explicit ExactPropagator(const GeneratorMatrix& h);

    // |psi(t0 + t)> from |psi(t0)>
    WaveFunction evolve(const WaveFunction& initial, double t) const;

    const Eigen::VectorXd& frequencies() const { return freq_; }
    const Eigen::MatrixXcd& modes() const { return modes_; }

private:
    Eigen::VectorXd freq_;
    Eigen::MatrixXcd modes_;
    Representation rep_;
};

} // namespace csl
