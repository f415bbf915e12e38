#pragma once

#include "cslbeables/wavefunction.hpp"

#include <Eigen/Dense>

namespace csl {

// Discrete transform between the position lattice and its conjugate momentum
// lattice:
//   phi_k = sqrt(a/(N b)) * sum_n psi_n exp(-i p_k x_n / hbar)
// with p_k the signed monotone lattice frequencies.  The kernel matches the
// continuum 1/sqrt(2 pi hbar) convention under lattice quadrature, preserves
// the weighted norm exactly, and round-trips to machine precision.
class FourierTransform {
public:
    FourierTransform(const Grid& position_grid, double hbar);

    const Grid& position_grid() const { return pos_; }
    const Grid& momentum_grid() const { return mom_; }
    double hbar() const { return hbar_; }

    WaveFunction to_momentum(const WaveFunction& psi) const;
    WaveFunction to_position(const WaveFunction& phi) const;

    const Eigen::MatrixXcd& forward_matrix() const { return fwd_; }

    // first column structure of F diag(r) F^{-1}: the circulant image of a
    // position-diagonal generator, computed from one DFT of r
    Eigen::MatrixXcd transform_diagonal_generator(const Eigen::VectorXd& r) const;

private:
    Grid pos_;
    Grid mom_;
    double hbar_;
    Eigen::MatrixXcd fwd_; // momentum x position
    Eigen::MatrixXcd bwd_; // position x momentum
};

} // namespace csl
