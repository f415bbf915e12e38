#pragma once

#include "cslbeables/grid.hpp"

#include <Eigen/Dense>
#include <complex>

namespace csl {

// Lattice wavefunction.  Normalization convention is the quadrature one:
// sum_n |psi_n|^2 * spacing = 1.
struct WaveFunction {
    Grid grid;
    Eigen::VectorXcd amplitudes;
    double time = 0.0;

    double norm() const; // sqrt(sum |psi|^2 * spacing)
    Eigen::VectorXd probability() const; // P_n = |psi_n|^2 * spacing

    // rescales to unit norm; throws ZeroNorm when the state is numerically dead
    void normalize();
};

WaveFunction make_wavefunction(const Grid& grid, Eigen::VectorXcd amplitudes, double time = 0.0);

// Normalized Gaussian packet exp(ip0(x-c)/hbar) * exp(-(x-c)^2/(4 width^2)),
// so |psi|^2 has standard deviation `width`.  Displacements use the minimal
// periodic image so packets near the seam stay smooth.
WaveFunction gaussian_packet(const Grid& grid, double center, double width, double momentum,
                             double hbar);

// Plane wave with the lattice momentum closest to `momentum` (exact lattice
// momenta keep the state single-valued on the periodic lattice).
WaveFunction plane_wave(const Grid& grid, double momentum, double hbar);

// exact lattice momentum actually used by plane_wave
double nearest_lattice_momentum(const Grid& grid, double momentum, double hbar);

} // namespace csl
