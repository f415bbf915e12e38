#pragma once

#include "cslbeables/wavefunction.hpp"

#include <Eigen/Dense>

namespace csl {

// psi = R * exp(i S / hbar) with R >= 0 and S unwrapped left to right.
struct PolarFields {
    Eigen::VectorXd amplitude_r; // R, nonnegative
    Eigen::VectorXd phase_s;     // S, action units
    Grid grid;
    double hbar = 1.0;
};

// Unwraps the phase across sites whose amplitude exceeds epsilon_node; across
// node regions S is frozen at the last valid value, and unwrapping resumes
// from it.  Adjacent valid sites never differ by more than pi*hbar.
PolarFields polar_decompose(const WaveFunction& psi, double epsilon_node, double hbar = 1.0);

// (f_{n+1} - f_n) / spacing with the periodic image at the last site.
Eigen::VectorXd forward_difference(const Eigen::VectorXd& field, const Grid& grid);

// dS/dx evaluated gauge-invariantly as hbar * arg(psi_{n+1} conj(psi_n)) / a.
// Interior sites coincide with forward_difference of the unwrapped S; the
// seam site is handled correctly even when the phase winds around the lattice.
Eigen::VectorXd phase_gradient(const WaveFunction& psi, double hbar = 1.0);

} // namespace csl
