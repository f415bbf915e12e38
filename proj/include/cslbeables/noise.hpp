#pragma once

#include "cslbeables/grid.hpp"
#include "cslbeables/rng.hpp"

#include <Eigen/Dense>

namespace csl {

// White-noise field discretized on the lattice.  One step holds increments
// dB_j with variance gamma*dt/a_z per site (the lattice delta correlation
// <dB_i dB_j> = gamma dt delta_ij / a_z); `accumulated` carries B_j(t).
struct NoiseField {
    Grid z_grid;
    Eigen::VectorXd increments;
    Eigen::VectorXd accumulated;

    explicit NoiseField(const Grid& grid)
        : z_grid(grid),
          increments(Eigen::VectorXd::Zero(grid.n_sites)),
          accumulated(Eigen::VectorXd::Zero(grid.n_sites)) {}
};

// Draws fresh increments and folds them into the running field.
void sample_noise(NoiseField& noise, double dt, double gamma, PhiloxRng& rng);

// Deterministic drive: dB_j = rate_j * dt.  Used by tests that probe the
// continuity identity along a realized noise rate, where the stochastic
// equation becomes an ordinary one.
void drive_noise(NoiseField& noise, double dt, const Eigen::VectorXd& rate);

} // namespace csl
