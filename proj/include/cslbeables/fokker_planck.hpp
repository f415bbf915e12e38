#pragma once

#include "cslbeables/csl_params.hpp"
#include "cslbeables/grid.hpp"
#include "cslbeables/stats.hpp"

#include <Eigen/Dense>

namespace csl {

// Finite-difference solution of the phase-space equation
//   dQ/dt = -(p/M) dQ/dx + D_p d^2Q/dp^2,   D_p = hbar^2 alpha lambda / 4,
// so that dVar(p)/dt = 2 D_p.  Q is indexed (x row, p column).  Strang
// splitting: half-step x-advection (minmod-limited second-order upwind,
// periodic), full-step explicit p-diffusion (flux form, reflecting), half-
// step x-advection.  Throws StepTooLarge when the CFL conditions
// max|p|/M * (dt/2)/dx <= 1 and D_p dt/dp^2 <= 0.5 fail, and NumericalAbort
// if total mass drifts by more than 1e-6 (relative) or Q turns significantly
// negative.
Eigen::MatrixXd fokker_planck_oracle(const CslParams& params, const Grid& x_grid,
                                     const Grid& p_grid, const Eigen::MatrixXd& q0,
                                     double t_final, double dt);

// Quadrature moments of a phase-space density (normalized internally).
MomentRow phase_space_moments(const Eigen::MatrixXd& q, const Grid& x_grid, const Grid& p_grid);

// Gaussian product density exp(-(x-x0)^2/(2 sx^2)) exp(-(p-p0)^2/(2 sp^2)),
// normalized to unit mass on the grids.
Eigen::MatrixXd gaussian_phase_density(const Grid& x_grid, const Grid& p_grid, double x0,
                                       double sx, double p0, double sp);

} // namespace csl
