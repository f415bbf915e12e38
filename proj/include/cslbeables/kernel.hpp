#pragma once

#include "cslbeables/grid.hpp"

#include <Eigen/Dense>

namespace csl {

// Gaussian localization kernel G(x - z) = sqrt(alpha/(2 pi)) exp(-alpha (x-z)^2 / 2)
// tabulated between the x lattice and the noise lattice (the same grid here),
// with minimal-image displacements on the periodic lattice.  Row quadratures
// sum_j G(x_i - z_j) a_z approach 1 once the grid spans >= 6/sqrt(alpha).
class LocalizationKernel {
public:
    LocalizationKernel(const Grid& x_grid, double alpha);

    const Eigen::MatrixXd& g() const { return g_; }        // G(x_i - z_j)
    const Eigen::MatrixXd& dg_dx() const { return dg_; }   // dG/dx at (x_i - z_j)
    const Grid& grid() const { return grid_; }
    double alpha() const { return alpha_; }

    // quadrature sum_j G(x_i - z_j)^2 a_z  (approaches sqrt(alpha/(4 pi)))
    const Eigen::VectorXd& g_squared_quadrature() const { return g2_quad_; }

    // W_i = sum_j a_z dB_j G(x_i - z_j): the multiplicative noise amplitude
    Eigen::VectorXd smear(const Eigen::VectorXd& increments) const;
    // same contraction against dG/dx
    Eigen::VectorXd smear_derivative(const Eigen::VectorXd& increments) const;

private:
    Grid grid_;
    double alpha_;
    Eigen::MatrixXd g_;
    Eigen::MatrixXd dg_;
    Eigen::VectorXd g2_quad_;
};

} // namespace csl
