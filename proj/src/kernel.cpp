#include "cslbeables/kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csl {

LocalizationKernel::LocalizationKernel(const Grid& x_grid, double alpha)
    : grid_(x_grid), alpha_(alpha) {
    if (!(alpha > 0.0)) throw std::invalid_argument("LocalizationKernel: alpha must be positive");
    const int n = grid_.n_sites;
    const double span = grid_.extent();
    const double norm = std::sqrt(alpha / (2.0 * std::numbers::pi));
    g_.resize(n, n);
    dg_.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double u = std::remainder(grid_.site(i) - grid_.site(j), span);
            const double g = norm * std::exp(-0.5 * alpha * u * u);
            g_(i, j) = g;
            dg_(i, j) = -alpha * u * g;
        }
    }
    g2_quad_ = g_.cwiseAbs2().rowwise().sum() * grid_.spacing;
}

Eigen::VectorXd LocalizationKernel::smear(const Eigen::VectorXd& increments) const {
    if (increments.size() != grid_.n_sites)
        throw std::invalid_argument("LocalizationKernel::smear: size mismatch");
    return grid_.spacing * (g_ * increments);
}

Eigen::VectorXd LocalizationKernel::smear_derivative(const Eigen::VectorXd& increments) const {
    if (increments.size() != grid_.n_sites)
        throw std::invalid_argument("LocalizationKernel::smear_derivative: size mismatch");
    return grid_.spacing * (dg_ * increments);
}

} // namespace csl
