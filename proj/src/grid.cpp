#include "cslbeables/grid.hpp"

#include "cslbeables/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace csl {

Eigen::VectorXd Grid::sites() const {
    Eigen::VectorXd x(n_sites);
    for (int k = 0; k < n_sites; ++k) x[k] = site(k);
    return x;
}

double Grid::wrap(double x) const {
    const double span = extent();
    double u = std::fmod(x - origin, span);
    if (u < 0) u += span;
    return origin + u;
}

Grid make_grid(int n_sites, double spacing, double origin, Representation representation) {
    if (n_sites < 2)
        throw std::invalid_argument("make_grid: n_sites must be >= 2, got " + std::to_string(n_sites));
    if (!(spacing > 0.0))
        throw std::invalid_argument("make_grid: spacing must be positive, got " + std::to_string(spacing));
    if (!std::isfinite(spacing) || !std::isfinite(origin))
        throw std::invalid_argument("make_grid: non-finite spacing or origin");
    return Grid{n_sites, spacing, origin, representation};
}

Grid momentum_grid_for(const Grid& position_grid, double hbar) {
    if (position_grid.representation != Representation::Position)
        throw RepresentationMismatch("momentum_grid_for: expected a position grid");
    if (!(hbar > 0.0))
        throw std::invalid_argument("momentum_grid_for: hbar must be positive");
    const int n = position_grid.n_sites;
    const double b = 2.0 * std::numbers::pi * hbar / (n * position_grid.spacing);
    const double p0 = -static_cast<double>(n / 2) * b;
    return Grid{n, b, p0, Representation::Momentum};
}

} // namespace csl
