#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace csl {

enum class Representation { Position, Momentum };

// Uniform 1D lattice with periodic topology.  Site k sits at origin + k*spacing.
struct Grid {
    int n_sites = 0;
    double spacing = 0.0;
    double origin = 0.0;
    Representation representation = Representation::Position;

    double site(int k) const { return origin + k * spacing; }
    double extent() const { return n_sites * spacing; }
    Eigen::VectorXd sites() const;

    // wraps a continuous coordinate into [origin, origin + extent)
    double wrap(double x) const;

    bool operator==(const Grid&) const = default;
};

// throws std::invalid_argument for n_sites < 2 or spacing <= 0
Grid make_grid(int n_sites, double spacing, double origin, Representation representation);

// Conjugate momentum lattice: spacing b = 2*pi*hbar / (N*a), sites
// (k - floor(N/2)) * b so frequencies are signed and monotone.
Grid momentum_grid_for(const Grid& position_grid, double hbar);

} // namespace csl
