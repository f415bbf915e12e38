#include "cslbeables/wavefunction.hpp"

#include "cslbeables/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csl {

double WaveFunction::norm() const {
    return std::sqrt(amplitudes.squaredNorm() * grid.spacing);
}

Eigen::VectorXd WaveFunction::probability() const {
    return amplitudes.cwiseAbs2() * grid.spacing;
}

void WaveFunction::normalize() {
    const double n = norm();
    if (!(n > 1e-150) || !std::isfinite(n))
        throw ZeroNorm("normalize: wavefunction norm underflowed (" + std::to_string(n) + ")");
    amplitudes /= n;
}

WaveFunction make_wavefunction(const Grid& grid, Eigen::VectorXcd amplitudes, double time) {
    if (amplitudes.size() != grid.n_sites)
        throw std::invalid_argument("make_wavefunction: amplitude count does not match grid");
    return WaveFunction{grid, std::move(amplitudes), time};
}

namespace {
// signed displacement to the nearest periodic image
double minimal_image(double dx, double span) {
    dx = std::remainder(dx, span);
    return dx;
}
} // namespace

WaveFunction gaussian_packet(const Grid& grid, double center, double width, double momentum,
                             double hbar) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian_packet: width must be positive");
    const double span = grid.extent();
    Eigen::VectorXcd amps(grid.n_sites);
    for (int n = 0; n < grid.n_sites; ++n) {
        const double dx = minimal_image(grid.site(n) - center, span);
        const double envelope = std::exp(-dx * dx / (4.0 * width * width));
        amps[n] = std::polar(envelope, momentum * dx / hbar);
    }
    WaveFunction wf{grid, std::move(amps), 0.0};
    wf.normalize();
    return wf;
}

double nearest_lattice_momentum(const Grid& grid, double momentum, double hbar) {
    const double b = 2.0 * std::numbers::pi * hbar / (grid.n_sites * grid.spacing);
    return std::round(momentum / b) * b;
}

WaveFunction plane_wave(const Grid& grid, double momentum, double hbar) {
    const double p = nearest_lattice_momentum(grid, momentum, hbar);
    Eigen::VectorXcd amps(grid.n_sites);
    const double amp = 1.0 / std::sqrt(grid.extent());
    for (int n = 0; n < grid.n_sites; ++n)
        amps[n] = std::polar(amp, p * grid.site(n) / hbar);
    return WaveFunction{grid, std::move(amps), 0.0};
}

} // namespace csl
