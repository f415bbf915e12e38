#include "cslbeables/polar.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csl {

PolarFields polar_decompose(const WaveFunction& psi, double epsilon_node, double hbar) {
    if (!(epsilon_node >= 0.0))
        throw std::invalid_argument("polar_decompose: epsilon_node must be nonnegative");
    const int n = psi.grid.n_sites;
    Eigen::VectorXd r(n), s(n);
    for (int k = 0; k < n; ++k) r[k] = std::abs(psi.amplitudes[k]);

    // first valid site anchors the phase; everything before it is frozen to it
    int first_valid = -1;
    for (int k = 0; k < n; ++k) {
        if (r[k] > epsilon_node) {
            first_valid = k;
            break;
        }
    }
    if (first_valid < 0) {
        s.setZero();
        return PolarFields{std::move(r), std::move(s), psi.grid, hbar};
    }

    double last_s = hbar * std::arg(psi.amplitudes[first_valid]);
    double last_arg = std::arg(psi.amplitudes[first_valid]);
    for (int k = 0; k < n; ++k) {
        if (r[k] > epsilon_node) {
            const double a = std::arg(psi.amplitudes[k]);
            if (k > first_valid) {
                double d = a - last_arg;
                d = std::remainder(d, 2.0 * std::numbers::pi);
                last_s += hbar * d;
            }
            last_arg = a;
            s[k] = last_s;
        } else {
            s[k] = last_s; // frozen across the node region
        }
    }
    // sites before the first valid one inherit its phase
    for (int k = 0; k < first_valid; ++k) s[k] = hbar * std::arg(psi.amplitudes[first_valid]);
    return PolarFields{std::move(r), std::move(s), psi.grid, hbar};
}

Eigen::VectorXd forward_difference(const Eigen::VectorXd& field, const Grid& grid) {
    if (field.size() != grid.n_sites)
        throw std::invalid_argument("forward_difference: field size does not match grid");
    const int n = grid.n_sites;
    Eigen::VectorXd out(n);
    for (int k = 0; k < n; ++k)
        out[k] = (field[(k + 1) % n] - field[k]) / grid.spacing;
    return out;
}

Eigen::VectorXd phase_gradient(const WaveFunction& psi, double hbar) {
    const int n = psi.grid.n_sites;
    Eigen::VectorXd out(n);
    for (int k = 0; k < n; ++k) {
        const std::complex<double> z = psi.amplitudes[(k + 1) % n] * std::conj(psi.amplitudes[k]);
        out[k] = (z == std::complex<double>(0.0, 0.0))
                     ? 0.0
                     : hbar * std::arg(z) / psi.grid.spacing;
    }
    return out;
}

} // namespace csl
