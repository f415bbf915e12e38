#include "cslbeables/generators.hpp"

#include "cslbeables/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csl {

double GeneratorMatrix::hermiticity_defect() const {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
}

double Potential::evaluate(double x, double mass) const {
    switch (kind) {
        case Kind::Free:
            return 0.0;
        case Kind::Harmonic:
            return 0.5 * mass * omega * omega * x * x;
        case Kind::Table: {
            if (table.size() < 2)
                throw std::invalid_argument("Potential: table needs at least two samples");
            auto it = std::lower_bound(table.begin(), table.end(), x,
                                       [](const auto& s, double v) { return s.first < v; });
            if (it == table.begin()) return table.front().second;
            if (it == table.end()) return table.back().second;
            const auto& [x1, v1] = *it;
            const auto& [x0, v0] = *(it - 1);
            const double w = (x - x0) / (x1 - x0);
            return v0 + w * (v1 - v0);
        }
    }
    return 0.0;
}

GeneratorMatrix build_hamiltonian(const Grid& grid, double mass, const Potential& potential,
                                  double hbar) {
    if (grid.representation != Representation::Position)
        throw RepresentationMismatch("build_hamiltonian: expected a position grid");
    if (!(mass > 0.0) || !(hbar > 0.0))
        throw std::invalid_argument("build_hamiltonian: mass and hbar must be positive");
    const int n = grid.n_sites;
    const double hop = hbar / (2.0 * mass * grid.spacing * grid.spacing);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        h(k, k) = 2.0 * hop + potential.evaluate(grid.site(k), mass) / hbar;
        h(k, (k + 1) % n) = -hop;
        h((k + 1) % n, k) = -hop;
    }
    return GeneratorMatrix{std::move(h), Representation::Position, true};
}

GeneratorMatrix build_momentum_hamiltonian(const Grid& momentum_grid, double mass, double hbar) {
    if (momentum_grid.representation != Representation::Momentum)
        throw RepresentationMismatch("build_momentum_hamiltonian: expected a momentum grid");
    if (!(mass > 0.0) || !(hbar > 0.0))
        throw std::invalid_argument("build_momentum_hamiltonian: mass and hbar must be positive");
    const int n = momentum_grid.n_sites;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        const double p = momentum_grid.site(k);
        h(k, k) = p * p / (2.0 * mass * hbar);
    }
    return GeneratorMatrix{std::move(h), Representation::Momentum, true};
}

ExactPropagator::ExactPropagator(const GeneratorMatrix& h) : rep_(h.representation) {
    if (!h.hermitian || h.hermiticity_defect() > 1e-10)
        throw std::invalid_argument("ExactPropagator: generator must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
    if (solver.info() != Eigen::Success)
        throw NumericalAbort("ExactPropagator: eigendecomposition failed");
    freq_ = solver.eigenvalues();
    modes_ = solver.eigenvectors();
}

WaveFunction ExactPropagator::evolve(const WaveFunction& initial, double t) const {
    if (initial.grid.representation != rep_ || initial.amplitudes.size() != freq_.size())
        throw RepresentationMismatch("ExactPropagator::evolve: state does not match generator");
    Eigen::VectorXcd coeffs = modes_.adjoint() * initial.amplitudes;
    for (int k = 0; k < freq_.size(); ++k)
        coeffs[k] *= std::polar(1.0, -freq_[k] * t);
    WaveFunction out = initial;
    out.amplitudes = modes_ * coeffs;
    out.time = initial.time + t;
    return out;
}

} // namespace csl
