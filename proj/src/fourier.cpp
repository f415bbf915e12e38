#include "cslbeables/fourier.hpp"

#include "cslbeables/errors.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace csl {

FourierTransform::FourierTransform(const Grid& position_grid, double hbar)
    : pos_(position_grid), mom_(momentum_grid_for(position_grid, hbar)), hbar_(hbar) {
    const int n = pos_.n_sites;
    const double scale = std::sqrt(pos_.spacing / (n * mom_.spacing));
    fwd_.resize(n, n);
    for (int k = 0; k < n; ++k) {
        const double p = mom_.site(k);
        for (int j = 0; j < n; ++j)
            fwd_(k, j) = std::polar(scale, -p * pos_.site(j) / hbar_);
    }
    bwd_ = fwd_.adjoint() * (mom_.spacing / pos_.spacing);
}

WaveFunction FourierTransform::to_momentum(const WaveFunction& psi) const {
    if (psi.grid != pos_)
        throw RepresentationMismatch("to_momentum: wavefunction is not on this position grid");
    return WaveFunction{mom_, fwd_ * psi.amplitudes, psi.time};
}

WaveFunction FourierTransform::to_position(const WaveFunction& phi) const {
    if (phi.grid != mom_)
        throw RepresentationMismatch("to_position: wavefunction is not on this momentum grid");
    return WaveFunction{pos_, bwd_ * phi.amplitudes, phi.time};
}

Eigen::MatrixXcd FourierTransform::transform_diagonal_generator(const Eigen::VectorXd& r) const {
    const int n = pos_.n_sites;
    if (r.size() != n)
        throw std::invalid_argument("transform_diagonal_generator: size mismatch");
    // (F diag(r) F^{-1})_{mk} = (1/N) sum_j r_j e^{-i 2 pi (m-k) j / N} * e^{-i (m-k) b x0 / hbar}
    Eigen::VectorXcd dft(n);
    for (int q = 0; q < n; ++q) {
        std::complex<double> acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += r[j] * std::polar(1.0, -2.0 * std::numbers::pi * q * j / n);
        dft[q] = acc / static_cast<double>(n);
    }
    Eigen::MatrixXcd out(n, n);
    for (int m = 0; m < n; ++m) {
        for (int k = 0; k < n; ++k) {
            int q = m - k;
            const double phase = -q * mom_.spacing * pos_.origin / hbar_;
            q = ((q % n) + n) % n;
            out(m, k) = dft[q] * std::polar(1.0, phase);
        }
    }
    return out;
}

} // namespace csl
