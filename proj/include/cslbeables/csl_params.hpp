#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csl {

// Collapse-model parameters.  The noise strength gamma is never free: it is
// tied to the collapse rate and localization scale by
//   gamma = lambda * sqrt(4 pi / alpha),
// which makes gamma * integral G(u)^2 du = lambda.
struct CslParams {
    double alpha = 1.0;  // inverse squared localization length
    double lambda = 0.0; // collapse rate
    double mass = 1.0;
    double hbar = 1.0;
    double nu = 0.5;     // osmotic/tracking diffusion coefficient, default hbar/(2 mass)

    double gamma() const { return lambda * std::sqrt(4.0 * std::numbers::pi / alpha); }
};

inline CslParams make_csl_params(double alpha, double lambda, double mass, double hbar,
                                 double nu = -1.0) {
    if (!(alpha > 0.0)) throw std::invalid_argument("CslParams: alpha must be positive");
    if (!(lambda >= 0.0)) throw std::invalid_argument("CslParams: lambda must be nonnegative");
    if (!(mass > 0.0)) throw std::invalid_argument("CslParams: mass must be positive");
    if (!(hbar > 0.0)) throw std::invalid_argument("CslParams: hbar must be positive");
    CslParams p;
    p.alpha = alpha;
    p.lambda = lambda;
    p.mass = mass;
    p.hbar = hbar;
    p.nu = nu < 0.0 ? hbar / (2.0 * mass) : nu;
    return p;
}

} // namespace csl
