#include "cslbeables/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace csl {

void sample_noise(NoiseField& noise, double dt, double gamma, PhiloxRng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("sample_noise: dt must be positive");
    if (!(gamma >= 0.0)) throw std::invalid_argument("sample_noise: gamma must be nonnegative");
    const double sd = std::sqrt(gamma * dt / noise.z_grid.spacing);
    for (int j = 0; j < noise.z_grid.n_sites; ++j)
        noise.increments[j] = sd * rng.next_gaussian();
    noise.accumulated += noise.increments;
}

void drive_noise(NoiseField& noise, double dt, const Eigen::VectorXd& rate) {
    if (rate.size() != noise.z_grid.n_sites)
        throw std::invalid_argument("drive_noise: rate size does not match grid");
    noise.increments = rate * dt;
    noise.accumulated += noise.increments;
}

} // namespace csl
