#include "cslbeables/langevin.hpp"

#include "cslbeables/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace csl {

namespace {

// Periodic image of x in [origin, origin + extent); flags when x left the
// base cell.
double periodic_image(double x, const Grid& grid, bool& wrapped) {
    const double extent = grid.extent();
    double u = x - grid.origin;
    if (u >= 0.0 && u < extent) {
        wrapped = false;
        return x;
    }
    wrapped = true;
    u -= extent * std::floor(u / extent);
    if (u >= extent) u = 0.0; // floor rounding at the upper edge
    return grid.origin + u;
}

// Linear interpolation of a field whose entry k lives at x_k + offset, with
// periodic closure.
double lerp_periodic(const Eigen::VectorXd& field, const Grid& grid, double x, double offset) {
    const int n = grid.n_sites;
    double u = (x - grid.origin - offset) / grid.spacing;
    u -= static_cast<double>(n) * std::floor(u / static_cast<double>(n));
    int k = static_cast<int>(std::floor(u));
    if (k >= n) k -= n;
    if (k < 0) k += n;
    const double frac = u - std::floor(u);
    const int k1 = (k + 1) % n;
    return (1.0 - frac) * field[k] + frac * field[k1];
}

bool lerp_touches(const Eigen::Array<bool, Eigen::Dynamic, 1>& mask, const Grid& grid, double x,
                  double offset) {
    const int n = grid.n_sites;
    double u = (x - grid.origin - offset) / grid.spacing;
    u -= static_cast<double>(n) * std::floor(u / static_cast<double>(n));
    int k = static_cast<int>(std::floor(u));
    if (k >= n) k -= n;
    if (k < 0) k += n;
    return mask[k] || mask[(k + 1) % n];
}

constexpr double half = 0.5;

} // namespace

GuidanceField guidance_field(const PolarFields& polar, double mass, double epsilon_node) {
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(epsilon_node > 0.0)) throw std::invalid_argument("epsilon_node must be positive");
    const int n = polar.grid.n_sites;
    const double a = polar.grid.spacing;
    GuidanceField out;
    out.grid = polar.grid;
    out.velocity.resize(n);
    out.osmotic.resize(n);
    out.clamped = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);

    const double r_max = polar.amplitude_r.maxCoeff();
    if (!(r_max > 0.0)) throw ZeroNorm("guidance field of an identically zero state");
    const double bound = 1.0 / (epsilon_node * a);
    const double two_pi_hbar = 2.0 * std::numbers::pi * polar.hbar;

    for (int k = 0; k < n; ++k) {
        const int k1 = (k + 1) % n;
        // interior unwrapped differences are already minimal-image; the seam
        // needs re-reduction because S accumulates the full winding
        double ds = polar.phase_s[k1] - polar.phase_s[k];
        if (k1 == 0) ds = std::remainder(ds, two_pi_hbar);
        out.velocity[k] = ds / (a * mass);

        const double r0 = polar.amplitude_r[k] / r_max;
        const double r1 = polar.amplitude_r[k1] / r_max;
        double osmotic;
        if (r0 <= 0.0 || r1 <= 0.0) {
            osmotic = (r1 > r0) ? bound : (r1 < r0 ? -bound : 0.0);
            out.clamped[k] = true;
        } else {
            osmotic = (std::log(r1) - std::log(r0)) / a;
            if (osmotic > bound) {
                osmotic = bound;
                out.clamped[k] = true;
            } else if (osmotic < -bound) {
                osmotic = -bound;
                out.clamped[k] = true;
            }
        }
        out.osmotic[k] = osmotic;
    }
    return out;
}

AccumulatedNoiseIntegral::AccumulatedNoiseIntegral(const Grid& z_grid)
    : grid_(z_grid),
      value_(Eigen::VectorXd::Zero(z_grid.n_sites)),
      derivative_(Eigen::VectorXd::Zero(z_grid.n_sites)) {}

void AccumulatedNoiseIntegral::accumulate(const LocalizationKernel& kernel,
                                          const Eigen::VectorXd& increments) {
    if (!(kernel.grid() == grid_))
        throw RepresentationMismatch("noise integral and kernel live on different grids");
    if (increments.size() != grid_.n_sites)
        throw std::invalid_argument("increment vector size does not match the noise grid");
    value_ += kernel.smear(increments);
    derivative_ += kernel.smear_derivative(increments);
}

double AccumulatedNoiseIntegral::value_at(double x) const {
    return lerp_periodic(value_, grid_, x, 0.0);
}

double AccumulatedNoiseIntegral::derivative_at(double x) const {
    return lerp_periodic(derivative_, grid_, x, 0.0);
}

void step_bohm(LangevinState& state, const GuidanceField& field, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    bool wrapped = false;
    const double image = periodic_image(state.x, field.grid, wrapped);
    if (wrapped) ++state.wrap_events;
    state.x += lerp_periodic(field.velocity, field.grid, image, half * field.grid.spacing) * dt;
}

void step_bohm(LangevinState& state, const PolarFields& polar, double mass, double dt,
               double epsilon_node) {
    step_bohm(state, guidance_field(polar, mass, epsilon_node), dt);
}

void step_nelson(LangevinState& state, const GuidanceField& field, double nu, double dt,
                 PhiloxRng& rng) {
    if (nu < 0.0) throw std::invalid_argument("nu must be nonnegative");
    if (nu == 0.0) {
        step_bohm(state, field, dt);
        return;
    }
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    bool wrapped = false;
    const double image = periodic_image(state.x, field.grid, wrapped);
    if (wrapped) ++state.wrap_events;
    const double offset = half * field.grid.spacing;
    if (lerp_touches(field.clamped, field.grid, image, offset)) ++state.clamp_events;
    const double drift = lerp_periodic(field.velocity, field.grid, image, offset) +
                         2.0 * nu * lerp_periodic(field.osmotic, field.grid, image, offset);
    state.x += drift * dt + std::sqrt(2.0 * nu * dt) * rng.next_gaussian();
}

void step_nelson(LangevinState& state, const PolarFields& polar, double nu, double mass,
                 double dt, PhiloxRng& rng, double epsilon_node) {
    step_nelson(state, guidance_field(polar, mass, epsilon_node), nu, dt, rng);
}

void step_csl_position(LangevinState& state, const AccumulatedNoiseIntegral* acc, double nu,
                       double mass, double dt, PhiloxRng& rng, DriftMode mode) {
    if (nu < 0.0) throw std::invalid_argument("nu must be nonnegative");
    if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double drift = (mode == DriftMode::P0 ? state.p0 : state.p) / mass;
    double tracking = 0.0;
    if (acc != nullptr && nu > 0.0) {
        bool wrapped = false;
        const double image = periodic_image(state.x, acc->grid(), wrapped);
        if (wrapped) ++state.wrap_events;
        tracking = 2.0 * nu * acc->derivative_at(image);
    }
    double diffusion = 0.0;
    if (nu > 0.0) diffusion = std::sqrt(2.0 * nu * dt) * rng.next_gaussian();
    state.x += (drift + tracking) * dt + diffusion;
}

void step_csl_momentum(LangevinState& state, const CslParams& params, double dt, PhiloxRng& rng) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    const double rate = params.alpha * params.lambda;
    if (rate == 0.0) return;
    state.p += params.hbar * std::sqrt(half * rate * dt) * rng.next_gaussian();
}

void step_phase_space(LangevinState& state, const AccumulatedNoiseIntegral* acc,
                      const CslParams& params, double dt, PhiloxRng& momentum_rng,
                      PhiloxRng& position_rng) {
    step_csl_momentum(state, params, dt, momentum_rng);
    step_csl_position(state, acc, params.nu, params.mass, dt, position_rng, DriftMode::Coupled);
}

} // namespace csl
