#pragma once

#include "cslbeables/csl_params.hpp"
#include "cslbeables/kernel.hpp"
#include "cslbeables/polar.hpp"
#include "cslbeables/rng.hpp"

#include <Eigen/Dense>

namespace csl {

// Continuum-limit beable state.  `t` is bookkeeping owned by the caller; the
// step functions never advance it.  `x` is kept unwrapped so ensemble moments
// survive periodic evaluation; field lookups use the periodic image and bump
// `wrap_events` whenever the image differs from x.  The dw draws of these
// steps come from streams distinct from the wavefunction's dB stream.
struct LangevinState {
    double x = 0.0;
    double p = 0.0;
    double t = 0.0;
    double p0 = 0.0;           // standalone drift parameter
    long clamp_events = 0;     // node-proximity clamps encountered
    long wrap_events = 0;      // periodic evaluations outside the base cell
};

constexpr double default_epsilon_node = 1e-8;

// Per-snapshot drift fields, midpoint-centered: entry k holds the forward
// difference between sites k and k+1 and therefore lives at x_k + a/2.
//   velocity = S'/M,   osmotic = R'/R = (ln R)',
// with |osmotic| clamped at 1/(epsilon_node * a); `clamped[k]` marks entries
// that hit the clamp (epsilon_node is relative to max R).
struct GuidanceField {
    Eigen::VectorXd velocity;
    Eigen::VectorXd osmotic;
    Eigen::Array<bool, Eigen::Dynamic, 1> clamped;
    Grid grid;
};

GuidanceField guidance_field(const PolarFields& polar, double mass,
                             double epsilon_node = default_epsilon_node);

// Running sums over t' <= t of sum_j a_z dB_j(t') G(x - z_j) and of the same
// contraction against dG/dx, kept as lattice fields; queries interpolate
// linearly with periodic wrap.  With gamma = 0 every increment is zero and
// both fields stay identically zero.
class AccumulatedNoiseIntegral {
public:
    explicit AccumulatedNoiseIntegral(const Grid& z_grid);

    void accumulate(const LocalizationKernel& kernel, const Eigen::VectorXd& increments);

    double value_at(double x) const;
    double derivative_at(double x) const;

    const Eigen::VectorXd& value() const { return value_; }
    const Eigen::VectorXd& derivative() const { return derivative_; }
    const Grid& grid() const { return grid_; }

private:
    Grid grid_;
    Eigen::VectorXd value_;
    Eigen::VectorXd derivative_;
};

// x += velocity(x) dt; deterministic, no draws.
void step_bohm(LangevinState& state, const GuidanceField& field, double dt);
void step_bohm(LangevinState& state, const PolarFields& polar, double mass, double dt,
               double epsilon_node = default_epsilon_node);

// x += [velocity(x) + 2 nu osmotic(x)] dt + sqrt(2 nu) N(0,1) sqrt(dt).
// nu = 0 delegates to step_bohm and consumes no draw.
void step_nelson(LangevinState& state, const GuidanceField& field, double nu, double dt,
                 PhiloxRng& rng);
void step_nelson(LangevinState& state, const PolarFields& polar, double nu, double mass,
                 double dt, PhiloxRng& rng, double epsilon_node = default_epsilon_node);

enum class DriftMode { P0, Coupled };

// x += (drift/M) dt + 2 nu d/dx[accumulated integral](x) dt
//        + sqrt(2 nu) N(0,1) sqrt(dt),
// drift = p0 (standalone) or the live momentum beable (coupled); acc may be
// null when the tracking term is switched off.  nu = 0 consumes no draw.
void step_csl_position(LangevinState& state, const AccumulatedNoiseIntegral* acc, double nu,
                       double mass, double dt, PhiloxRng& rng, DriftMode mode);

// p += hbar sqrt(alpha lambda / 2) N(0,1) sqrt(dt)
void step_csl_momentum(LangevinState& state, const CslParams& params, double dt, PhiloxRng& rng);

// Momentum kick first, then the position step with the updated momentum as
// drift (coupled mode).  nu is taken from params.
void step_phase_space(LangevinState& state, const AccumulatedNoiseIntegral* acc,
                      const CslParams& params, double dt, PhiloxRng& momentum_rng,
                      PhiloxRng& position_rng);

} // namespace csl
