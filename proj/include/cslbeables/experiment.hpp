#pragma once

#include "cslbeables/config.hpp"
#include "cslbeables/generators.hpp"
#include "cslbeables/jump.hpp"
#include "cslbeables/stats.hpp"
#include "cslbeables/wavefunction.hpp"

namespace csl {

// Equal-weight superposition of two Gaussian packets at center +- separation/2.
WaveFunction two_packet_superposition(const Grid& grid, double center, double separation,
                                      double width, double hbar);

// index-th energy eigenstate (ascending frequency) as a unit-norm lattice
// state with a canonical phase (largest amplitude real positive).
WaveFunction hamiltonian_eigenstate(const ExactPropagator& propagator, const Grid& grid,
                                    int index);

// nearest lattice site under periodic wrap
int nearest_site(const Grid& grid, double x);

// Full jump-rate matrix of the current state: Bell rates from the generator
// flux plus the homogeneous kernel when its rate is nonzero.
TransitionMatrix transition_at(const WaveFunction& phi, const GeneratorMatrix& h,
                               const JumpParams& jump);

// Mean displacement rate (length/time) out of `from`, minimal periodic image.
double column_drift_velocity(const TransitionMatrix& t, const Grid& grid, int from);

// Executes the configured scenario end to end and writes trajectories.csv,
// moments.json, and histograms.json (plus wavefunction dumps on request) into
// config.out_dir.  Deterministic given (config, seed) at any worker count:
// every trajectory draws from its own counter streams, and floating-point
// reductions run over fixed-size trajectory blocks in a fixed order.
EnsembleStats run_experiment(const ExperimentConfig& config);

} // namespace csl
