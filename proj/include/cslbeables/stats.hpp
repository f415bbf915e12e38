#pragma once

#include "cslbeables/grid.hpp"

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace csl {

inline constexpr int schema_version = 1;

struct FitResult {
    double value = 0.0;
    double standard_error = 0.0;
};

// Population moments (divide by n, not n - 1); Cauchy-Schwarz then guarantees
// cov_xp^2 <= var_x * var_p.
struct MomentRow {
    double mean_x = 0.0;
    double var_x = 0.0;
    double mean_p = 0.0;
    double var_p = 0.0;
    double cov_xp = 0.0;
};

MomentRow compute_moments(const Eigen::VectorXd& xs, const Eigen::VectorXd& ps);

struct EnsembleStats {
    Eigen::VectorXd times;
    Eigen::VectorXd mean_x, var_x, mean_p, var_p, cov_xp;
    std::vector<Eigen::VectorXd> histograms; // one per checkpoint, possibly empty
    Eigen::VectorXd tv_distance;             // per checkpoint, or empty
    Eigen::VectorXd offdiag_abs;             // |rho(x1,x2)| per checkpoint, or empty
    std::map<std::string, FitResult> fit_results;
};

// Least-squares line through (t, y); standard_error is the slope's, zero when
// the fit is exactly determined (n = 2).
FitResult fit_linear_slope(const Eigen::VectorXd& t, const Eigen::VectorXd& y);

// Least-squares fit of log(value) vs t, returned as a decay rate (positive
// for decaying series).  Requires >= 10 strictly positive points.
FitResult fit_decay_rate(const std::vector<std::pair<double, double>>& series);

// Counts per site; each value is wrapped periodically and assigned to the
// nearest site (bins centered on the lattice).
Eigen::VectorXd histogram_counts(const Eigen::VectorXd& xs, const Grid& grid);

struct TrajectoryFrame {
    double t = 0.0;
    long trajectory_id = 0;
    double x = 0.0;
    double p = 0.0;
};

// CSV layout: a `# schema_version=N` comment line, a `t,trajectory_id,x,p`
// header, then one row per frame with %.17g doubles (exact round trip).
void write_trajectories_csv(const std::string& path, const std::vector<TrajectoryFrame>& frames);
std::vector<TrajectoryFrame> read_trajectories_csv(const std::string& path);

// Groups frames by checkpoint (runs of equal t in file order) and recomputes
// the moment table with compute_moments; feeding back a written CSV must
// reproduce the in-memory moments.
std::pair<Eigen::VectorXd, std::vector<MomentRow>> moments_by_time(
    const std::vector<TrajectoryFrame>& frames);

void write_moments_json(const std::string& path, const EnsembleStats& stats);
void write_histograms_json(const std::string& path, const EnsembleStats& stats, const Grid& grid);

std::string format_double(double v); // %.17g

} // namespace csl
