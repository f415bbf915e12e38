#include "cslbeables/fokker_planck.hpp"

#include "cslbeables/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace csl {

namespace {

double minmod(double a, double b) {
    if (a > 0.0 && b > 0.0) return std::min(a, b);
    if (a < 0.0 && b < 0.0) return std::max(a, b);
    return 0.0;
}

// One periodic advection step of a single x-column at constant velocity:
// second-order upwind with minmod-limited slopes (TVD, mass-conserving).
void advect_column(Eigen::VectorXd& q, double courant) {
    const Eigen::Index n = q.size();
    static thread_local Eigen::VectorXd slope, flux;
    slope.resize(n);
    flux.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index prev = (i + n - 1) % n;
        const Eigen::Index next = (i + 1) % n;
        slope[i] = minmod(q[next] - q[i], q[i] - q[prev]);
    }
    // flux[i] crosses the face between cells i and i+1
    if (courant >= 0.0) {
        for (Eigen::Index i = 0; i < n; ++i)
            flux[i] = courant * (q[i] + 0.5 * (1.0 - courant) * slope[i]);
    } else {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index next = (i + 1) % n;
            flux[i] = courant * (q[next] - 0.5 * (1.0 + courant) * slope[next]);
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index prev = (i + n - 1) % n;
        q[i] -= flux[i] - flux[prev];
    }
}

} // namespace

Eigen::MatrixXd fokker_planck_oracle(const CslParams& params, const Grid& x_grid,
                                     const Grid& p_grid, const Eigen::MatrixXd& q0,
                                     double t_final, double dt) {
    if (x_grid.representation != Representation::Position)
        throw RepresentationMismatch("x grid must be a position grid");
    if (p_grid.representation != Representation::Momentum)
        throw RepresentationMismatch("p grid must be a momentum grid");
    const Eigen::Index nx = x_grid.n_sites;
    const Eigen::Index np = p_grid.n_sites;
    if (q0.rows() != nx || q0.cols() != np)
        throw std::invalid_argument("density shape does not match the grids");
    if (!(t_final >= 0.0)) throw std::invalid_argument("t_final must be nonnegative");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (q0.minCoeff() < 0.0) throw std::invalid_argument("density must be nonnegative");

    const int steps = t_final > 0.0 ? std::max(1, static_cast<int>(std::lround(t_final / dt))) : 0;
    const double step_dt = steps > 0 ? t_final / steps : 0.0;
    const double diffusion = params.hbar * params.hbar * params.alpha * params.lambda / 4.0;

    double max_speed = 0.0;
    for (Eigen::Index j = 0; j < np; ++j)
        max_speed = std::max(max_speed, std::abs(p_grid.site(static_cast<int>(j))) / params.mass);
    const double advective_cfl = max_speed * 0.5 * step_dt / x_grid.spacing;
    if (advective_cfl > 1.0)
        throw StepTooLarge("advection CFL exceeds 1; reduce dt or refine the momentum window");
    const double diffusive_cfl = diffusion * step_dt / (p_grid.spacing * p_grid.spacing);
    if (diffusive_cfl > 0.5)
        throw StepTooLarge("momentum diffusion CFL exceeds 0.5; reduce dt");

    Eigen::MatrixXd q = q0;
    const double mass0 = q.sum() * x_grid.spacing * p_grid.spacing;
    if (!(mass0 > 0.0)) throw std::invalid_argument("density carries no mass");

    Eigen::VectorXd column(nx);
    const double dcoef = diffusive_cfl; // D dt / dp^2
    for (int step = 0; step < steps; ++step) {
        for (int half = 0; half < 2; ++half) {
            for (Eigen::Index j = 0; j < np; ++j) {
                const double courant =
                    (p_grid.site(static_cast<int>(j)) / params.mass) * 0.5 * step_dt /
                    x_grid.spacing;
                column = q.col(j);
                advect_column(column, courant);
                q.col(j) = column;
            }
            if (half == 0 && dcoef > 0.0) {
                // explicit diffusion in p, flux form with reflecting ends
                Eigen::MatrixXd next = q;
                for (Eigen::Index j = 0; j + 1 < np; ++j) {
                    const Eigen::VectorXd face = dcoef * (q.col(j + 1) - q.col(j));
                    next.col(j) += face;
                    next.col(j + 1) -= face;
                }
                q = next;
            }
        }
        const double mass = q.sum() * x_grid.spacing * p_grid.spacing;
        if (std::abs(mass - mass0) > 1e-6 * mass0)
            throw NumericalAbort("phase-space mass drifted past 1e-6");
        if (q.minCoeff() < -1e-12 * q.maxCoeff())
            throw NumericalAbort("phase-space density turned negative");
    }
    return q;
}

MomentRow phase_space_moments(const Eigen::MatrixXd& q, const Grid& x_grid, const Grid& p_grid) {
    const Eigen::Index nx = x_grid.n_sites;
    const Eigen::Index np = p_grid.n_sites;
    if (q.rows() != nx || q.cols() != np)
        throw std::invalid_argument("density shape does not match the grids");
    const double mass = q.sum();
    if (!(mass > 0.0)) throw std::invalid_argument("density carries no mass");

    Eigen::VectorXd xs(nx), ps(np);
    for (Eigen::Index i = 0; i < nx; ++i) xs[i] = x_grid.site(static_cast<int>(i));
    for (Eigen::Index j = 0; j < np; ++j) ps[j] = p_grid.site(static_cast<int>(j));

    const Eigen::VectorXd x_marginal = q.rowwise().sum() / mass;
    const Eigen::VectorXd p_marginal = q.colwise().sum().transpose() / mass;

    MomentRow out;
    out.mean_x = x_marginal.dot(xs);
    out.mean_p = p_marginal.dot(ps);
    out.var_x = x_marginal.dot((xs.array() - out.mean_x).square().matrix());
    out.var_p = p_marginal.dot((ps.array() - out.mean_p).square().matrix());
    double cov = 0.0;
    for (Eigen::Index i = 0; i < nx; ++i)
        for (Eigen::Index j = 0; j < np; ++j)
            cov += q(i, j) * (xs[i] - out.mean_x) * (ps[j] - out.mean_p);
    out.cov_xp = cov / mass;
    return out;
}

Eigen::MatrixXd gaussian_phase_density(const Grid& x_grid, const Grid& p_grid, double x0,
                                       double sx, double p0, double sp) {
    if (!(sx > 0.0) || !(sp > 0.0))
        throw std::invalid_argument("gaussian widths must be positive");
    const Eigen::Index nx = x_grid.n_sites;
    const Eigen::Index np = p_grid.n_sites;
    Eigen::MatrixXd q(nx, np);
    for (Eigen::Index i = 0; i < nx; ++i) {
        const double dx = x_grid.site(static_cast<int>(i)) - x0;
        for (Eigen::Index j = 0; j < np; ++j) {
            const double dp = p_grid.site(static_cast<int>(j)) - p0;
            q(i, j) = std::exp(-dx * dx / (2.0 * sx * sx) - dp * dp / (2.0 * sp * sp));
        }
    }
    const double mass = q.sum() * x_grid.spacing * p_grid.spacing;
    q /= mass;
    return q;
}

} // namespace csl
