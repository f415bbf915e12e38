#include "cslbeables/stats.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace csl {

MomentRow compute_moments(const Eigen::VectorXd& xs, const Eigen::VectorXd& ps) {
    const Eigen::Index n = xs.size();
    if (n == 0) throw std::invalid_argument("moments of an empty ensemble");
    if (ps.size() != n) throw std::invalid_argument("x and p samples differ in length");
    MomentRow out;
    out.mean_x = xs.mean();
    out.mean_p = ps.mean();
    const Eigen::VectorXd dx = xs.array() - out.mean_x;
    const Eigen::VectorXd dp = ps.array() - out.mean_p;
    out.var_x = dx.squaredNorm() / static_cast<double>(n);
    out.var_p = dp.squaredNorm() / static_cast<double>(n);
    out.cov_xp = dx.dot(dp) / static_cast<double>(n);
    return out;
}

FitResult fit_linear_slope(const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
    const Eigen::Index n = t.size();
    if (n < 2) throw std::invalid_argument("linear fit needs at least 2 points");
    if (y.size() != n) throw std::invalid_argument("fit inputs differ in length");
    const double t_mean = t.mean();
    const double y_mean = y.mean();
    const Eigen::VectorXd dt = t.array() - t_mean;
    const Eigen::VectorXd dy = y.array() - y_mean;
    const double sxx = dt.squaredNorm();
    if (!(sxx > 0.0)) throw std::invalid_argument("degenerate fit: all abscissae equal");
    FitResult out;
    out.value = dt.dot(dy) / sxx;
    if (n > 2) {
        const Eigen::VectorXd residual = dy - out.value * dt;
        const double sigma2 = residual.squaredNorm() / static_cast<double>(n - 2);
        out.standard_error = std::sqrt(sigma2 / sxx);
    }
    return out;
}

FitResult fit_decay_rate(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 10)
        throw std::invalid_argument("decay fit needs at least 10 points");
    Eigen::VectorXd t(static_cast<Eigen::Index>(series.size()));
    Eigen::VectorXd y(static_cast<Eigen::Index>(series.size()));
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!(series[i].second > 0.0))
            throw std::invalid_argument("decay fit needs strictly positive values");
        t[static_cast<Eigen::Index>(i)] = series[i].first;
        y[static_cast<Eigen::Index>(i)] = std::log(series[i].second);
    }
    FitResult slope = fit_linear_slope(t, y);
    slope.value = -slope.value;
    return slope;
}

Eigen::VectorXd histogram_counts(const Eigen::VectorXd& xs, const Grid& grid) {
    const int n = grid.n_sites;
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        double u = (xs[i] - grid.origin) / grid.spacing;
        u -= static_cast<double>(n) * std::floor(u / static_cast<double>(n));
        int k = static_cast<int>(std::lround(u)) % n;
        if (k < 0) k += n;
        counts[k] += 1.0;
    }
    return counts;
}

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void write_trajectories_csv(const std::string& path, const std::vector<TrajectoryFrame>& frames) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "# schema_version=" << schema_version << "\n";
    out << "t,trajectory_id,x,p\n";
    for (const auto& frame : frames) {
        out << format_double(frame.t) << ',' << frame.trajectory_id << ','
            << format_double(frame.x) << ',' << format_double(frame.p) << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<TrajectoryFrame> read_trajectories_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::vector<TrajectoryFrame> frames;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("t,", 0) == 0) continue;
        TrajectoryFrame frame;
        const char* cursor = line.c_str();
        char* end = nullptr;
        frame.t = std::strtod(cursor, &end);
        if (end == cursor || *end != ',') throw std::runtime_error("malformed CSV row: " + line);
        cursor = end + 1;
        frame.trajectory_id = std::strtol(cursor, &end, 10);
        if (end == cursor || *end != ',') throw std::runtime_error("malformed CSV row: " + line);
        cursor = end + 1;
        frame.x = std::strtod(cursor, &end);
        if (end == cursor || *end != ',') throw std::runtime_error("malformed CSV row: " + line);
        cursor = end + 1;
        frame.p = std::strtod(cursor, &end);
        if (end == cursor) throw std::runtime_error("malformed CSV row: " + line);
        frames.push_back(frame);
    }
    return frames;
}

std::pair<Eigen::VectorXd, std::vector<MomentRow>> moments_by_time(
    const std::vector<TrajectoryFrame>& frames) {
    std::vector<double> times;
    std::vector<MomentRow> rows;
    std::vector<double> xs, ps;
    auto flush = [&]() {
        if (xs.empty()) return;
        Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(xs.data(),
                                                               static_cast<Eigen::Index>(xs.size()));
        Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(ps.data(),
                                                               static_cast<Eigen::Index>(ps.size()));
        rows.push_back(compute_moments(xv, pv));
        xs.clear();
        ps.clear();
    };
    for (const auto& frame : frames) {
        if (times.empty() || frame.t != times.back()) {
            flush();
            times.push_back(frame.t);
        }
        xs.push_back(frame.x);
        ps.push_back(frame.p);
    }
    flush();
    Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(times.data(),
                                                          static_cast<Eigen::Index>(times.size()));
    return {t, rows};
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

} // namespace

void write_moments_json(const std::string& path, const EnsembleStats& stats) {
    nlohmann::json doc;
    doc["schema_version"] = schema_version;
    doc["times"] = to_std(stats.times);
    doc["mean_x"] = to_std(stats.mean_x);
    doc["var_x"] = to_std(stats.var_x);
    doc["mean_p"] = to_std(stats.mean_p);
    doc["var_p"] = to_std(stats.var_p);
    doc["cov_xp"] = to_std(stats.cov_xp);
    if (stats.tv_distance.size() > 0) doc["tv_distance"] = to_std(stats.tv_distance);
    if (stats.offdiag_abs.size() > 0) doc["offdiag_abs"] = to_std(stats.offdiag_abs);
    nlohmann::json fits = nlohmann::json::object();
    for (const auto& [name, fit] : stats.fit_results) {
        fits[name] = {{"value", fit.value}, {"standard_error", fit.standard_error}};
    }
    doc["fit_results"] = fits;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_histograms_json(const std::string& path, const EnsembleStats& stats,
                           const Grid& grid) {
    nlohmann::json doc;
    doc["schema_version"] = schema_version;
    doc["grid"] = {{"n_sites", grid.n_sites},
                   {"spacing", grid.spacing},
                   {"origin", grid.origin},
                   {"representation",
                    grid.representation == Representation::Position ? "position" : "momentum"}};
    doc["times"] = to_std(stats.times);
    nlohmann::json histograms = nlohmann::json::array();
    for (const auto& h : stats.histograms) histograms.push_back(to_std(h));
    doc["histograms"] = histograms;
    if (stats.tv_distance.size() > 0) doc["tv_distance"] = to_std(stats.tv_distance);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace csl
