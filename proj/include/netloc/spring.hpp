#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "netloc/mds.hpp"
#include "netloc/measurements.hpp"
#include "netloc/random.hpp"

namespace netloc {

struct SpringOptions {
    double epsilon = 0.1;   ///< convergence displacement threshold, meters
    double gamma = 0.0;     ///< step coefficient; 0 selects the 1/n default
    int n_init = 5;
    int max_iter = 0;       ///< 0 selects the 50n default
    bool adaptive_step = false;  ///< decay gamma by 0.99 each iteration
    bool momentum = false;       ///< update with gamma * (F_t + F_{t-1})
    std::uint64_t seed = 0;

    void validate() const {
        if (!(epsilon > 0.0)) throw std::invalid_argument("spring: epsilon must be > 0");
        if (gamma < 0.0) throw std::invalid_argument("spring: gamma must be > 0");
        if (n_init < 1) throw std::invalid_argument("spring: n_init must be >= 1");
    }
};

/// Force exerted on x_i by the spring to x_j: stretch/compression scaled by
/// the inverse uncertainty width, along the unit vector toward x_j.
inline Eigen::Vector2d spring_force(const Eigen::Vector2d& x_i,
                                    const Eigen::Vector2d& x_j,
                                    const Edge& edge) {
    const double width = edge.d_max - edge.d_min;
    if (!(width > 0.0))
        throw std::invalid_argument("spring_force: edge uncertainty width must be > 0");
    const Eigen::Vector2d diff = x_j - x_i;
    const double len = diff.norm();
    if (len == 0.0)
        throw std::invalid_argument("spring_force: coincident points");
    return ((len - edge.d) / width) * (diff / len);
}

struct SpringRunInfo {
    bool diverged = false;
    int iterations = 0;
    double stress1 = std::numeric_limits<double>::infinity();
};

struct SpringResult {
    Configuration config;
    double stress1 = std::numeric_limits<double>::infinity();
    int best_run = -1;
    std::vector<SpringRunInfo> runs;
};

/// Iterative force-directed localization (nodes swept in index order, each
/// update seeing the already-moved positions of earlier nodes). Returns the
/// best completed start by stress; throws if every start diverges.
inline SpringResult spring_localize_detailed(
    const MeasurementSet& measurements, const SpringOptions& options,
    const std::optional<Configuration>& init = std::nullopt) {
    options.validate();
    measurements.validate();
    if (measurements.edges.empty())
        throw std::invalid_argument("spring: no measurements");
    const int n = measurements.n;

    std::vector<std::vector<const Edge*>> incident(n);
    for (const auto& e : measurements.edges) {
        if (!(e.d_max - e.d_min > 0.0))
            throw std::invalid_argument("spring: edge uncertainty width must be > 0");
        incident[e.i].push_back(&e);
        incident[e.j].push_back(&e);
    }
    for (int i = 0; i < n; ++i)
        if (incident[i].empty())
            throw std::invalid_argument(
                "spring: node " + std::to_string(i) +
                " has no incident edges; its position is unconstrained");
    if (init && init->size() != n)
        throw std::invalid_argument("spring: init size mismatch");

    const double mean_d = measurements.mean_distance();
    const double gamma0 = options.gamma > 0.0 ? options.gamma : 1.0 / n;
    const int max_iter = options.max_iter > 0 ? options.max_iter : 50 * n;
    const double blowup = 1e6 * mean_d;
    const int n_runs = init ? 1 : options.n_init;

    SpringResult result;
    for (int run_index = 0; run_index < n_runs; ++run_index) {
        SpringRunInfo info;
        Configuration x;
        if (init) {
            x = *init;
        } else {
            Rng rng(Rng::mix(options.seed, static_cast<std::uint64_t>(run_index)));
            x.points.resize(n, 2);
            for (int i = 0; i < n; ++i) {
                x.points(i, 0) = rng.uniform(-mean_d, mean_d);
                x.points(i, 1) = rng.uniform(-mean_d, mean_d);
            }
        }

        Eigen::MatrixX2d prev_force = Eigen::MatrixX2d::Zero(n, 2);
        double gamma = gamma0;
        for (int iter = 0; iter < max_iter; ++iter) {
            double max_disp = 0.0;
            for (int i = 0; i < n; ++i) {
                Eigen::Vector2d force = Eigen::Vector2d::Zero();
                for (const Edge* e : incident[i]) {
                    const int j = e->i == i ? e->j : e->i;
                    Eigen::Vector2d xj = x.points.row(j);
                    const Eigen::Vector2d xi = x.points.row(i);
                    if ((xj - xi).norm() == 0.0) {
                        // deterministic unit-vector nudge keeps coincident
                        // nodes reproducible
                        Rng nudge(Rng::mix(Rng::mix(options.seed, i), j));
                        const double angle = 2.0 * std::numbers::pi * nudge.uniform();
                        xj += 1e-6 * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                    }
                    force += spring_force(xi, xj, *e);
                }
                Eigen::Vector2d step = gamma * force;
                if (options.momentum)
                    step = gamma * (force + prev_force.row(i).transpose());
                prev_force.row(i) = force;
                x.points.row(i) += step.transpose();
                max_disp = std::max(max_disp, step.norm());
            }
            ++info.iterations;
            if (options.adaptive_step) gamma *= 0.99;
            if (x.points.cwiseAbs().maxCoeff() > blowup) {
                info.diverged = true;
                break;
            }
            if (max_disp <= options.epsilon) break;
        }

        if (!info.diverged) {
            bool coincident = true;
            for (const auto& e : measurements.edges)
                if (x.distance(e.i, e.j) > 0.0) { coincident = false; break; }
            if (!coincident) info.stress1 = compute_stress(x, measurements);
            if (info.stress1 < result.stress1) {
                result.stress1 = info.stress1;
                result.best_run = run_index;
                result.config = x;
            }
        }
        result.runs.push_back(info);
    }
    if (result.best_run < 0)
        throw std::runtime_error("spring: every initialization diverged");
    return result;
}

inline Configuration spring_localize(
    const MeasurementSet& measurements, const SpringOptions& options,
    const std::optional<Configuration>& init = std::nullopt) {
    return spring_localize_detailed(measurements, options, init).config;
}

}  // namespace netloc
