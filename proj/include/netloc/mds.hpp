#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "netloc/measurements.hpp"
#include "netloc/random.hpp"

namespace netloc {

/// n points in the plane; only relative geometry is meaningful.
struct Configuration {
    Eigen::Matrix<double, Eigen::Dynamic, 2> points;

    int size() const { return static_cast<int>(points.rows()); }

    double distance(int i, int j) const {
        return (points.row(i) - points.row(j)).norm();
    }

    DistanceEstimateMatrix to_distances() const {
        DistanceEstimateMatrix d(size());
        for (int i = 0; i < size(); ++i)
            for (int j = i + 1; j < size(); ++j) d.set(i, j, distance(i, j));
        return d;
    }
};

/// Normalized stress (Kruskal stress-1) of a configuration against the
/// measured set: sqrt(sum (d_ij - dhat_ij)^2 / sum dhat_ij^2), dhat being
/// configuration distances over measured pairs.
inline double compute_stress(const Configuration& config,
                             const MeasurementSet& measurements) {
    if (measurements.edges.empty())
        throw std::invalid_argument("compute_stress: no measurements");
    double num = 0.0, den = 0.0;
    for (const auto& e : measurements.edges) {
        const double dhat = config.distance(e.i, e.j);
        num += (e.d - dhat) * (e.d - dhat);
        den += dhat * dhat;
    }
    if (den == 0.0)
        throw std::invalid_argument("compute_stress: configuration is all-coincident");
    return std::sqrt(num / den);
}

/// Classical MDS / PCoA: double-center the squared dissimilarities and embed
/// with the top-2 eigenpairs (negative eigenvalues clamped to zero).
inline Configuration classical_mds(const Eigen::MatrixXd& dissimilarities) {
    const auto n = dissimilarities.rows();
    if (n < 3)
        throw std::invalid_argument("classical_mds: need at least 3 points");
    if (dissimilarities.cols() != n)
        throw std::invalid_argument("classical_mds: matrix must be square");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (dissimilarities(i, i) != 0.0)
            throw std::invalid_argument("classical_mds: diagonal must be zero");
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = dissimilarities(i, j);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw std::invalid_argument("classical_mds: entries must be >= 0");
            if (std::abs(v - dissimilarities(j, i)) >
                1e-9 * std::max(1.0, std::abs(v)))
                throw std::invalid_argument("classical_mds: matrix must be symmetric");
        }
    }
    const Eigen::MatrixXd d2 = dissimilarities.array().square();
    const Eigen::MatrixXd j_center =
        Eigen::MatrixXd::Identity(n, n) -
        Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd b = -0.5 * j_center * d2 * j_center;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (b + b.transpose()));
    Configuration out;
    out.points.resize(n, 2);
    // eigenvalues are ascending; take the last two
    for (int c = 0; c < 2; ++c) {
        const Eigen::Index k = n - 1 - c;
        const double lambda = std::max(eig.eigenvalues()(k), 0.0);
        out.points.col(c) = eig.eigenvectors().col(k) * std::sqrt(lambda);
    }
    return out;
}

/// Weighted least-squares projection onto non-decreasing sequences
/// (pool-adjacent-violators).
inline std::vector<double> isotonic_regression(const std::vector<double>& values,
                                               const std::vector<double>& weights) {
    if (values.empty())
        throw std::invalid_argument("isotonic_regression: empty input");
    if (values.size() != weights.size())
        throw std::invalid_argument("isotonic_regression: length mismatch");
    for (double w : weights)
        if (!(w > 0.0))
            throw std::invalid_argument("isotonic_regression: weights must be > 0");

    struct Block {
        double mean;
        double weight;
        int count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        blocks.push_back({values[k], weights[k], 1});
        while (blocks.size() >= 2 &&
               blocks[blocks.size() - 2].mean >= blocks.back().mean) {
            const Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const double w = prev.weight + top.weight;
            prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w;
            prev.weight = w;
            prev.count += top.count;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& blk : blocks)
        out.insert(out.end(), blk.count, blk.mean);
    return out;
}

inline std::vector<double> isotonic_regression(const std::vector<double>& values) {
    return isotonic_regression(values, std::vector<double>(values.size(), 1.0));
}

struct SmacofOptions {
    bool metric = true;
    int n_init = 5;
    int max_iter = 300;
    double tol = 1e-6;     ///< stop when the raw-stress decrease falls below this
    std::uint64_t seed = 0;

    void validate() const {
        if (n_init < 1) throw std::invalid_argument("smacof: n_init must be >= 1");
        if (max_iter < 1) throw std::invalid_argument("smacof: max_iter must be >= 1");
        if (!(tol > 0.0)) throw std::invalid_argument("smacof: tol must be > 0");
    }
};

/// Raw stress around each Guttman step. The majorization guarantee is
/// post[k] <= pre[k] for every k; in metric mode pre[k+1] == post[k], so the
/// concatenated sequence is non-increasing.
struct SmacofTrace {
    std::vector<double> pre;
    std::vector<double> post;
};

struct SmacofRun {
    Configuration config;
    double stress1 = std::numeric_limits<double>::infinity();
    int iterations = 0;
    SmacofTrace trace;
};

struct SmacofResult {
    Configuration config;       ///< best configuration by compute_stress
    double stress1 = std::numeric_limits<double>::infinity();
    int best_run = -1;
    std::vector<SmacofRun> runs;
};

namespace detail {

inline double raw_stress(const Configuration& x, const std::vector<Edge>& edges,
                         const std::vector<double>& disparities) {
    double s = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const double diff = x.distance(edges[k].i, edges[k].j) - disparities[k];
        s += diff * diff;
    }
    return s;
}

/// Pseudo-inverse of the unit-weight Laplacian of the measurement graph.
inline Eigen::MatrixXd laplacian_pinv(int n, const std::vector<Edge>& edges) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : edges) {
        lap(e.i, e.i) += 1.0;
        lap(e.j, e.j) += 1.0;
        lap(e.i, e.j) -= 1.0;
        lap(e.j, e.i) -= 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
    const double cutoff = 1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff());
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k)
        if (eig.eigenvalues()(k) > cutoff) inv(k) = 1.0 / eig.eigenvalues()(k);
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

inline Configuration guttman_step(const Configuration& x,
                                  const std::vector<Edge>& edges,
                                  const std::vector<double>& disparities,
                                  const Eigen::MatrixXd& vpinv) {
    const int n = x.size();
    Eigen::MatrixXd bmat = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t k = 0; k < edges.size(); ++k) {
        const auto& e = edges[k];
        const double dist = x.distance(e.i, e.j);
        if (dist <= 0.0) continue;
        const double ratio = disparities[k] / dist;
        bmat(e.i, e.j) -= ratio;
        bmat(e.j, e.i) -= ratio;
        bmat(e.i, e.i) += ratio;
        bmat(e.j, e.j) += ratio;
    }
    Configuration out;
    out.points = vpinv * (bmat * x.points);
    return out;
}

}  // namespace detail

/// SMACOF stress majorization in 2-D. Metric mode requires a complete
/// measurement set; non-metric mode works on the sparse set and alternates
/// Guttman steps with isotonic disparity fits (disparities re-normalized each
/// iteration so their squared sum matches the configuration distances').
inline SmacofResult smacof(const MeasurementSet& measurements,
                           const SmacofOptions& options) {
    options.validate();
    measurements.validate();
    if (measurements.edges.empty())
        throw std::invalid_argument("smacof: no measurements");
    if (measurements.n < 2)
        throw std::invalid_argument("smacof: need at least 2 nodes");
    if (options.metric && !measurements.complete())
        throw std::invalid_argument(
            "smacof: metric mode requires a complete measurement set; impute "
            "missing pairs first");

    const auto& edges = measurements.edges;
    const int n = measurements.n;
    const double mean_d = measurements.mean_distance();
    const Eigen::MatrixXd vpinv = detail::laplacian_pinv(n, edges);

    // fixed PAV order for non-metric: ascending measured distance,
    // index-stable for ties
    std::vector<std::size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return edges[a].d < edges[b].d;
    });

    SmacofResult result;
    for (int run_index = 0; run_index < options.n_init; ++run_index) {
        Rng rng(Rng::mix(options.seed, static_cast<std::uint64_t>(run_index)));
        SmacofRun run;
        Configuration x;
        x.points.resize(n, 2);
        for (int i = 0; i < n; ++i) {
            x.points(i, 0) = rng.uniform(-mean_d, mean_d);
            x.points(i, 1) = rng.uniform(-mean_d, mean_d);
        }

        std::vector<double> disparities(edges.size());
        for (std::size_t k = 0; k < edges.size(); ++k) disparities[k] = edges[k].d;

        for (int iter = 0; iter < options.max_iter; ++iter) {
            if (!options.metric) {
                // isotonic fit of current distances against the measured order
                std::vector<double> dist_sorted(edges.size());
                for (std::size_t k = 0; k < edges.size(); ++k)
                    dist_sorted[k] = x.distance(edges[order[k]].i, edges[order[k]].j);
                const std::vector<double> fitted = isotonic_regression(dist_sorted);
                double sum_d2 = 0.0, sum_f2 = 0.0;
                for (std::size_t k = 0; k < edges.size(); ++k) {
                    sum_d2 += dist_sorted[k] * dist_sorted[k];
                    sum_f2 += fitted[k] * fitted[k];
                }
                const double scale = sum_f2 > 0.0 ? std::sqrt(sum_d2 / sum_f2) : 1.0;
                for (std::size_t k = 0; k < edges.size(); ++k)
                    disparities[order[k]] = fitted[k] * scale;
            }

            const double before = detail::raw_stress(x, edges, disparities);
            x = detail::guttman_step(x, edges, disparities, vpinv);
            const double after = detail::raw_stress(x, edges, disparities);
            run.trace.pre.push_back(before);
            run.trace.post.push_back(after);
            ++run.iterations;
            if (before - after < options.tol) break;
        }

        bool coincident = true;
        for (const auto& e : edges)
            if (x.distance(e.i, e.j) > 0.0) { coincident = false; break; }
        run.config = x;
        run.stress1 = coincident ? std::numeric_limits<double>::infinity()
                                 : compute_stress(x, measurements);
        if (run.stress1 < result.stress1) {
            result.stress1 = run.stress1;
            result.best_run = run_index;
            result.config = run.config;
        }
        result.runs.push_back(std::move(run));
    }
    if (result.best_run < 0)
        throw std::runtime_error("smacof: all initializations collapsed");
    return result;
}

/// Uniformly rescales a configuration so that its mean distance over the
/// measured pairs equals the mean measured distance.
inline Configuration rescale_to_mean(const Configuration& config,
                                     const MeasurementSet& measurements) {
    if (measurements.edges.empty())
        throw std::invalid_argument("rescale_to_mean: no measurements");
    double mean_measured = 0.0, mean_embedded = 0.0;
    for (const auto& e : measurements.edges) {
        mean_measured += e.d;
        mean_embedded += config.distance(e.i, e.j);
    }
    if (mean_embedded == 0.0)
        throw std::invalid_argument(
            "rescale_to_mean: embedded measured distances are all zero");
    Configuration out;
    out.points = config.points * (mean_measured / mean_embedded);
    return out;
}

}  // namespace netloc
