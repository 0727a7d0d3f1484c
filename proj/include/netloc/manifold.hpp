#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "netloc/mds.hpp"
#include "netloc/measurements.hpp"

namespace netloc {

/// k-nearest-neighbor graph over measured distances, symmetrized by union.
struct NeighborGraph {
    int n = 0;
    int k = 0;
    std::vector<std::vector<std::pair<int, double>>> adjacency;  ///< (neighbor, d)

    bool has_edge(int i, int j) const {
        for (const auto& [nb, _] : adjacency[i])
            if (nb == j) return true;
        return false;
    }

    std::size_t edge_count() const {
        std::size_t total = 0;
        for (const auto& adj : adjacency) total += adj.size();
        return total / 2;
    }
};

inline int default_knn(int n) { return std::min(n - 1, 7); }

/// Keeps each node's k smallest-distance incident edges (ties broken by
/// neighbor index), unions both directions, and verifies connectivity.
inline NeighborGraph knn_graph(const MeasurementSet& measurements, int k) {
    measurements.validate();
    const int n = measurements.n;
    if (k < 1) throw std::invalid_argument("knn_graph: k must be >= 1");
    if (n < k + 1)
        throw std::invalid_argument("knn_graph: need at least k + 1 nodes");

    std::vector<std::vector<std::pair<double, int>>> incident(n);
    for (const auto& e : measurements.edges) {
        incident[e.i].emplace_back(e.d, e.j);
        incident[e.j].emplace_back(e.d, e.i);
    }
    std::vector<std::set<int>> chosen(n);
    std::vector<std::vector<double>> dist_to(n, std::vector<double>());
    Eigen::MatrixXd dmat = Eigen::MatrixXd::Constant(
        n, n, std::numeric_limits<double>::quiet_NaN());
    for (const auto& e : measurements.edges) {
        dmat(e.i, e.j) = e.d;
        dmat(e.j, e.i) = e.d;
    }
    for (int i = 0; i < n; ++i) {
        auto& inc = incident[i];
        std::sort(inc.begin(), inc.end());
        const int keep = std::min<int>(k, static_cast<int>(inc.size()));
        for (int t = 0; t < keep; ++t) {
            chosen[i].insert(inc[t].second);
            chosen[inc[t].second].insert(i);
        }
    }

    NeighborGraph g;
    g.n = n;
    g.k = k;
    g.adjacency.resize(n);
    for (int i = 0; i < n; ++i)
        for (int j : chosen[i]) g.adjacency[i].emplace_back(j, dmat(i, j));

    // connectivity via BFS
    std::vector<int> component(n, -1);
    int n_components = 0;
    for (int start = 0; start < n; ++start) {
        if (component[start] >= 0) continue;
        std::vector<int> queue{start};
        component[start] = n_components;
        while (!queue.empty()) {
            const int node = queue.back();
            queue.pop_back();
            for (const auto& [nb, _] : g.adjacency[node])
                if (component[nb] < 0) {
                    component[nb] = n_components;
                    queue.push_back(nb);
                }
        }
        ++n_components;
    }
    if (n_components > 1) {
        std::vector<int> sizes(n_components, 0);
        for (int c : component) ++sizes[c];
        std::string msg = "knn_graph: graph is disconnected (components of sizes";
        for (int s : sizes) msg += " " + std::to_string(s);
        throw std::invalid_argument(msg + ")");
    }
    return g;
}

/// All-pairs shortest-path distances over the neighbor graph
/// (Floyd-Warshall; node counts here are small).
inline Eigen::MatrixXd geodesic_distances(const NeighborGraph& graph) {
    const int n = graph.n;
    Eigen::MatrixXd d = Eigen::MatrixXd::Constant(
        n, n, std::numeric_limits<double>::infinity());
    for (int i = 0; i < n; ++i) d(i, i) = 0.0;
    for (int i = 0; i < n; ++i)
        for (const auto& [j, dist] : graph.adjacency[i])
            d(i, j) = std::min(d(i, j), dist);
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (d(i, k) + d(k, j) < d(i, j)) d(i, j) = d(i, k) + d(k, j);
    if (!d.allFinite())
        throw std::invalid_argument("geodesic_distances: graph is disconnected");
    return d;
}

/// Isomap: geodesic completion of the k-NN graph, classical MDS embedding,
/// then mean rescaling against the measured set.
inline Configuration isomap(const MeasurementSet& measurements, int k) {
    const NeighborGraph g = knn_graph(measurements, k);
    const Eigen::MatrixXd geo = geodesic_distances(g);
    const Configuration embedded = classical_mds(geo);
    return rescale_to_mean(embedded, measurements);
}

/// Locally linear embedding adapted to distance-only input: neighborhood
/// Gram matrices are recovered from (geodesic-completed) squared distances
/// centered at each node, reconstruction weights solve the regularized local
/// system with rows summing to one, and the embedding comes from the bottom
/// non-constant eigenvectors of (I-W)^T (I-W). The whitened eigenvector
/// coordinates only fix geometry up to an affine map, so a per-axis scale is
/// fitted to the measured distances before the final mean rescaling.
inline Configuration lle(const MeasurementSet& measurements, int k,
                         double reg = 1e-3) {
    if (k < 2) throw std::invalid_argument("lle: k must be >= 2");
    if (!(reg > 0.0)) throw std::invalid_argument("lle: reg must be > 0");
    const NeighborGraph g = knn_graph(measurements, k);
    const Eigen::MatrixXd geo = geodesic_distances(g);
    const int n = measurements.n;

    Eigen::MatrixXd wmat = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        std::vector<int> nb;
        for (const auto& [j, _] : g.adjacency[i]) nb.push_back(j);
        std::sort(nb.begin(), nb.end());
        const int m = static_cast<int>(nb.size());
        Eigen::MatrixXd gram(m, m);
        for (int a = 0; a < m; ++a)
            for (int c = 0; c < m; ++c)
                gram(a, c) = 0.5 * (geo(i, nb[a]) * geo(i, nb[a]) +
                                    geo(i, nb[c]) * geo(i, nb[c]) -
                                    geo(nb[a], nb[c]) * geo(nb[a], nb[c]));
        const double trace = gram.trace();
        gram += Eigen::MatrixXd::Identity(m, m) *
                (trace > 0.0 ? reg * trace : reg);
        const Eigen::VectorXd weights =
            gram.ldlt().solve(Eigen::VectorXd::Ones(m));
        const double sum = weights.sum();
        if (!weights.allFinite() || sum == 0.0)
            throw std::runtime_error(
                "lle: singular local system at node " + std::to_string(i));
        for (int a = 0; a < m; ++a) wmat(i, nb[a]) = weights(a) / sum;
    }

    const Eigen::MatrixXd iw =
        Eigen::MatrixXd::Identity(n, n) - wmat;
    const Eigen::MatrixXd cost = iw.transpose() * iw;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cost);

    // pick the two bottom directions orthogonal to the constant vector;
    // sequential deflation keeps near-degenerate kernels from mixing in
    const Eigen::VectorXd ones =
        Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<Eigen::VectorXd> basis{ones};
    Eigen::MatrixXd coords = Eigen::MatrixXd::Zero(n, 2);
    int picked = 0;
    for (int t = 0; t < n && picked < 2; ++t) {
        Eigen::VectorXd v = eig.eigenvectors().col(t);
        for (const auto& u : basis) v -= u.dot(v) * u;
        const double norm = v.norm();
        if (norm > 1e-6) {
            v /= norm;
            basis.push_back(v);
            coords.col(picked++) = v;
        }
    }

    // per-axis scale fit: least squares of a*dx^2 + b*dy^2 against measured
    // d^2, clamped non-negative
    Eigen::Matrix2d ata = Eigen::Matrix2d::Zero();
    Eigen::Vector2d atb = Eigen::Vector2d::Zero();
    for (const auto& e : measurements.edges) {
        const double dx2 = std::pow(coords(e.i, 0) - coords(e.j, 0), 2);
        const double dy2 = std::pow(coords(e.i, 1) - coords(e.j, 1), 2);
        const Eigen::Vector2d row(dx2, dy2);
        ata += row * row.transpose();
        atb += row * (e.d * e.d);
    }
    ata += Eigen::Matrix2d::Identity() * (1e-12 * std::max(1.0, ata.trace()));
    Eigen::Vector2d axis_scale = ata.ldlt().solve(atb).cwiseMax(0.0);
    if (!axis_scale.allFinite()) axis_scale = Eigen::Vector2d::Ones();

    Configuration out;
    out.points.resize(n, 2);
    out.points.col(0) = coords.col(0) * std::sqrt(axis_scale(0));
    out.points.col(1) = coords.col(1) * std::sqrt(axis_scale(1));
    return rescale_to_mean(out, measurements);
}

}  // namespace netloc
