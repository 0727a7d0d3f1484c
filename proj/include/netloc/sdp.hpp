#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "netloc/mds.hpp"
#include "netloc/measurements.hpp"
#include "netloc/random.hpp"
#include "netloc/spring.hpp"

namespace netloc {

/// Nearest (Frobenius) positive-semidefinite matrix: eigendecompose and
/// clamp negative eigenvalues.
inline Eigen::MatrixXd project_psd(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols())
        throw std::invalid_argument("project_psd: matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::invalid_argument("project_psd: matrix must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    const Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * clamped.asDiagonal() *
           eig.eigenvectors().transpose();
}

/// A distance measurement to a point with a priori known position.
struct AnchorEdge {
    int node = 0;
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    double d = 0.0;
    double sigma = 1.0;
};

/// Weighted MLE localization instance. Node-node edges come from the
/// measurement set; sigma per edge is half the pathloss uncertainty width,
/// so the SDP and the spring model share one uncertainty source.
struct SdpProblem {
    int n = 0;
    std::vector<Edge> edges;
    std::vector<double> weights;  ///< 1/sigma^2 per edge
    std::vector<AnchorEdge> anchors;
    bool pin_gauge = true;  ///< pin node 0 at the origin when no anchors exist

    static SdpProblem from_measurements(const MeasurementSet& ms,
                                        std::vector<AnchorEdge> anchor_edges = {}) {
        ms.validate();
        SdpProblem p;
        p.n = ms.n;
        p.edges = ms.edges;
        p.weights.reserve(ms.edges.size());
        for (const auto& e : ms.edges) {
            const double sigma = 0.5 * (e.d_max - e.d_min);
            if (!(sigma > 0.0))
                throw std::invalid_argument("sdp: edge uncertainty width must be > 0");
            p.weights.push_back(1.0 / (sigma * sigma));
        }
        p.anchors = std::move(anchor_edges);
        return p;
    }

    void validate() const {
        if (n < 2) throw std::invalid_argument("sdp: need at least 2 nodes");
        if (edges.empty())
            throw std::invalid_argument("sdp: no node-node edges; problem unconstrained");
        if (weights.size() != edges.size())
            throw std::invalid_argument("sdp: one weight per edge required");
        for (double w : weights)
            if (!(w > 0.0) || !std::isfinite(w))
                throw std::invalid_argument("sdp: weights must be positive and finite");
        std::vector<char> seen(n, 0);
        for (const auto& a : anchors) {
            if (a.node < 0 || a.node >= n)
                throw std::invalid_argument("sdp: anchor node out of range");
            if (seen[a.node])
                throw std::invalid_argument("sdp: anchor node indices must be distinct");
            seen[a.node] = 1;
            if (!(a.sigma > 0.0))
                throw std::invalid_argument("sdp: anchor sigma must be > 0");
        }
        // all nodes must hang together: node-node edges, plus anchors acting
        // as a shared ground
        std::vector<int> parent(n + 1);
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int a) {
            while (parent[a] != a) a = parent[a] = parent[parent[a]];
            return a;
        };
        auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
        for (const auto& e : edges) unite(e.i, e.j);
        for (const auto& a : anchors) unite(a.node, n);
        const int root = find(0);
        for (int i = 1; i < n; ++i)
            if (find(i) != root)
                throw std::invalid_argument(
                    "sdp: node " + std::to_string(i) +
                    " is not reachable from the main measurement component");
    }
};

struct SdpSolution {
    Configuration config;
    Eigen::MatrixXd gram;   ///< (n+2)x(n+2) relaxation matrix, PSD within tol
    double residual = 0.0;  ///< combined primal+dual residual at return
    int iterations = 0;
    bool converged = false;
};

/// Solves the semidefinite relaxation
///   Z = [[I2, X], [X^T, Y]] >= 0,   Y_ii + Y_jj - 2 Y_ij ~ d_ij^2
/// (plus |a|^2 - 2 a^T x_i + Y_ii ~ d^2 for anchor edges) under the weighted
/// L1 penalties of the MLE objective, by ADMM: an affine least-squares step
/// alternated with soft-thresholding on the residual slacks and projection
/// onto the PSD cone, with dual updates and residual-balanced penalty.
///
/// Without anchors the relaxation determines only the Gram block, so the
/// configuration is read from the top-2 eigenpairs of Y; with anchors the
/// X block is tied to coordinates and is read directly.
inline SdpSolution solve_sdp(const SdpProblem& problem, int max_iter = 5000,
                             double tol = 1e-6, std::uint64_t seed = 0) {
    problem.validate();
    if (max_iter < 1) throw std::invalid_argument("sdp: max_iter must be >= 1");
    if (!(tol > 0.0)) throw std::invalid_argument("sdp: tol must be > 0");
    const int n = problem.n;
    const int m = n + 2;
    const bool pin = problem.anchors.empty() && problem.pin_gauge;

    // upper-triangle variable layout with fixed entries removed
    Eigen::MatrixXi var_of = Eigen::MatrixXi::Constant(m, m, -1);
    Eigen::MatrixXd fixed_value = Eigen::MatrixXd::Zero(m, m);
    Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> is_fixed(m, m);
    is_fixed.setZero();
    auto fix = [&](int r, int c, double v) {
        is_fixed(r, c) = is_fixed(c, r) = 1;
        fixed_value(r, c) = fixed_value(c, r) = v;
    };
    fix(0, 0, 1.0);
    fix(1, 1, 1.0);
    fix(0, 1, 0.0);
    if (pin) {
        fix(0, 2, 0.0);
        fix(1, 2, 0.0);
        for (int j = 0; j < n; ++j) fix(2, 2 + j, 0.0);
    }
    std::vector<std::pair<int, int>> free_entries;
    for (int r = 0; r < m; ++r)
        for (int c = r; c < m; ++c)
            if (!is_fixed(r, c)) {
                var_of(r, c) = var_of(c, r) = static_cast<int>(free_entries.size());
                free_entries.emplace_back(r, c);
            }
    const int nvar = static_cast<int>(free_entries.size());
    Eigen::VectorXd mult(nvar);
    for (int k = 0; k < nvar; ++k)
        mult(k) = free_entries[k].first == free_entries[k].second ? 1.0 : 2.0;

    // edge functionals as sparse rows over the free entries
    struct Term { int var; double coef; };
    const int ne = static_cast<int>(problem.edges.size());
    const int na = static_cast<int>(problem.anchors.size());
    const int nrow = ne + na;
    std::vector<std::vector<Term>> rows(nrow);
    Eigen::VectorXd offset = Eigen::VectorXd::Zero(nrow);  // fixed-entry part
    Eigen::VectorXd b(nrow);
    Eigen::VectorXd w(nrow);
    auto add_term = [&](int row, int r, int c, double coef) {
        const int v = var_of(r, c);
        if (v >= 0)
            rows[row].push_back({v, coef});
        else
            offset(row) += coef * fixed_value(r, c);
    };
    for (int k = 0; k < ne; ++k) {
        const auto& e = problem.edges[k];
        b(k) = e.d * e.d;
        w(k) = problem.weights[k];
        add_term(k, 2 + e.i, 2 + e.i, 1.0);
        add_term(k, 2 + e.j, 2 + e.j, 1.0);
        add_term(k, 2 + e.i, 2 + e.j, -2.0);
    }
    for (int k = 0; k < na; ++k) {
        const auto& a = problem.anchors[k];
        const int row = ne + k;
        b(row) = a.d * a.d - a.position.squaredNorm();
        w(row) = 1.0 / (a.sigma * a.sigma);
        add_term(row, 0, 2 + a.node, -2.0 * a.position.x());
        add_term(row, 1, 2 + a.node, -2.0 * a.position.y());
        add_term(row, 2 + a.node, 2 + a.node, 1.0);
    }
    w /= w.mean();  // common weight scaling must not change the solution

    // normal matrix A^T A + diag(mult), factored once
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& row : rows)
        for (const auto& t1 : row)
            for (const auto& t2 : row)
                trips.emplace_back(t1.var, t2.var, t1.coef * t2.coef);
    for (int k = 0; k < nvar; ++k) trips.emplace_back(k, k, mult(k));
    Eigen::SparseMatrix<double> normal(nvar, nvar);
    normal.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(normal);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("sdp: normal matrix factorization failed");

    auto apply_a = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd v = offset;
        for (int row = 0; row < nrow; ++row)
            for (const auto& t : rows[row]) v(row) += t.coef * z(t.var);
        return v;
    };
    auto apply_at = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(nvar);
        for (int row = 0; row < nrow; ++row)
            for (const auto& t : rows[row]) out(t.var) += t.coef * v(row);
        return out;
    };
    auto to_matrix = [&](const Eigen::VectorXd& z) {
        Eigen::MatrixXd zm = fixed_value;
        for (int k = 0; k < nvar; ++k) {
            const auto [r, c] = free_entries[k];
            zm(r, c) = zm(c, r) = z(k);
        }
        return zm;
    };
    auto from_matrix = [&](const Eigen::MatrixXd& mat) {
        Eigen::VectorXd z(nvar);
        for (int k = 0; k < nvar; ++k)
            z(k) = mat(free_entries[k].first, free_entries[k].second);
        return z;
    };

    const double scale = b.cwiseAbs().mean();
    Rng rng(seed);
    Eigen::MatrixXd s_mat = Eigen::MatrixXd::Zero(m, m);
    s_mat(0, 0) = s_mat(1, 1) = 1.0;
    for (int i = 0; i < n; ++i)
        s_mat(2 + i, 2 + i) = scale * (1.0 + 1e-9 * rng.uniform());
    if (pin) s_mat(2, 2) = 0.0;
    Eigen::MatrixXd u_mat = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd r_slack = Eigen::VectorXd::Zero(nrow);
    Eigen::VectorXd y_dual = Eigen::VectorXd::Zero(nrow);
    Eigen::MatrixXd z_mat = s_mat;

    double rho = 1.0;
    const double over_relax = 1.6;
    const double bnorm = std::max(1.0, b.norm());
    double residual = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::VectorXd target = from_matrix(s_mat - u_mat);
        const Eigen::VectorXd rhs =
            apply_at(b + r_slack - y_dual - offset) + mult.cwiseProduct(target);
        const Eigen::VectorXd z = solver.solve(rhs);
        const Eigen::VectorXd v = apply_a(z);
        z_mat = to_matrix(z);

        const Eigen::VectorXd vh = over_relax * v + (1.0 - over_relax) * (r_slack + b);
        const Eigen::MatrixXd zh = over_relax * z_mat + (1.0 - over_relax) * s_mat;

        const Eigen::VectorXd r_prev = r_slack;
        const Eigen::MatrixXd s_prev = s_mat;
        const Eigen::VectorXd arg = vh - b + y_dual;
        for (int k = 0; k < nrow; ++k) {
            const double thr = w(k) / rho;
            r_slack(k) = std::copysign(std::max(std::abs(arg(k)) - thr, 0.0), arg(k));
        }
        s_mat = project_psd(zh + u_mat);
        y_dual += vh - b - r_slack;
        u_mat += zh - s_mat;

        const double prim =
            ((v - b - r_slack).norm() + (z_mat - s_mat).norm()) / bnorm;
        const double dual =
            rho * ((r_slack - r_prev).norm() + (s_mat - s_prev).norm()) / bnorm;
        residual = prim + dual;
        iterations = iter + 1;
        if (residual < tol) {
            converged = true;
            break;
        }
        if ((iter + 1) % 50 == 0) {
            if (prim > 10.0 * dual) {
                rho *= 2.0;
                y_dual /= 2.0;
                u_mat /= 2.0;
            } else if (dual > 10.0 * prim) {
                rho /= 2.0;
                y_dual *= 2.0;
                u_mat *= 2.0;
            }
        }
    }

    SdpSolution out;
    out.gram = s_mat;
    out.residual = residual;
    out.iterations = iterations;
    out.converged = converged;
    out.config.points.resize(n, 2);
    if (problem.anchors.empty()) {
        // anchor-free: geometry lives in the Gram block
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
            s_mat.bottomRightCorner(n, n));
        for (int c = 0; c < 2; ++c) {
            const int k = n - 1 - c;
            const double lambda = std::max(eig.eigenvalues()(k), 0.0);
            out.config.points.col(c) = eig.eigenvectors().col(k) * std::sqrt(lambda);
        }
        if (pin) {
            const Eigen::RowVector2d origin = out.config.points.row(0);
            out.config.points.rowwise() -= origin;
        }
    } else {
        out.config.points = z_mat.block(0, 2, 2, n).transpose();
    }
    return out;
}

/// Polishes a relaxed solution with a single warm-started spring run. The
/// refined configuration is returned only if it does not worsen the stress.
inline Configuration refine_with_spring(const SdpSolution& solution,
                                        const MeasurementSet& measurements,
                                        const SpringOptions& options) {
    if (!solution.config.points.allFinite())
        throw std::invalid_argument("refine_with_spring: non-finite SDP solution");
    SpringOptions opts = options;
    opts.n_init = 1;
    const Configuration refined =
        spring_localize(measurements, opts, solution.config);
    const double before = compute_stress(solution.config, measurements);
    const double after = compute_stress(refined, measurements);
    return after <= before ? refined : solution.config;
}

}  // namespace netloc
