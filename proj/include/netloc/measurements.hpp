#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "netloc/pathloss.hpp"
#include "netloc/random.hpp"

namespace netloc {

/// Partial, possibly asymmetric matrix of received-power readings in dBm.
/// Entry (i, j) is the signal received at i, transmitted by j. Self entries
/// are never stored. compensation_db holds per-device attenuation known to
/// the pipeline (e.g. a detected pocket) to be added back before inversion.
class RssiMatrix {
public:
    RssiMatrix() = default;
    explicit RssiMatrix(int n)
        : n_(n), values_(static_cast<std::size_t>(n) * n, 0.0),
          present_(static_cast<std::size_t>(n) * n, 0),
          compensation_db_(n, 0.0) {
        if (n < 0) throw std::invalid_argument("RssiMatrix: negative size");
    }

    int size() const { return n_; }

    bool has(int i, int j) const { return present_[index(i, j)] != 0; }

    double at(int i, int j) const {
        const auto k = index(i, j);
        if (!present_[k]) throw std::out_of_range("RssiMatrix: missing entry");
        return values_[k];
    }

    void set(int i, int j, double rssi_dbm) {
        if (i == j) throw std::invalid_argument("RssiMatrix: self entries are not stored");
        if (!std::isfinite(rssi_dbm))
            throw std::invalid_argument("RssiMatrix: rssi must be finite");
        const auto k = index(i, j);
        values_[k] = rssi_dbm;
        present_[k] = 1;
    }

    void clear(int i, int j) { present_[index(i, j)] = 0; }

    int count_present() const {
        int c = 0;
        for (auto p : present_) c += p;
        return c;
    }

    double compensation(int device) const { return compensation_db_.at(device); }
    void set_compensation(int device, double db) { compensation_db_.at(device) = db; }

    bool has_compensation() const {
        for (double c : compensation_db_)
            if (c != 0.0) return true;
        return false;
    }

    /// Bakes the per-device compensation into the stored readings: each
    /// present entry (i, j) gains the sum of both endpoints' offsets, then
    /// the metadata is cleared.
    RssiMatrix apply_compensation() const {
        RssiMatrix out(n_);
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (i != j && has(i, j))
                    out.set(i, j, compensate_attenuation(
                                      at(i, j), compensation_db_[i] + compensation_db_[j]));
        return out;
    }

private:
    std::size_t index(int i, int j) const {
        if (i < 0 || j < 0 || i >= n_ || j >= n_)
            throw std::out_of_range("RssiMatrix: index out of range");
        return static_cast<std::size_t>(i) * n_ + j;
    }

    int n_ = 0;
    std::vector<double> values_;
    std::vector<char> present_;
    std::vector<double> compensation_db_;
};

/// One symmetrized per-pair distance estimate with its confidence interval.
struct Edge {
    int i = 0;
    int j = 0;
    double d = 0.0;
    double d_min = 0.0;
    double d_max = 0.0;
};

/// The set N of per-pair distance measurements, indexed i < j.
struct MeasurementSet {
    int n = 0;
    std::vector<Edge> edges;

    void validate() const {
        for (const auto& e : edges) {
            if (!(e.i >= 0 && e.i < e.j && e.j < n))
                throw std::invalid_argument("MeasurementSet: bad edge indices");
            if (!(e.d_min > 0.0 && e.d_min <= e.d && e.d <= e.d_max))
                throw std::invalid_argument("MeasurementSet: bound ordering violated");
        }
    }

    double mean_distance() const {
        if (edges.empty()) throw std::invalid_argument("MeasurementSet: empty");
        double s = 0.0;
        for (const auto& e : edges) s += e.d;
        return s / static_cast<double>(edges.size());
    }

    bool complete() const {
        return static_cast<long>(edges.size()) ==
               static_cast<long>(n) * (n - 1) / 2;
    }
};

/// Symmetric matrix of distance estimates with zero diagonal; the final
/// output form.
class DistanceEstimateMatrix {
public:
    DistanceEstimateMatrix() = default;
    explicit DistanceEstimateMatrix(int n)
        : d_(Eigen::MatrixXd::Zero(n, n)) {
        if (n < 0) throw std::invalid_argument("DistanceEstimateMatrix: negative size");
    }

    int size() const { return static_cast<int>(d_.rows()); }

    double operator()(int i, int j) const { return d_(i, j); }

    void set(int i, int j, double distance_m) {
        if (i == j) throw std::invalid_argument("diagonal is fixed at zero");
        if (!(distance_m >= 0.0) || !std::isfinite(distance_m))
            throw std::invalid_argument("distance must be >= 0 and finite");
        d_(i, j) = distance_m;
        d_(j, i) = distance_m;
    }

    const Eigen::MatrixXd& matrix() const { return d_; }

private:
    Eigen::MatrixXd d_;
};

/// Averages the dBm readings of each pair, then inverts once.
inline MeasurementSet symmetrize_pre(const RssiMatrix& rssi,
                                     const PathlossParams& params) {
    params.validate();
    MeasurementSet out;
    out.n = rssi.size();
    for (int i = 0; i < rssi.size(); ++i) {
        for (int j = i + 1; j < rssi.size(); ++j) {
            double sum = 0.0;
            int count = 0;
            if (rssi.has(i, j)) { sum += rssi.at(i, j); ++count; }
            if (rssi.has(j, i)) { sum += rssi.at(j, i); ++count; }
            if (count == 0) continue;
            const double mean_dbm = sum / count;
            Edge e;
            e.i = i;
            e.j = j;
            e.d = distance_from_rssi(mean_dbm, params);
            const auto b = distance_bounds(mean_dbm, params);
            e.d_min = b.d_min;
            e.d_max = b.d_max;
            out.edges.push_back(e);
        }
    }
    return out;
}

/// Inverts each reading to a distance first, then averages distances (and
/// bounds) per pair.
inline MeasurementSet symmetrize_post(const RssiMatrix& rssi,
                                      const PathlossParams& params) {
    params.validate();
    MeasurementSet out;
    out.n = rssi.size();
    for (int i = 0; i < rssi.size(); ++i) {
        for (int j = i + 1; j < rssi.size(); ++j) {
            double d = 0.0, lo = 0.0, hi = 0.0;
            int count = 0;
            for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
                if (!rssi.has(a, b)) continue;
                const double r = rssi.at(a, b);
                d += distance_from_rssi(r, params);
                const auto bounds = distance_bounds(r, params);
                lo += bounds.d_min;
                hi += bounds.d_max;
                ++count;
            }
            if (count == 0) continue;
            out.edges.push_back(
                {i, j, d / count, lo / count, hi / count});
        }
    }
    return out;
}

/// Fills every missing off-diagonal entry with the receiver noise floor;
/// observed entries are never overwritten.
inline RssiMatrix impute_noise_floor(const RssiMatrix& rssi, double floor_dbm) {
    if (!std::isfinite(floor_dbm))
        throw std::invalid_argument("impute_noise_floor: floor must be finite");
    RssiMatrix out = rssi;
    for (int i = 0; i < rssi.size(); ++i)
        for (int j = 0; j < rssi.size(); ++j)
            if (i != j && !rssi.has(i, j)) out.set(i, j, floor_dbm);
    return out;
}

/// Independently removes each present off-diagonal entry with probability
/// `rate`. Deterministic in the seed; entries are visited in row-major order.
inline RssiMatrix drop_random(const RssiMatrix& rssi, double rate,
                              std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0))
        throw std::invalid_argument("drop_random: rate must be in [0, 1]");
    RssiMatrix out = rssi;
    Rng rng(seed);
    for (int i = 0; i < rssi.size(); ++i)
        for (int j = 0; j < rssi.size(); ++j)
            if (i != j && rssi.has(i, j) && rng.uniform() < rate)
                out.clear(i, j);
    return out;
}

}  // namespace netloc
