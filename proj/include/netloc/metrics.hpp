#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "netloc/measurements.hpp"

namespace netloc {

struct PairError {
    int i = 0;
    int j = 0;
    double true_m = 0.0;
    double estimate_m = 0.0;
    double abs_m = 0.0;
    double pct = 0.0;  ///< percent units: 100 * |err| / true
};

struct ErrorStats {
    double mean_abs_m = 0.0;
    double max_abs_m = 0.0;
    double mean_pct = 0.0;
    double max_pct = 0.0;
    std::vector<PairError> samples;
};

/// Per-pair absolute and percent errors over the upper triangle.
inline ErrorStats error_stats(const Eigen::MatrixXd& truth,
                              const DistanceEstimateMatrix& estimate) {
    const int n = estimate.size();
    if (truth.rows() != n || truth.cols() != n)
        throw std::invalid_argument("error_stats: dimension mismatch");
    ErrorStats out;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = truth(i, j);
            if (!(d > 0.0))
                throw std::invalid_argument(
                    "error_stats: zero off-diagonal true distance; percent error undefined");
            PairError pe;
            pe.i = i;
            pe.j = j;
            pe.true_m = d;
            pe.estimate_m = estimate(i, j);
            pe.abs_m = std::abs(pe.estimate_m - d);
            pe.pct = 100.0 * pe.abs_m / d;
            out.mean_abs_m += pe.abs_m;
            out.mean_pct += pe.pct;
            out.max_abs_m = std::max(out.max_abs_m, pe.abs_m);
            out.max_pct = std::max(out.max_pct, pe.pct);
            out.samples.push_back(pe);
        }
    }
    if (out.samples.empty())
        throw std::invalid_argument("error_stats: no pairs");
    out.mean_abs_m /= static_cast<double>(out.samples.size());
    out.mean_pct /= static_cast<double>(out.samples.size());
    return out;
}

struct ConfusionRates {
    std::optional<double> tpr;  ///< absent when there are no true positives
    std::optional<double> fpr;  ///< absent when there are no true negatives
    int tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Proximity classification at a distance threshold (default 2 m): a pair is
/// positive when its true distance is within the threshold.
inline ConfusionRates proximity_confusion(const Eigen::MatrixXd& truth,
                                          const DistanceEstimateMatrix& estimate,
                                          double threshold_m = 2.0) {
    if (!(threshold_m > 0.0))
        throw std::invalid_argument("proximity_confusion: threshold must be > 0");
    const int n = estimate.size();
    if (truth.rows() != n || truth.cols() != n)
        throw std::invalid_argument("proximity_confusion: dimension mismatch");
    ConfusionRates out;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const bool actual = truth(i, j) <= threshold_m;
            const bool predicted = estimate(i, j) <= threshold_m;
            if (actual && predicted) ++out.tp;
            else if (actual && !predicted) ++out.fn;
            else if (!actual && predicted) ++out.fp;
            else ++out.tn;
        }
    }
    if (out.tp + out.fn > 0)
        out.tpr = static_cast<double>(out.tp) / (out.tp + out.fn);
    if (out.fp + out.tn > 0)
        out.fpr = static_cast<double>(out.fp) / (out.fp + out.tn);
    return out;
}

struct DensityReport {
    bool point_mass = false;
    double point = 0.0;           ///< the common value in the degenerate case
    std::vector<double> grid;
    std::vector<double> pdf;
    std::vector<double> cdf;      ///< cumulative trapezoid of the pdf
};

/// Gaussian kernel density estimate on a uniform grid. The bandwidth
/// defaults to Scott's rule; all-identical samples degrade to a point-mass
/// report.
inline DensityReport error_density(const std::vector<double>& samples,
                                   std::optional<double> bandwidth = std::nullopt,
                                   int grid_points = 256) {
    if (samples.size() < 2)
        throw std::invalid_argument("error_density: need at least 2 samples");
    if (grid_points < 2)
        throw std::invalid_argument("error_density: need at least 2 grid points");
    const double lo_sample = *std::min_element(samples.begin(), samples.end());
    const double hi_sample = *std::max_element(samples.begin(), samples.end());

    DensityReport out;
    if (lo_sample == hi_sample) {
        out.point_mass = true;
        out.point = lo_sample;
        return out;
    }

    double bw;
    if (bandwidth) {
        bw = *bandwidth;
        if (!(bw > 0.0))
            throw std::invalid_argument("error_density: bandwidth must be > 0");
    } else {
        double mean = 0.0;
        for (double s : samples) mean += s;
        mean /= static_cast<double>(samples.size());
        double var = 0.0;
        for (double s : samples) var += (s - mean) * (s - mean);
        var /= static_cast<double>(samples.size() - 1);
        bw = std::sqrt(var) *
             std::pow(static_cast<double>(samples.size()), -0.2);  // Scott
    }

    const double lo = std::min(0.0, 1.1 * lo_sample);
    const double hi = 1.1 * hi_sample;
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    out.grid.resize(grid_points);
    out.pdf.resize(grid_points);
    const double norm =
        1.0 / (static_cast<double>(samples.size()) * bw * std::sqrt(2.0 * std::numbers::pi));
    for (int g = 0; g < grid_points; ++g) {
        const double x = lo + g * step;
        out.grid[g] = x;
        double density = 0.0;
        for (double s : samples) {
            const double u = (x - s) / bw;
            density += std::exp(-0.5 * u * u);
        }
        out.pdf[g] = density * norm;
    }
    out.cdf.resize(grid_points);
    out.cdf[0] = 0.0;
    for (int g = 1; g < grid_points; ++g)
        out.cdf[g] = out.cdf[g - 1] + 0.5 * (out.pdf[g] + out.pdf[g - 1]) * step;
    return out;
}

/// Wall-clock accumulator for per-estimator runtime capture.
class RuntimeAccumulator {
public:
    void add(double seconds) {
        if (seconds < 0.0) throw std::invalid_argument("runtime must be >= 0");
        total_ += seconds;
        ++calls_;
    }

    template <typename Fn>
    auto time(Fn&& fn) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(fn())>) {
            fn();
            add(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        } else {
            auto result = fn();
            add(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
            return result;
        }
    }

    double total_seconds() const { return total_; }
    int calls() const { return calls_; }

private:
    double total_ = 0.0;
    int calls_ = 0;
};

}  // namespace netloc
