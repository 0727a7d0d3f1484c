#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "netloc/measurements.hpp"
#include "netloc/pathloss.hpp"
#include "netloc/random.hpp"

namespace netloc {

/// Observed RSSI samples grouped by the exact distance they were measured
/// at; the synthetic backend draws from (and interpolates between) bins.
struct EmpiricalRssiDataset {
    std::map<double, std::vector<double>> bins;

    void validate() const {
        if (bins.size() < 2)
            throw std::invalid_argument("empirical dataset: need at least 2 distance bins");
        for (const auto& [d, samples] : bins) {
            if (!(d > 0.0))
                throw std::invalid_argument("empirical dataset: distances must be > 0");
            if (samples.empty())
                throw std::invalid_argument("empirical dataset: empty bin");
        }
    }
};

struct DeviceContext {
    bool pocket = false;
    double attenuation_db = 0.0;
    bool detected = false;

    static DeviceContext open_air() { return {}; }
    static DeviceContext in_pocket(double attenuation_db, bool detected) {
        return {true, attenuation_db, detected};
    }
};

struct ScenarioSpec {
    std::string name = "custom";
    int n_devices = 0;
    double area_w_m = 0.0;
    double area_h_m = 0.0;
    PathlossParams params;             ///< parametric backend
    EmpiricalRssiDataset empirical;    ///< used when use_empirical
    bool use_empirical = false;
    double miss_rate = 0.1;
    double max_range_m = 4.0;
    double min_sample_distance_m = 0.5;
    std::vector<DeviceContext> context;  ///< empty = all open air
    std::uint64_t seed = 0;
    /// Optional fixed geometry (row per device); empty = uniform random over
    /// the area. The replayed common scenarios use fixed seats.
    std::vector<std::pair<double, double>> fixed_positions;

    void validate() const {
        if (n_devices < 2)
            throw std::invalid_argument("scenario: need at least 2 devices");
        if (!(miss_rate >= 0.0 && miss_rate <= 1.0))
            throw std::invalid_argument("scenario: miss_rate must be in [0, 1]");
        if (!(min_sample_distance_m > 0.0))
            throw std::invalid_argument("scenario: min_sample_distance must be > 0");
        if (!(max_range_m > min_sample_distance_m))
            throw std::invalid_argument("scenario: max_range must exceed min_sample_distance");
        if (fixed_positions.empty() && !(area_w_m > 0.0 && area_h_m > 0.0))
            throw std::invalid_argument("scenario: area must be positive");
        if (!context.empty() && static_cast<int>(context.size()) != n_devices)
            throw std::invalid_argument("scenario: context must cover every device");
        if (!fixed_positions.empty() &&
            static_cast<int>(fixed_positions.size()) != n_devices)
            throw std::invalid_argument("scenario: fixed_positions must cover every device");
        if (use_empirical) empirical.validate();
        else params.validate();
    }

    DeviceContext device_context(int i) const {
        return context.empty() ? DeviceContext::open_air() : context.at(i);
    }
};

struct GroundTruth {
    Eigen::Matrix<double, Eigen::Dynamic, 2> positions;
    Eigen::MatrixXd distances;

    int size() const { return static_cast<int>(positions.rows()); }
};

/// Device positions: i.i.d. uniform over the rectangle, or the spec's fixed
/// geometry when one is given. Deterministic per seed.
inline GroundTruth generate_positions(const ScenarioSpec& spec) {
    spec.validate();
    GroundTruth truth;
    truth.positions.resize(spec.n_devices, 2);
    if (!spec.fixed_positions.empty()) {
        for (int i = 0; i < spec.n_devices; ++i) {
            truth.positions(i, 0) = spec.fixed_positions[i].first;
            truth.positions(i, 1) = spec.fixed_positions[i].second;
        }
    } else {
        Rng rng(Rng::mix(spec.seed, 0x706f73));
        for (int i = 0; i < spec.n_devices; ++i) {
            truth.positions(i, 0) = rng.uniform(0.0, spec.area_w_m);
            truth.positions(i, 1) = rng.uniform(0.0, spec.area_h_m);
        }
    }
    truth.distances.resize(spec.n_devices, spec.n_devices);
    for (int i = 0; i < spec.n_devices; ++i)
        for (int j = 0; j < spec.n_devices; ++j)
            truth.distances(i, j) =
                (truth.positions.row(i) - truth.positions.row(j)).norm();
    return truth;
}

namespace detail {

/// One empirical draw at distance d: exact-bin sampling, linear
/// interpolation between bracketing bins, and clamping at both ends.
inline double empirical_rssi(const EmpiricalRssiDataset& data, double d, Rng& rng) {
    auto pick = [&](const std::vector<double>& samples) {
        const auto k = static_cast<std::size_t>(rng.uniform() *
                                                static_cast<double>(samples.size()));
        return samples[std::min(k, samples.size() - 1)];
    };
    const auto& bins = data.bins;
    auto it = bins.lower_bound(d);
    if (it != bins.end() && it->first == d) return pick(it->second);
    if (it == bins.begin()) return pick(it->second);          // below first bin
    if (it == bins.end()) return pick(std::prev(it)->second); // beyond last bin
    const auto hi = it;
    const auto lo = std::prev(it);
    const double r_lo = pick(lo->second);
    const double r_hi = pick(hi->second);
    const double t = (d - lo->first) / (hi->first - lo->first);
    return r_lo + t * (r_hi - r_lo);
}

}  // namespace detail

/// Ordered-pair RSSI synthesis: each direction drawn independently, context
/// attenuation subtracted per endpoint, pairs beyond max_range missing, and
/// each generated entry missed with miss_rate. Detected pocket attenuations
/// are recorded in the matrix compensation metadata.
inline RssiMatrix synthesize_rssi(const GroundTruth& truth,
                                  const ScenarioSpec& spec) {
    spec.validate();
    if (truth.size() != spec.n_devices)
        throw std::invalid_argument("synthesize_rssi: truth size mismatch");
    RssiMatrix out(spec.n_devices);
    Rng rng(Rng::mix(spec.seed, 0x727373));
    for (int i = 0; i < spec.n_devices; ++i) {
        for (int j = 0; j < spec.n_devices; ++j) {
            if (i == j) continue;
            const double d = truth.distances(i, j);
            if (d > spec.max_range_m) continue;
            double rssi;
            if (spec.use_empirical) {
                rssi = detail::empirical_rssi(spec.empirical, d, rng);
            } else {
                const double clamped = std::max(d, 1e-9);
                rssi = rssi_from_distance(clamped, spec.params) +
                       rng.normal(0.0, spec.params.sigma_db);
            }
            rssi -= spec.device_context(i).attenuation_db;
            rssi -= spec.device_context(j).attenuation_db;
            const bool missed = rng.uniform() < spec.miss_rate;
            if (!missed) out.set(i, j, rssi);
        }
    }
    for (int i = 0; i < spec.n_devices; ++i) {
        const auto ctx = spec.device_context(i);
        if (ctx.pocket && ctx.detected) out.set_compensation(i, ctx.attenuation_db);
    }
    return out;
}

/// Built-in scenario presets. table/pocket/train/grocery replay the common
/// contact-logging scenes on fixed seats; dense/sparse/large are the random
/// field studies; mixed is the varying-context field with every second
/// device pocketed.
inline ScenarioSpec scenario_preset(const std::string& name,
                                    std::uint64_t seed = 0) {
    ScenarioSpec spec;
    spec.name = name;
    spec.seed = seed;
    auto field = [&](int n, double w, double h) {
        spec.n_devices = n;
        spec.area_w_m = w;
        spec.area_h_m = h;
        spec.params = outdoor_params();
        spec.miss_rate = 0.1;
        // out-of-range where the mean signal falls to the noise floor
        spec.max_range_m = distance_from_rssi(-95.0, spec.params);
    };
    auto table_layout = [&](const PathlossParams& params) {
        spec.n_devices = 4;
        spec.area_w_m = 1.5;
        spec.area_h_m = 1.5;
        spec.params = params;
        spec.miss_rate = 0.0;
        spec.max_range_m = 4.0;
        spec.fixed_positions = {{0.15, 0.15}, {1.35, 0.15}, {1.35, 1.35}, {0.15, 1.35}};
    };
    if (name == "table") {
        table_layout(indoor_params());
    } else if (name == "pocket" || name == "pocket-detected") {
        table_layout(indoor_params());
        spec.context.assign(4, DeviceContext::in_pocket(20.0, name == "pocket-detected"));
    } else if (name == "train") {
        spec.n_devices = 4;
        spec.area_w_m = 1.8;
        spec.area_h_m = 3.0;
        spec.params = train_params();
        spec.miss_rate = 0.0;
        spec.max_range_m = 4.0;
        spec.fixed_positions = {{0.5, 0.5}, {1.3, 0.5}, {0.5, 2.5}, {1.3, 2.5}};
    } else if (name == "grocery") {
        spec.n_devices = 4;
        spec.area_w_m = 6.4;
        spec.area_h_m = 1.0;
        spec.params = outdoor_params();
        spec.miss_rate = 0.0;
        spec.max_range_m = 4.0;
        spec.fixed_positions = {{0.5, 0.5}, {2.3, 0.5}, {4.1, 0.5}, {5.9, 0.5}};
    } else if (name == "dense") {
        field(50, 10.0, 10.0);
    } else if (name == "sparse") {
        field(50, 20.0, 20.0);
    } else if (name == "large") {
        field(100, 20.0, 20.0);
    } else if (name == "mixed") {
        field(50, 10.0, 10.0);
        spec.context.resize(50);
        for (int i = 0; i < 50; ++i)
            spec.context[i] = i % 2 == 1 ? DeviceContext::in_pocket(20.0, false)
                                         : DeviceContext::open_air();
    } else {
        throw std::invalid_argument(
            "unknown scenario preset '" + name +
            "' (valid: table, pocket, pocket-detected, train, grocery, dense, "
            "sparse, large, mixed)");
    }
    spec.validate();
    return spec;
}

}  // namespace netloc
