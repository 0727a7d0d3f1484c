#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace netloc {

/// Log-distance pathloss model with log-normal shadowing:
///   rssi(d) = p0 - 10 * eta * log10(d / d0) + N(0, sigma^2)
struct PathlossParams {
    double p0_dbm = -62.919;  ///< mean received power at the reference distance
    double d0_m = 1.0;        ///< reference distance, meters
    double eta = 2.316;       ///< pathloss exponent
    double sigma_db = 3.441;  ///< shadowing standard deviation, dB

    void validate() const {
        if (!(d0_m > 0.0) || !std::isfinite(d0_m))
            throw std::invalid_argument("pathloss: d0_m must be > 0");
        if (!(eta > 0.0) || !std::isfinite(eta))
            throw std::invalid_argument("pathloss: eta must be > 0");
        if (!(sigma_db >= 0.0) || !std::isfinite(sigma_db))
            throw std::invalid_argument("pathloss: sigma_db must be >= 0");
        if (!std::isfinite(p0_dbm))
            throw std::invalid_argument("pathloss: p0_dbm must be finite");
    }
};

/// Table 2 parameter sets keyed by environment name.
inline PathlossParams indoor_params()  { return {-62.919, 1.0, 2.316, 3.441}; }
inline PathlossParams train_params()   { return {-60.452, 1.0, 1.364, 5.054}; }
inline PathlossParams outdoor_params() { return {-75.014, 1.0, 1.7919, 6.448}; }

inline PathlossParams named_params(const std::string& name) {
    if (name == "indoors") return indoor_params();
    if (name == "train") return train_params();
    if (name == "outdoors") return outdoor_params();
    throw std::invalid_argument("unknown pathloss parameter set '" + name +
                                "' (expected indoors, train or outdoors)");
}

inline double distance_from_rssi(double rssi_dbm, const PathlossParams& p) {
    p.validate();
    if (!std::isfinite(rssi_dbm))
        throw std::invalid_argument("distance_from_rssi: rssi must be finite");
    return p.d0_m * std::pow(10.0, -(rssi_dbm - p.p0_dbm) / (10.0 * p.eta));
}

inline double rssi_from_distance(double distance_m, const PathlossParams& p) {
    p.validate();
    if (!(distance_m > 0.0) || !std::isfinite(distance_m))
        throw std::invalid_argument("rssi_from_distance: distance must be > 0");
    return p.p0_dbm - 10.0 * p.eta * std::log10(distance_m / p.d0_m);
}

struct DistanceBounds {
    double d_min = 0.0;
    double d_max = 0.0;
};

/// 2-sigma confidence interval on the inverted distance (95.45%).
inline DistanceBounds distance_bounds(double rssi_dbm, const PathlossParams& p) {
    DistanceBounds b;
    b.d_min = distance_from_rssi(rssi_dbm + 2.0 * p.sigma_db, p);
    b.d_max = distance_from_rssi(rssi_dbm - 2.0 * p.sigma_db, p);
    return b;
}

/// Adds a known attenuation (e.g. a detected pocket) back onto a reading
/// before inversion.
inline double compensate_attenuation(double rssi_dbm, double offset_db) {
    if (!std::isfinite(rssi_dbm) || !std::isfinite(offset_db))
        throw std::invalid_argument("compensate_attenuation: inputs must be finite");
    return rssi_dbm + offset_db;
}

/// Least-squares fit of (p0, eta, sigma) from (distance, rssi) samples.
/// d0 is fixed at 1 m, so the regression is rssi on log10(d): the slope is
/// -10*eta and the intercept is p0. sigma is the residual standard deviation
/// with N-2 degrees of freedom (0 when N == 2).
inline PathlossParams fit_pathloss(
    const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 2)
        throw std::invalid_argument("fit_pathloss: need at least 2 samples");
    const std::size_t n = samples.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    double first_x = 0.0;
    bool distinct = false;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& [d, rssi] = samples[k];
        if (!(d > 0.0) || !std::isfinite(d) || !std::isfinite(rssi))
            throw std::invalid_argument("fit_pathloss: distances must be > 0 and finite");
        const double x = std::log10(d);
        if (k == 0) first_x = x;
        else if (x != first_x) distinct = true;
        sx += x;
        sy += rssi;
        sxx += x * x;
        sxy += x * rssi;
    }
    if (!distinct)
        throw std::invalid_argument("fit_pathloss: need at least 2 distinct distances");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / static_cast<double>(n);

    double ssr = 0.0;
    for (const auto& [d, rssi] : samples) {
        const double r = rssi - (intercept + slope * std::log10(d));
        ssr += r * r;
    }
    PathlossParams p;
    p.p0_dbm = intercept;
    p.d0_m = 1.0;
    p.eta = -slope / 10.0;
    p.sigma_db = n > 2 ? std::sqrt(ssr / static_cast<double>(n - 2)) : 0.0;
    p.validate();
    return p;
}

/// Per-device-model additive corrections to p0, in dB. Models absent from
/// the table map to offset 0.
class CalibrationTable {
public:
    CalibrationTable() = default;

    void set(const std::string& model, double offset_db) {
        if (!std::isfinite(offset_db))
            throw std::invalid_argument("calibration: offset must be finite");
        offsets_[model] = offset_db;
    }

    double offset(const std::string& model) const {
        auto it = offsets_.find(model);
        return it == offsets_.end() ? 0.0 : it->second;
    }

    /// Offset applied to a link between two device models: the mean of the
    /// endpoint offsets.
    double pair_offset(const std::string& model_a, const std::string& model_b) const {
        return 0.5 * (offset(model_a) + offset(model_b));
    }

    /// Params with p0 shifted for a specific device pair.
    PathlossParams adjust(const PathlossParams& p, const std::string& model_a,
                          const std::string& model_b) const {
        PathlossParams out = p;
        out.p0_dbm += pair_offset(model_a, model_b);
        return out;
    }

    std::size_t size() const { return offsets_.size(); }
    const std::map<std::string, double>& entries() const { return offsets_; }

private:
    std::map<std::string, double> offsets_;
};

}  // namespace netloc
