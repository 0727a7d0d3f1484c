#pragma once

#include <stdexcept>

#include "netloc/measurements.hpp"
#include "netloc/pathloss.hpp"

namespace netloc {

/// How the two directional readings of a pair are merged.
enum class DirectVariant {
    raw,           ///< invert each direction, average the two distances
    pre_averaged,  ///< average dBm first, invert once
    post_averaged, ///< invert each direction first, average distances
};

/// Baseline estimator: missing entries are imputed at the noise floor, then
/// every reading goes straight through the pathloss inverse.
inline DistanceEstimateMatrix estimate_direct(const RssiMatrix& rssi,
                                              const PathlossParams& params,
                                              DirectVariant variant,
                                              double floor_dbm = -95.0) {
    params.validate();
    const RssiMatrix full = impute_noise_floor(rssi, floor_dbm);
    DistanceEstimateMatrix out(rssi.size());
    for (int i = 0; i < rssi.size(); ++i) {
        for (int j = i + 1; j < rssi.size(); ++j) {
            double d = 0.0;
            switch (variant) {
                case DirectVariant::pre_averaged:
                    d = distance_from_rssi(
                        0.5 * (full.at(i, j) + full.at(j, i)), params);
                    break;
                case DirectVariant::raw:
                case DirectVariant::post_averaged:
                    // With a complete matrix the raw per-pair mean and the
                    // post-averaged estimate coincide.
                    d = 0.5 * (distance_from_rssi(full.at(i, j), params) +
                               distance_from_rssi(full.at(j, i), params));
                    break;
            }
            out.set(i, j, d);
        }
    }
    return out;
}

}  // namespace netloc
