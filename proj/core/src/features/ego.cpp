// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/features/ego.hpp"

#include <cmath>
#include <string>

#include "gtpdm/errors.hpp"

namespace gtpdm::features {

double compute_ego_acceleration(std::span<const double> speeds_kmh, double fps) {
    if (speeds_kmh.empty()) throw FeatureError("compute_ego_acceleration: empty speed sequence");
    if (!(fps > 0.0) || !std::isfinite(fps)) {
        throw FeatureError("compute_ego_acceleration: fps must be positive, got " + std::to_string(fps));
    }
    const double delta = speeds_kmh.back() - speeds_kmh.front();
    return delta * fps / (3.6 * static_cast<double>(speeds_kmh.size()));
}

std::vector<double> ego_acceleration_track(std::span<const double> speeds_kmh, double fps) {
    return std::vector<double>(speeds_kmh.size(), compute_ego_acceleration(speeds_kmh, fps));
}

} // namespace gtpdm::features
