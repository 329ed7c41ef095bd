// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace gtpdm::features {

/// (s_last - s_first) * fps / (3.6 * T) in m/s^2 for km/h speeds of length T.
double compute_ego_acceleration(std::span<const double> speeds_kmh, double fps);

/// The same window-global value replicated once per frame.
std::vector<double> ego_acceleration_track(std::span<const double> speeds_kmh, double fps);

} // namespace gtpdm::features
