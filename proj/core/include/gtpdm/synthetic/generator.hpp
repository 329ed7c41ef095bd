// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gtpdm/data/annotation.hpp"

namespace gtpdm::synthetic {

/// Closed interval [lo, hi]; lo == hi pins the value.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool operator==(const Range&) const = default;
};

/// Scenario knobs. Lengths in metres, speeds in m/s unless noted, angles in radians.
struct ScenarioParams {
    double image_width = 1920.0;
    double image_height = 1080.0;
    double focal = 1000.0;          // pixels
    double camera_height = 1.5;
    double fps = 30.0;
    std::size_t crossing_tracks = 400;
    std::size_t non_crossing_tracks = 400;
    std::size_t min_frames = 60;
    std::size_t max_frames = 120;
    double lane_half_width = 1.75;  // lane boundary at |X| = this
    Range curb_offset{0.75, 4.0};   // non-crossing lateral distance beyond the boundary
    Range lateral_speed{0.8, 1.6};  // crossing pedestrians, toward the lane centre
    Range final_depth{8.0, 25.0};   // depth at the last frame
    Range approach_speed{0.8, 1.6}; // along-sidewalk walking speed, either direction
    double walking_fraction = 0.5;  // share of non-crossing pedestrians that walk
    Range ego_speed_kmh{0.0, 40.0};
    Range pedestrian_height{1.5, 1.9};
    /// Sinusoidal yaw sway amplitude, scaled by ego speed relative to the range top.
    double pan_amplitude = 0.005;
    Range pan_period{1.5, 4.0};     // seconds
    /// Yaw rate per metre travelled (road curvature), uniform in +/- this.
    double pan_drift = 0.001;
    double box_noise = 1.0;         // pixels
    double keypoint_noise = 1.5;    // pixels
    /// Event index lies between this many frames after the start and this many past the end.
    std::size_t min_event_index = 45;
    std::size_t max_event_overrun = 20;
    std::uint64_t seed = 1;

    /// Throws ConfigError for empty ranges or geometry that spawns pedestrians off-image.
    void validate() const;
    bool operator==(const ScenarioParams&) const = default;
};

void to_json(nlohmann::json& j, const ScenarioParams& p);
void from_json(const nlohmann::json& j, ScenarioParams& p);

/// World-frame truth behind one generated track, parallel to its frames.
struct GroundTruth {
    std::vector<double> lateral;     // X, negative left of the lane centre
    std::vector<double> depth;       // Z along the road
    std::vector<double> yaw;         // camera yaw (pan)
    std::vector<double> pan_offset;  // image-x shift of the box centre caused by the yaw
    std::vector<double> no_pan_x;    // box-centre x the camera would see without yaw
    double body_height = 0.0;
    bool walking = false;
    int side = 0;                    // -1 left of the lane, +1 right
    bool operator==(const GroundTruth&) const = default;
};

struct Scenario {
    std::vector<data::AnnotationRecord> records;
    std::vector<GroundTruth> truth;
};

/// Crossing-by-rule: the world lateral position reaches the lane boundary.
bool crosses_lane(const GroundTruth& g, double lane_half_width);

/// The pinhole projection used by the generator: image x of a world point
/// seen by a camera yawed by `yaw`.
double project_x(double lateral, double depth, double yaw, const ScenarioParams& p);
double project_y(double height_below_camera, double lateral, double depth, double yaw, const ScenarioParams& p);

/// Deterministic in `params.seed`; each track draws from its own derived stream.
Scenario generate(const ScenarioParams& params);

} // namespace gtpdm::synthetic
