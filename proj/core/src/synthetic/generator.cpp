// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/synthetic/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/tensor/rng.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::synthetic {
namespace {

constexpr int kMaxAttempts = 64;
constexpr double kBoxAspect = 0.41;
constexpr double kCadenceHz = 1.8;

// COCO-17 joints relative to the body centre, in body heights (x right, y down).
constexpr std::array<std::array<double, 2>, features::kCocoJointCount> kTemplate{{
    {0.00, -0.44}, {-0.02, -0.46}, {0.02, -0.46}, {-0.05, -0.45}, {0.05, -0.45},  // head
    {-0.12, -0.32}, {0.12, -0.32},                                                 // shoulders
    {-0.15, -0.15}, {0.15, -0.15},                                                 // elbows
    {-0.16, 0.00},  {0.16, 0.00},                                                  // wrists
    {-0.08, 0.02},  {0.08, 0.02},                                                  // hips
    {-0.08, 0.26},  {0.08, 0.26},                                                  // knees
    {-0.08, 0.48},  {0.08, 0.48},                                                  // ankles
}};

double draw(CounterRng& rng, Range r) { return r.lo == r.hi ? r.lo : rng.uniform(r.lo, r.hi); }

void check_range(Range r, const char* name, bool positive = false) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
        throw ConfigError(std::string("scenario.") + name + ": empty range [" + std::to_string(r.lo) + ", " +
                          std::to_string(r.hi) + "]");
    }
    if (positive && !(r.lo > 0.0)) throw ConfigError(std::string("scenario.") + name + ": must be positive");
}

void read_range(util::FieldReader& r, const char* key, Range& out) {
    std::vector<double> v;
    if (!r.read(key, v)) return;
    if (v.size() != 2) throw ConfigError(std::string("scenario.") + key + ": expected [lo, hi]");
    out = {v[0], v[1]};
}

/// Gait offsets (body heights) of one joint at phase `theta`.
std::array<double, 2> gait(std::size_t j, double theta) {
    const double s = std::sin(theta);
    const double left = (j % 2 == 1) ? 1.0 : -1.0;  // odd COCO indices are left-side joints
    switch (j) {
    case 15:
    case 16: return {0.12 * left * s, -0.03 * std::max(0.0, left * s)};  // ankles
    case 13:
    case 14: return {0.06 * left * s, -0.015 * std::max(0.0, left * s)};  // knees
    case 9:
    case 10: return {-0.08 * left * s, 0.0};  // wrists
    case 7:
    case 8: return {-0.04 * left * s, 0.0};  // elbows
    default: return {0.0, 0.005 * std::cos(2.0 * theta)};
    }
}

struct Camera {
    double x;  // camera-frame lateral
    double z;  // camera-frame depth
};

Camera rotate(double lateral, double depth, double yaw) {
    return {lateral * std::cos(yaw) - depth * std::sin(yaw), lateral * std::sin(yaw) + depth * std::cos(yaw)};
}

struct Attempt {
    data::AnnotationRecord record;
    GroundTruth truth;
    bool inside = true;
};

Attempt build_track(const ScenarioParams& p, std::size_t index, bool crossing, CounterRng& rng) {
    Attempt a;
    GroundTruth& g = a.truth;
    data::AnnotationRecord& r = a.record;
    const std::size_t L = p.min_frames + static_cast<std::size_t>(rng.below(p.max_frames - p.min_frames + 1));
    const double ego0 = draw(rng, p.ego_speed_kmh), ego1 = draw(rng, p.ego_speed_kmh);
    g.side = rng.bernoulli(0.5) ? 1 : -1;
    g.body_height = draw(rng, p.pedestrian_height);
    g.walking = crossing || rng.bernoulli(p.walking_fraction);
    const double z_end = draw(rng, p.final_depth);
    const double sway_period = draw(rng, p.pan_period) * p.fps;
    const double sway_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double curvature = rng.uniform(-p.pan_drift, p.pan_drift);
    const double gait_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double ego_top = std::max(p.ego_speed_kmh.hi, 1e-9);

    std::size_t event = 0;
    double lateral_speed = 0.0, curb = 0.0, along = 0.0;
    if (crossing) {
        event = p.min_event_index + static_cast<std::size_t>(rng.below(L - 1 + p.max_event_overrun - p.min_event_index + 1));
        lateral_speed = draw(rng, p.lateral_speed);
    } else {
        curb = draw(rng, p.curb_offset);
        if (g.walking) along = draw(rng, p.approach_speed) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    }

    std::vector<double> speed(L), travelled(L, 0.0);
    for (std::size_t t = 0; t < L; ++t) {
        speed[t] = ego0 + (ego1 - ego0) * static_cast<double>(t) / static_cast<double>(L - 1);
        if (t > 0) travelled[t] = travelled[t - 1] + speed[t - 1] / (3.6 * p.fps);
    }

    const std::int64_t start = static_cast<std::int64_t>(rng.below(1000));
    r.pedestrian_id = std::string(crossing ? "syn_c" : "syn_n") + std::to_string(100000 + index).substr(1);
    r.video_id = "syn_v" + std::to_string(index / 20);
    r.set_id = "set0" + std::to_string(1 + index % 6);
    r.crossing = crossing;
    if (crossing) r.event_frame = start + static_cast<std::int64_t>(event);
    r.image_width = p.image_width;
    r.image_height = p.image_height;
    r.fps = p.fps;

    const double mid_body = p.camera_height - 0.5 * g.body_height;
    for (std::size_t t = 0; t < L; ++t) {
        const double ft = static_cast<double>(t);
        const double x = crossing ? g.side * (p.lane_half_width + lateral_speed * (static_cast<double>(event) - ft) / p.fps)
                                  : g.side * (p.lane_half_width + curb);
        // positive `along` walks toward the camera
        const double z = z_end + (travelled[L - 1] - travelled[t]) + along * static_cast<double>(L - 1 - t) / p.fps;
        const double yaw = p.pan_amplitude * (speed[t] / ego_top) * std::sin(2.0 * std::numbers::pi * ft / sway_period + sway_phase) +
                           curvature * travelled[t];
        const double u = project_x(x, z, yaw, p);
        const double v = project_y(mid_body, x, z, yaw, p);
        const double h = p.focal * g.body_height / rotate(x, z, yaw).z;
        g.lateral.push_back(x);
        g.depth.push_back(z);
        g.yaw.push_back(yaw);
        g.no_pan_x.push_back(project_x(x, z, 0.0, p));
        g.pan_offset.push_back(u - g.no_pan_x.back());

        const double feet = project_y(p.camera_height, x, z, yaw, p);
        if (u < 0.0 || u > p.image_width || feet > p.image_height || v < 0.0) a.inside = false;

        r.frames.push_back(start + static_cast<std::int64_t>(t));
        features::BoundingBox box{u, v, kBoxAspect * h, h};
        if (p.box_noise > 0.0) {
            box.cx += p.box_noise * rng.normal();
            box.cy += p.box_noise * rng.normal();
            box.w = std::max(1.0, box.w + p.box_noise * rng.normal());
            box.h = std::max(1.0, box.h + p.box_noise * rng.normal());
        }
        r.boxes.push_back(box);
        r.ego_speed.push_back(speed[t]);

        const double theta = 2.0 * std::numbers::pi * kCadenceHz * ft / p.fps + gait_phase;
        features::SkeletonFrame joints;
        for (std::size_t j = 0; j < features::kCocoJointCount; ++j) {
            auto off = kTemplate[j];
            if (g.walking) {
                const auto d = gait(j, theta);
                off[0] += d[0];
                off[1] += d[1];
            }
            features::Keypoint k{u + off[0] * h, v + off[1] * h, 1.0};
            if (p.keypoint_noise > 0.0) {
                k.x += p.keypoint_noise * rng.normal();
                k.y += p.keypoint_noise * rng.normal();
            }
            joints.push_back(k);
        }
        r.keypoints.push_back(features::augment_frame(joints));
    }
    return a;
}

} // namespace

void ScenarioParams::validate() const {
    if (!(image_width > 0.0) || !(image_height > 0.0)) throw ConfigError("scenario: image size must be positive");
    if (!(focal > 0.0) || !(fps > 0.0) || !(camera_height > 0.0)) {
        throw ConfigError("scenario: focal, fps and camera_height must be positive");
    }
    if (crossing_tracks + non_crossing_tracks == 0) throw ConfigError("scenario: no tracks requested");
    if (min_frames < 2 || min_frames > max_frames) {
        throw ConfigError("scenario: frame range [" + std::to_string(min_frames) + ", " + std::to_string(max_frames) +
                          "] is empty or shorter than 2");
    }
    if (min_event_index >= min_frames + max_event_overrun) {
        throw ConfigError("scenario: min_event_index leaves no room for an event in the shortest track");
    }
    check_range(curb_offset, "curb_offset");
    check_range(lateral_speed, "lateral_speed", true);
    check_range(final_depth, "final_depth", true);
    check_range(approach_speed, "approach_speed");
    check_range(ego_speed_kmh, "ego_speed_kmh");
    check_range(pedestrian_height, "pedestrian_height", true);
    check_range(pan_period, "pan_period", true);
    if (!(lane_half_width > 0.0) || curb_offset.lo < 0.0 || approach_speed.lo < 0.0 || ego_speed_kmh.lo < 0.0) {
        throw ConfigError("scenario: lane width, curb offset, walking and ego speeds must be non-negative");
    }
    if (!(walking_fraction >= 0.0 && walking_fraction <= 1.0)) throw ConfigError("scenario.walking_fraction outside [0, 1]");
    if (pan_amplitude < 0.0 || pan_drift < 0.0 || box_noise < 0.0 || keypoint_noise < 0.0) {
        throw ConfigError("scenario: pan and noise magnitudes must be non-negative");
    }
    if (pedestrian_height.hi >= 2.0 * camera_height) throw ConfigError("scenario: pedestrians taller than twice the camera height");
    // the nearest kerb-side pedestrian must fit in the image at the smallest depth
    const double u = 0.5 * image_width + focal * (lane_half_width + curb_offset.lo) / final_depth.lo;
    const double feet = 0.5 * image_height + focal * camera_height / final_depth.lo;
    if (u > image_width || feet > image_height) {
        throw ConfigError("scenario: infeasible geometry, a pedestrian " + std::to_string(lane_half_width + curb_offset.lo) +
                          " m off-centre at depth " + std::to_string(final_depth.lo) + " m projects outside the image");
    }
}

void to_json(nlohmann::json& j, const ScenarioParams& p) {
    const auto range = [](Range r) { return nlohmann::json::array({r.lo, r.hi}); };
    j = nlohmann::json{{"image_width", p.image_width},
                       {"image_height", p.image_height},
                       {"focal", p.focal},
                       {"camera_height", p.camera_height},
                       {"fps", p.fps},
                       {"crossing_tracks", p.crossing_tracks},
                       {"non_crossing_tracks", p.non_crossing_tracks},
                       {"min_frames", p.min_frames},
                       {"max_frames", p.max_frames},
                       {"lane_half_width", p.lane_half_width},
                       {"curb_offset", range(p.curb_offset)},
                       {"lateral_speed", range(p.lateral_speed)},
                       {"final_depth", range(p.final_depth)},
                       {"approach_speed", range(p.approach_speed)},
                       {"walking_fraction", p.walking_fraction},
                       {"ego_speed_kmh", range(p.ego_speed_kmh)},
                       {"pedestrian_height", range(p.pedestrian_height)},
                       {"pan_amplitude", p.pan_amplitude},
                       {"pan_period", range(p.pan_period)},
                       {"pan_drift", p.pan_drift},
                       {"box_noise", p.box_noise},
                       {"keypoint_noise", p.keypoint_noise},
                       {"min_event_index", p.min_event_index},
                       {"max_event_overrun", p.max_event_overrun},
                       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, ScenarioParams& p) {
    util::FieldReader r(j, "scenario");
    r.read("image_width", p.image_width);
    r.read("image_height", p.image_height);
    r.read("focal", p.focal);
    r.read("camera_height", p.camera_height);
    r.read("fps", p.fps);
    r.read("crossing_tracks", p.crossing_tracks);
    r.read("non_crossing_tracks", p.non_crossing_tracks);
    r.read("min_frames", p.min_frames);
    r.read("max_frames", p.max_frames);
    r.read("lane_half_width", p.lane_half_width);
    read_range(r, "curb_offset", p.curb_offset);
    read_range(r, "lateral_speed", p.lateral_speed);
    read_range(r, "final_depth", p.final_depth);
    read_range(r, "approach_speed", p.approach_speed);
    r.read("walking_fraction", p.walking_fraction);
    read_range(r, "ego_speed_kmh", p.ego_speed_kmh);
    read_range(r, "pedestrian_height", p.pedestrian_height);
    r.read("pan_amplitude", p.pan_amplitude);
    read_range(r, "pan_period", p.pan_period);
    r.read("pan_drift", p.pan_drift);
    r.read("box_noise", p.box_noise);
    r.read("keypoint_noise", p.keypoint_noise);
    r.read("min_event_index", p.min_event_index);
    r.read("max_event_overrun", p.max_event_overrun);
    r.read("seed", p.seed);
    r.finish();
    p.validate();
}

bool crosses_lane(const GroundTruth& g, double lane_half_width) {
    for (double x : g.lateral) {
        if (std::abs(x) <= lane_half_width) return true;
    }
    return false;
}

double project_x(double lateral, double depth, double yaw, const ScenarioParams& p) {
    const Camera c = rotate(lateral, depth, yaw);
    return 0.5 * p.image_width + p.focal * c.x / c.z;
}

double project_y(double height_below_camera, double lateral, double depth, double yaw, const ScenarioParams& p) {
    return 0.5 * p.image_height + p.focal * height_below_camera / rotate(lateral, depth, yaw).z;
}

Scenario generate(const ScenarioParams& params) {
    params.validate();
    const CounterRng root(params.seed);
    Scenario s;
    const std::size_t total = params.crossing_tracks + params.non_crossing_tracks;
    for (std::size_t i = 0; i < total; ++i) {
        const bool crossing = i < params.crossing_tracks;
        CounterRng rng = root.derive(i);
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Attempt a = build_track(params, i, crossing, rng);
            if (!a.inside) continue;
            s.records.push_back(std::move(a.record));
            s.truth.push_back(std::move(a.truth));
            placed = true;
        }
        if (!placed) {
            throw ConfigError("scenario: infeasible geometry, track " + std::to_string(i) + " left the image in " +
                              std::to_string(kMaxAttempts) + " placement attempts");
        }
    }
    return s;
}

} // namespace gtpdm::synthetic
