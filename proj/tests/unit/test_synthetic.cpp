// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "gtpdm/features/position.hpp"
#include "gtpdm/features/skeleton.hpp"
#include "gtpdm/synthetic/generator.hpp"

using namespace gtpdm;
using namespace gtpdm::synthetic;

namespace {

ScenarioParams small(std::uint64_t seed = 3) {
    ScenarioParams p;
    p.crossing_tracks = 24;
    p.non_crossing_tracks = 24;
    p.seed = seed;
    return p;
}

ScenarioParams noiseless(ScenarioParams p) {
    p.box_noise = 0.0;
    p.keypoint_noise = 0.0;
    return p;
}

/// Camera-frame depth of a truth sample.
double camera_depth(const GroundTruth& g, std::size_t t) {
    return g.lateral[t] * std::sin(g.yaw[t]) + g.depth[t] * std::cos(g.yaw[t]);
}

} // namespace

TEST_SUITE("synthetic") {

TEST_CASE("generation is deterministic in the seed") {
    const Scenario a = generate(small(5));
    const Scenario b = generate(small(5));
    const Scenario c = generate(small(6));
    REQUIRE(a.records.size() == 48);
    CHECK(a.records == b.records);
    CHECK(a.truth == b.truth);
    CHECK_FALSE(a.records == c.records);
}

TEST_CASE("records validate and stay inside the image") {
    const ScenarioParams p = small();
    const Scenario s = generate(p);
    for (const auto& r : s.records) {
        CHECK_NOTHROW(r.validate());
        CHECK(r.length() >= p.min_frames);
        CHECK(r.length() <= p.max_frames);
        CHECK(r.has_keypoints());
        CHECK(r.keypoints.front().size() == features::kJointCount);
        for (const auto& b : r.boxes) {
            CHECK(b.cx >= -3.0 * p.box_noise);
            CHECK(b.cx <= p.image_width + 3.0 * p.box_noise);
        }
    }
}

TEST_CASE("labels follow the lane-boundary rule") {
    const ScenarioParams p = small(11);
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        const auto& g = s.truth[i];
        const bool reaches_lane = r.crossing && (*r.event_frame <= r.frames.back());
        if (!r.crossing) CHECK_FALSE(crosses_lane(g, p.lane_half_width));
        if (reaches_lane) CHECK(crosses_lane(g, p.lane_half_width));
        if (r.crossing) {
            // the boundary is reached exactly at the event frame
            const double t_event = static_cast<double>(*r.event_frame - r.frames.front());
            const double x0 = g.lateral[0], x1 = g.lateral[1];
            CHECK(x0 + (x1 - x0) * t_event == doctest::Approx(g.side * p.lane_half_width).epsilon(1e-9));
        }
    }
}

TEST_CASE("without pan or ego motion a crossing pedestrian drifts monotonically toward the centre") {
    ScenarioParams p = noiseless(small(13));
    p.ego_speed_kmh = {0.0, 0.0};
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (!r.crossing) continue;
        const int side = s.truth[i].side;
        for (std::size_t t = 1; t < r.length(); ++t) {
            CHECK(side * (r.boxes[t].cx - r.boxes[t - 1].cx) < 0.0);
        }
    }
}

TEST_CASE("with zero pan the PDM lateral disparity of a crossing track keeps one sign") {
    ScenarioParams p = noiseless(small(37));
    p.pan_amplitude = 0.0;
    p.pan_drift = 0.0;
    p.ego_speed_kmh = {0.0, 0.0};
    const Scenario s = generate(p);
    const features::ReferenceLineConfig lines{p.image_width, p.image_height, 0.3 * p.image_height, p.image_height,
                                              p.image_height};
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (!r.crossing) continue;
        const features::PdmFeatures pdm = features::compute_pdm(r.boxes, lines);
        const double first = pdm.values[1 * 3 + 0];
        REQUIRE(first != 0.0);
        for (std::size_t t = 1; t < r.length(); ++t) CHECK(pdm.values[t * 3 + 0] * first > 0.0);
        // toward the lane centre, whichever side the pedestrian starts on
        CHECK(first * s.truth[i].side < 0.0);
    }
}

TEST_CASE("box centres decompose into the unpanned projection plus the pan offset") {
    const ScenarioParams p = noiseless(small(17));
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& g = s.truth[i];
        for (std::size_t t = 0; t < g.lateral.size(); ++t) {
            CHECK(g.no_pan_x[t] == doctest::Approx(project_x(g.lateral[t], g.depth[t], 0.0, p)).epsilon(1e-12));
            CHECK(s.records[i].boxes[t].cx == doctest::Approx(g.no_pan_x[t] + g.pan_offset[t]).epsilon(1e-12));
        }
        if (!s.records[i].crossing) {
            for (double x : g.lateral) CHECK(x == g.lateral.front());
        }
    }
}

TEST_CASE("a stationary pedestrian seen from a stationary camera shows no pan") {
    ScenarioParams p = noiseless(small(19));
    p.ego_speed_kmh = {0.0, 0.0};
    p.walking_fraction = 0.0;
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        if (s.records[i].crossing) continue;
        for (double off : s.truth[i].pan_offset) CHECK(off == 0.0);
        for (const auto& b : s.records[i].boxes) CHECK(b.cx == s.records[i].boxes.front().cx);
    }
}

TEST_CASE("the area ratio matches the closed form from world depth") {
    ScenarioParams p = noiseless(small(23));
    p.ego_speed_kmh = {20.0, 40.0};
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        const auto& g = s.truth[i];
        const features::ReferenceLineConfig lines{p.image_width, p.image_height, 0.0, p.image_height, p.image_height};
        const features::PdmFeatures pdm = features::compute_pdm(r.boxes, lines);
        for (std::size_t t = 1; t < r.length(); ++t) {
            const double ratio = camera_depth(g, t - 1) / camera_depth(g, t);
            const double expected = (ratio * ratio - 1.0) * pdm.alpha;
            CHECK(pdm.values[t * 3 + 2] == doctest::Approx(expected).epsilon(1e-9));
            // an approaching ego only ever sees pedestrians grow, unless they walk away faster
            if (!g.walking) CHECK(pdm.values[t * 3 + 2] > 0.0);
        }
    }
}

TEST_CASE("normalized joints of a standing pedestrian are constant") {
    ScenarioParams p = noiseless(small(29));
    p.ego_speed_kmh = {0.0, 0.0};
    p.walking_fraction = 0.0;
    const Scenario s = generate(p);
    for (std::size_t i = 0; i < s.records.size(); ++i) {
        const auto& r = s.records[i];
        if (r.crossing) continue;
        const features::SkeletonTrack norm = features::normalize_keypoints(r.keypoints, r.boxes);
        for (const auto& frame : norm) {
            for (std::size_t j = 0; j < features::kJointCount; ++j) {
                CHECK(frame[j].x == doctest::Approx(norm.front()[j].x).epsilon(1e-12));
                CHECK(frame[j].y == doctest::Approx(norm.front()[j].y).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("parameters round-trip through JSON and reject bad input") {
    ScenarioParams p = small(31);
    p.curb_offset = {1.0, 2.0};
    const nlohmann::json j = p;
    CHECK(j.get<ScenarioParams>() == p);

    nlohmann::json unknown = j;
    unknown["curb"] = 1;
    CHECK_THROWS_AS(unknown.get<ScenarioParams>(), ConfigError);

    nlohmann::json empty = j;
    empty["final_depth"] = {9.0, 8.0};
    CHECK_THROWS_AS(empty.get<ScenarioParams>(), ConfigError);

    ScenarioParams near = p;
    near.final_depth = {0.5, 1.0};
    CHECK_THROWS_WITH_AS(near.validate(), doctest::Contains("infeasible geometry"), ConfigError);

    ScenarioParams frames = p;
    frames.min_frames = frames.max_frames + 1;
    CHECK_THROWS_AS(generate(frames), ConfigError);
}

} // TEST_SUITE
