// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gtpdm/features/position.hpp"
#include "gtpdm/features/skeleton.hpp"

namespace gtpdm::data {

inline constexpr std::string_view kAnnotationSchema = "gtpdm-annotations";
inline constexpr int kAnnotationSchemaVersion = 1;

/// One tracked pedestrian. Per-frame vectors are parallel to `frames`.
struct AnnotationRecord {
    std::string pedestrian_id;
    std::string video_id;
    std::string set_id;
    std::vector<std::int64_t> frames;
    features::BoundingBoxTrack boxes;
    /// Image-space joints, kJointCount per frame; empty when the track has none.
    features::SkeletonTrack keypoints;
    /// Ego speed in km/h. Exactly one of ego_speed / ego_state is filled.
    std::vector<double> ego_speed;
    std::vector<std::string> ego_state;
    bool crossing = false;
    /// Required for crossing tracks; ignored by the sampler otherwise.
    std::optional<std::int64_t> event_frame;
    double image_width = 0.0;
    double image_height = 0.0;
    double fps = 30.0;

    std::size_t length() const noexcept { return frames.size(); }
    bool has_keypoints() const noexcept { return !keypoints.empty(); }
    /// Throws ValidationError naming the offending field.
    void validate() const;
    bool operator==(const AnnotationRecord&) const = default;
};

/// Line-delimited JSON: a schema header object, then one record per line.
/// 17-joint keypoints are augmented to 20 on load.
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);
std::vector<AnnotationRecord> parse_annotations(std::istream& in, const std::string& source = "<stream>");

void write_annotations(std::ostream& out, const std::vector<AnnotationRecord>& records);
void save_annotations(const std::filesystem::path& path, const std::vector<AnnotationRecord>& records);

} // namespace gtpdm::data
