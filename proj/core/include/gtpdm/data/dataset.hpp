// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gtpdm/data/annotation.hpp"
#include "gtpdm/data/windows.hpp"
#include "gtpdm/features/position.hpp"
#include "gtpdm/model/config.hpp"
#include "gtpdm/model/input.hpp"

namespace gtpdm::data {

struct FeaturizeConfig {
    std::size_t T = 16;
    TteRange tte{30, 60};
    double overlap = 0.6;
    double area_scale = features::kDefaultAreaScale;
    /// Vertical shifts of reference-line endpoints A and C from the image bottom.
    double line_a_dy = 0.0;
    double line_c_dy = 0.0;
    /// Apex height of the reference lines; taken from the training records when absent.
    std::optional<double> y_min;
    model::EgoMode ego_mode = model::EgoMode::SpeedAccel;
    std::vector<std::string> ego_vocabulary;  // empty selects default_ego_vocabulary()
    /// Subsample the majority class down to the minority count.
    bool balance = false;
    std::uint64_t balance_seed = 0;

    void validate() const;
    std::vector<std::string> vocabulary() const;
    bool operator==(const FeaturizeConfig&) const = default;
};

void to_json(nlohmann::json& j, const FeaturizeConfig& c);
void from_json(const nlohmann::json& j, FeaturizeConfig& c);

/// Model-ready tensors for one window.
struct WindowFeatures {
    std::string pedestrian_id;
    std::int64_t end_frame = 0;
    std::optional<std::int64_t> tte;
    int label = 0;
    Tensor pdm;           // [T, 3]
    Tensor displacement;  // [T, 2]
    Tensor velocity;      // [T, 2]
    Tensor ego;           // [T, 1] or [T, S]
    Tensor accel;         // [T, 1]
    Tensor keypoints;     // [T, N, 3], zeros when the track has none
    bool operator==(const WindowFeatures&) const = default;
};

struct Dataset {
    std::size_t T = 0;
    model::EgoMode ego_mode = model::EgoMode::SpeedAccel;
    std::size_t ego_width = 1;
    double y_min = 0.0;
    bool has_keypoints = true;
    std::size_t skipped_tracks = 0;
    std::vector<WindowFeatures> windows;

    std::size_t size() const noexcept { return windows.size(); }
    std::size_t positives() const noexcept;
    std::vector<int> labels() const;
    bool operator==(const Dataset&) const = default;
};

/// Smallest box-center y over all frames of the records.
double min_center_y(const std::vector<AnnotationRecord>& records);

features::ReferenceLineConfig reference_lines(const FeaturizeConfig& cfg, double width, double height, double y_min);

WindowFeatures featurize_window(const AnnotationRecord& record, const WindowSample& window, const FeaturizeConfig& cfg,
                                double y_min);

/// Samples and featurizes every record. Tracks shorter than T are counted in
/// `skipped_tracks`. `y_min` overrides the config and the records.
Dataset featurize(const std::vector<AnnotationRecord>& records, const FeaturizeConfig& cfg,
                  std::optional<double> y_min = std::nullopt);

/// Stacks the selected windows into one batch.
model::ModelInput make_batch(const Dataset& data, std::span<const std::size_t> indices);
model::ModelInput make_batch(const Dataset& data);

/// Config fields the dataset fixes for a compatible model; throws ConfigError on mismatch.
void check_compatible(const Dataset& data, const model::ModelConfig& cfg);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

} // namespace gtpdm::data
