// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace gtpdm::model {

enum class EgoMode {
    SpeedAccel,  // km/h speed plus window acceleration
    StateOneHot, // categorical motion state
};

std::string to_string(EgoMode mode);
EgoMode ego_mode_from_string(const std::string& s);

struct ModelConfig {
    std::size_t T = 16;
    std::size_t channels = 64;      // C_d
    std::size_t gcn_hidden = 64;    // d_hid
    std::size_t gcn_layers = 4;
    std::size_t heads = 4;
    std::size_t layers = 4;
    std::size_t ff_dim = 64;
    std::size_t joints = 20;
    std::size_t joint_channels = 3; // x, y, score
    double dropout = 0.1;

    EgoMode ego_mode = EgoMode::SpeedAccel;
    std::size_t ego_states = 5;
    bool use_accel = true;

    bool use_position = true;
    bool use_ego = true;
    bool use_pose = true;
    bool use_pdm = true;
    bool use_displacement = true;
    bool use_velocity = true;

    bool learnable_edges = true;
    bool positional_encoding = true;

    /// Throws ConfigError on any inconsistent setting.
    void validate() const;

    std::size_t ego_input_width() const noexcept { return ego_mode == EgoMode::SpeedAccel ? 1 : ego_states; }
    std::size_t position_streams() const noexcept {
        return std::size_t(use_pdm) + std::size_t(use_displacement) + std::size_t(use_velocity);
    }
    std::size_t encoder_count() const noexcept {
        return std::size_t(use_position) + std::size_t(use_ego) + std::size_t(use_pose);
    }

    bool operator==(const ModelConfig&) const = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
/// Missing keys keep their defaults; unknown keys are a ConfigError.
void from_json(const nlohmann::json& j, ModelConfig& c);

} // namespace gtpdm::model
