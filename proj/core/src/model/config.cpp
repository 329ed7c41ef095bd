// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/model/config.hpp"

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"
#include "../util/json_fields.hpp"

namespace gtpdm::model {

std::string to_string(EgoMode mode) { return mode == EgoMode::SpeedAccel ? "speed_accel" : "state_onehot"; }

EgoMode ego_mode_from_string(const std::string& s) {
    if (s == "speed_accel") return EgoMode::SpeedAccel;
    if (s == "state_onehot") return EgoMode::StateOneHot;
    throw ConfigError("unknown ego mode '" + s + "' (expected speed_accel or state_onehot)");
}

void ModelConfig::validate() const {
    const auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
    };
    positive(T, "T");
    positive(channels, "channels");
    positive(gcn_hidden, "gcn_hidden");
    positive(gcn_layers, "gcn_layers");
    positive(heads, "heads");
    positive(layers, "layers");
    positive(ff_dim, "ff_dim");
    positive(joints, "joints");
    positive(joint_channels, "joint_channels");
    if (channels % heads != 0) {
        throw ConfigError("model.channels (" + std::to_string(channels) + ") is not divisible by model.heads (" +
                          std::to_string(heads) + ")");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
    if (ego_mode == EgoMode::StateOneHot && ego_states == 0) throw ConfigError("model.ego_states must be positive");
    if (encoder_count() == 0) throw ConfigError("at least one of position, ego and pose encoders must be enabled");
    if (use_position && position_streams() == 0) {
        throw ConfigError("position encoder enabled with pdm, displacement and velocity all disabled");
    }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{
        {"T", c.T},
        {"channels", c.channels},
        {"gcn_hidden", c.gcn_hidden},
        {"gcn_layers", c.gcn_layers},
        {"heads", c.heads},
        {"layers", c.layers},
        {"ff_dim", c.ff_dim},
        {"joints", c.joints},
        {"joint_channels", c.joint_channels},
        {"dropout", c.dropout},
        {"ego_mode", to_string(c.ego_mode)},
        {"ego_states", c.ego_states},
        {"use_accel", c.use_accel},
        {"use_position", c.use_position},
        {"use_ego", c.use_ego},
        {"use_pose", c.use_pose},
        {"use_pdm", c.use_pdm},
        {"use_displacement", c.use_displacement},
        {"use_velocity", c.use_velocity},
        {"learnable_edges", c.learnable_edges},
        {"positional_encoding", c.positional_encoding},
    };
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    util::FieldReader r(j, "model");
    r.read("T", c.T);
    r.read("channels", c.channels);
    r.read("gcn_hidden", c.gcn_hidden);
    r.read("gcn_layers", c.gcn_layers);
    r.read("heads", c.heads);
    r.read("layers", c.layers);
    r.read("ff_dim", c.ff_dim);
    r.read("joints", c.joints);
    r.read("joint_channels", c.joint_channels);
    r.read("dropout", c.dropout);
    std::string mode = to_string(c.ego_mode);
    r.read("ego_mode", mode);
    c.ego_mode = ego_mode_from_string(mode);
    r.read("ego_states", c.ego_states);
    r.read("use_accel", c.use_accel);
    r.read("use_position", c.use_position);
    r.read("use_ego", c.use_ego);
    r.read("use_pose", c.use_pose);
    r.read("use_pdm", c.use_pdm);
    r.read("use_displacement", c.use_displacement);
    r.read("use_velocity", c.use_velocity);
    r.read("learnable_edges", c.learnable_edges);
    r.read("positional_encoding", c.positional_encoding);
    r.finish();
}

} // namespace gtpdm::model
