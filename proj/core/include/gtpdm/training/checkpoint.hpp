// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include "gtpdm/model/gtranspdm.hpp"
#include "gtpdm/training/trainer.hpp"

namespace gtpdm::training {

inline constexpr const char* kCheckpointMagic = "GTPDMCK1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoadedCheckpoint {
    std::unique_ptr<model::GTransPDM> model;
    CheckpointMeta meta;
    std::optional<TrainState> state;  // present in resumable checkpoints
};

/// Model config, graph, parameters and normalization statistics, plus the
/// trainer state when given. Doubles are stored bit-exactly.
void save_checkpoint(const std::filesystem::path& path, const model::GTransPDM& model, const CheckpointMeta& meta,
                     const TrainState* state = nullptr);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace gtpdm::training
