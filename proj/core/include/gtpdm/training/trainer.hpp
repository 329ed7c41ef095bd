// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gtpdm/data/dataset.hpp"
#include "gtpdm/evaluation/metrics.hpp"
#include "gtpdm/model/gtranspdm.hpp"
#include "gtpdm/training/optimizer.hpp"
#include "gtpdm/training/scheduler.hpp"

namespace gtpdm::training {

enum class DatasetMode { Pie, Jaad };
enum class CheckpointSelect { BestValLoss, Last };

std::string to_string(DatasetMode m);
DatasetMode dataset_mode_from_string(const std::string& s);
std::string to_string(CheckpointSelect s);
CheckpointSelect checkpoint_select_from_string(const std::string& s);

struct TrainConfig {
    DatasetMode mode = DatasetMode::Pie;
    std::size_t epochs = 32;
    std::size_t batch_size = 128;
    OptimizerKind optimizer = OptimizerKind::Adam;
    double lr = 1e-4;
    double weight_decay = 1e-4;
    AdamHyper adam;
    SchedulerKind scheduler = SchedulerKind::ReduceOnPlateau;
    PlateauConfig plateau;
    std::optional<double> grad_clip;
    CheckpointSelect select = CheckpointSelect::BestValLoss;
    std::uint64_t seed = 0;

    /// PIE: batch 128, Adam 1e-4, plateau halving. JAAD: batch 64, AdamW 5e-5, constant.
    static TrainConfig for_mode(DatasetMode mode);
    void validate() const;
    bool operator==(const TrainConfig&) const = default;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// A "mode" key selects that mode's defaults before the other keys apply.
void from_json(const nlohmann::json& j, TrainConfig& c);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;        // rate used during the epoch
    evaluation::MetricsReport val;
    bool operator==(const EpochRecord&) const = default;
};

void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t size() const noexcept { return epochs.size(); }
    bool operator==(const TrainHistory&) const = default;
};

/// One JSON object per epoch.
void write_history_jsonl(std::ostream& out, const TrainHistory& h);

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
    std::size_t epoch = 0;  // completed epochs
    double lr = 0.0;        // rate for the next epoch
    AdamState adam;
    PlateauState plateau;
    TrainHistory history;
    double best_val_loss = 0.0;
    std::size_t best_epoch = 0;  // 0 until the first epoch completes
    std::vector<Tensor> best_params;
    BatchNormState best_norm;
    bool operator==(const TrainState&) const = default;
};

/// Metadata carried into checkpoints so evaluation can rebuild the pipeline.
struct CheckpointMeta {
    data::FeaturizeConfig features;
    TrainConfig train;
    bool operator==(const CheckpointMeta&) const = default;
};

struct TrainOptions {
    std::function<void(const EpochRecord&)> on_epoch;
    /// Stop once this many epochs are complete (an interrupted run).
    std::optional<std::size_t> stop_after;
    /// Writes last.ckpt (resumable) every epoch and best.ckpt on improvement.
    std::optional<std::filesystem::path> checkpoint_dir;
    CheckpointMeta meta;
};

/// Trains in place. Shuffling and dropout draw from streams derived from the
/// config seed and the epoch index, so a resumed run replays the same
/// batches. Throws TrainingError when a loss or gradient turns non-finite.
TrainState train(model::GTransPDM& model, const data::Dataset& train_set, const data::Dataset& val_set,
                 const TrainConfig& cfg, const TrainOptions& opts = {}, std::optional<TrainState> resume = std::nullopt);

/// Loads the best-validation weights recorded in `state` into the model.
void restore_best(model::GTransPDM& model, const TrainState& state);

/// The run's selected weights per `cfg.select`.
void apply_selection(model::GTransPDM& model, const TrainState& state, const TrainConfig& cfg);

} // namespace gtpdm::training
