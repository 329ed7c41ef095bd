// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtpdm/data/dataset.hpp"
#include "gtpdm/data/split.hpp"
#include "gtpdm/evaluation/metrics.hpp"
#include "gtpdm/model/gtranspdm.hpp"
#include "gtpdm/synthetic/generator.hpp"
#include "gtpdm/training/trainer.hpp"

namespace gtpdm::pipeline {

/// GTPDM_DATA_DIR when set, else the data directory of the source tree.
std::filesystem::path data_directory();
/// Absolute paths pass through; relative ones resolve under data_directory().
std::filesystem::path resolve_data_path(const std::filesystem::path& p);

enum class DataSource { Synthetic, Annotations };
enum class SplitKind { Id, Set, KFold };
enum class AblationMode { Retrain, Evaluate };

struct DataConfig {
    DataSource source = DataSource::Synthetic;
    synthetic::ScenarioParams scenario;
    std::string annotations;     // JSONL path, used when source is annotations
    std::string skeleton_edges;  // edge-list path; empty selects the built-in graph
    bool operator==(const DataConfig&) const = default;
};

struct SplitConfig {
    SplitKind kind = SplitKind::Id;
    std::array<double, 3> ratios{0.5, 0.1, 0.4};
    std::uint64_t seed = 0;
    std::vector<std::string> train_sets, val_sets, test_sets;
    /// k-fold: `fold` is tested, fold + 1 (mod k) validates, the rest train.
    std::size_t folds = 5;
    std::size_t fold = 0;
    bool operator==(const SplitConfig&) const = default;
};

struct AnalysisConfig {
    std::vector<std::string> ablation_subsets;
    AblationMode ablation_mode = AblationMode::Retrain;
    std::vector<std::int64_t> tte_points;
    std::vector<std::size_t> observation_lengths;
    bool operator==(const AnalysisConfig&) const = default;
};

struct ExperimentConfig {
    std::string name = "experiment";
    /// When set, replaces the scenario, split, balance and training seeds.
    std::optional<std::uint64_t> seed;
    DataConfig data;
    SplitConfig split;
    data::FeaturizeConfig features;
    model::ModelConfig model;
    training::TrainConfig train;
    AnalysisConfig analysis;

    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// model.T, ego_mode, ego_states and use_accel follow the features section
/// unless given; a conflicting value is a config mismatch.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// `a.b.c=value`; the value is parsed as JSON, falling back to a string.
void apply_override(nlohmann::json& config, std::string_view assignment);
nlohmann::json read_json_file(const std::filesystem::path& path);
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Encoder and stream switches named by `+`-joined tokens: pe (all of
/// pdm, d, v), pdm, d, v, ev, ke.
struct FeatureSubset {
    bool pdm = false;
    bool displacement = false;
    bool velocity = false;
    bool ego = false;
    bool pose = false;

    static FeatureSubset parse(std::string_view spec);
    static FeatureSubset of(const model::ModelConfig& cfg);
    bool position() const noexcept { return pdm || displacement || velocity; }
    /// Canonical spelling, e.g. "pe+ev+ke" or "d+v+ev+ke".
    std::string key() const;
    void apply(model::ModelConfig& cfg) const;
    bool subset_of(const FeatureSubset& other) const noexcept;
    bool operator==(const FeatureSubset&) const = default;
};

/// Zeroes the feature streams the subset leaves out.
data::Dataset mask_features(const data::Dataset& data, const FeatureSubset& subset);

struct PreparedData {
    data::SplitSpec split;
    data::SplitRecords records;
    data::FeaturizeConfig features;  // y_min resolved
    data::Dataset train, val, test;
};

std::vector<data::AnnotationRecord> load_records(const ExperimentConfig& cfg);
features::SkeletonGraph load_graph(const ExperimentConfig& cfg);
data::SplitSpec make_split(const std::vector<data::AnnotationRecord>& records, const SplitConfig& cfg);
/// Class balancing, when enabled, touches the training split only.
PreparedData prepare(const ExperimentConfig& cfg);

struct RunOptions {
    std::optional<std::filesystem::path> checkpoint_dir;
    std::function<void(const training::EpochRecord&)> on_epoch;
};

struct ExperimentResult {
    std::unique_ptr<model::GTransPDM> model;
    training::TrainState state;
    data::FeaturizeConfig features;
    evaluation::MetricsReport test;
};

/// Trains, applies checkpoint selection and scores the test split.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const PreparedData& data, const RunOptions& opts = {});
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

struct AblationRow {
    FeatureSubset subset;
    evaluation::MetricsReport metrics;  // on the test split, keyed by subset
};

/// Retrain mode trains one model per subset with the shared seed. Evaluate
/// mode trains the configured model once and masks the left-out streams.
std::vector<AblationRow> ablate_features(const ExperimentConfig& cfg, const std::vector<std::string>& subsets,
                                         AblationMode mode = AblationMode::Retrain);
void write_ablation_csv(std::ostream& out, const std::vector<AblationRow>& rows);

/// Retrains at each window length; keys read "T=<n>".
std::vector<evaluation::MetricsReport> sweep_observation_length(const ExperimentConfig& cfg,
                                                                const std::vector<std::size_t>& lengths);

} // namespace gtpdm::pipeline
