// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "gtpdm/data/annotation.hpp"
#include "gtpdm/data/dataset.hpp"
#include "gtpdm/evaluation/metrics.hpp"
#include "gtpdm/model/gtranspdm.hpp"

namespace gtpdm::evaluation {

/// Re-samples `records` with the TTE window pinned to each point and scores
/// the model there. Points are evaluated in ascending order; a point with no
/// windows yields a report flagged `empty`.
std::vector<MetricsReport> sweep_tte(model::GTransPDM& model, const std::vector<data::AnnotationRecord>& records,
                                     const data::FeaturizeConfig& features, double y_min,
                                     std::vector<std::int64_t> tte_points);

/// Head- and batch-averaged attention per layer, each [T, T] with unit row sums.
std::vector<Tensor> export_attention(model::GTransPDM& model, const model::ModelInput& batch);

/// One `# layer k` block per map, rows of space-separated values.
void write_attention_grid(std::ostream& out, std::span<const Tensor> maps);

struct LatencyStats {
    std::size_t runs = 0;
    std::size_t warmup = 0;
    double median_ms = 0.0;
    double p95_ms = 0.0;
    double mean_ms = 0.0;
    double min_ms = 0.0;
    std::size_t parameters = 0;
    std::string hardware;
};

void to_json(nlohmann::json& j, const LatencyStats& s);

/// Times `runs` eval-mode forwards of the single-sequence `sample` after
/// `warmup` untimed ones. Throws ConfigError when runs < 1 or the sample
/// holds more than one sequence.
LatencyStats benchmark_latency(model::GTransPDM& model, const model::ModelInput& sample, std::size_t runs,
                               std::size_t warmup = 10);

/// CPU model string and logical core count of the host.
std::string hardware_description();

} // namespace gtpdm::evaluation
