// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace gtpdm::evaluation {

inline constexpr double kDefaultThreshold = 0.5;

/// Metrics whose denominator vanished; their value is reported as 0.
struct MetricFlags {
    bool auc_undefined = false;       // single-class labels
    bool precision_undefined = false; // no positive predictions
    bool recall_undefined = false;    // no positive labels
    bool f1_undefined = false;        // neither
    bool empty = false;               // no samples at this sweep point
    bool any() const noexcept {
        return auc_undefined || precision_undefined || recall_undefined || f1_undefined || empty;
    }
    bool operator==(const MetricFlags&) const = default;
};

struct MetricsReport {
    std::string key;  // sweep point, empty for a plain evaluation
    std::size_t samples = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0.0;
    double auc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    MetricFlags flags;
    bool operator==(const MetricsReport&) const = default;
};

void to_json(nlohmann::json& j, const MetricsReport& r);
void from_json(const nlohmann::json& j, MetricsReport& r);

/// Threshold metrics count a score strictly above `threshold` as crossing.
/// AUC is the Mann-Whitney rank statistic with ties scoring one half.
MetricsReport compute_metrics(std::span<const double> scores, std::span<const int> labels,
                              double threshold = kDefaultThreshold);

/// A report for a sweep point that produced no samples.
MetricsReport empty_report(std::string key);

/// Ties-aware rank statistic alone; single-class input gives 0.
double rank_auc(std::span<const double> scores, std::span<const int> labels);

/// Header and one row per report.
void write_metrics_csv(std::ostream& out, std::span<const MetricsReport> reports);

} // namespace gtpdm::evaluation
