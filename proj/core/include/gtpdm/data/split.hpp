// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gtpdm/data/annotation.hpp"

namespace gtpdm::data {

/// Partition of pedestrian ids into train / val / test.
struct SplitSpec {
    std::string name;
    std::uint64_t seed = 0;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;

    /// Throws ValidationError if an id occurs in more than one part.
    void validate() const;
    std::size_t size() const noexcept { return train.size() + val.size() + test.size(); }
    bool operator==(const SplitSpec&) const = default;
};

struct SplitRecords {
    std::vector<AnnotationRecord> train;
    std::vector<AnnotationRecord> val;
    std::vector<AnnotationRecord> test;
};

/// Distinct pedestrian ids in first-appearance order.
std::vector<std::string> pedestrian_ids(const std::vector<AnnotationRecord>& records);

/// Part sizes are floor(n * ratio) with the remainder handed out by largest
/// fractional part, earlier parts first on ties.
std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> ratios);

SplitSpec split_by_id(const std::vector<AnnotationRecord>& records, std::array<double, 3> ratios, std::uint64_t seed);

/// Partition by video set; records from unlisted sets are left out.
SplitSpec split_by_set(const std::vector<AnnotationRecord>& records, const std::vector<std::string>& train_sets,
                       const std::vector<std::string>& val_sets, const std::vector<std::string>& test_sets);

/// Iteration i tests on fold i and trains on the rest; val is empty.
std::vector<SplitSpec> kfold_split(const std::vector<AnnotationRecord>& records, std::size_t k, std::uint64_t seed);

/// Records grouped by the part their pedestrian id belongs to, order preserved.
SplitRecords apply_split(const std::vector<AnnotationRecord>& records, const SplitSpec& split);

} // namespace gtpdm::data
