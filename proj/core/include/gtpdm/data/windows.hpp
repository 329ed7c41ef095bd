// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gtpdm/data/annotation.hpp"

namespace gtpdm::data {

/// Inclusive range of time-to-event values, in frames.
struct TteRange {
    std::int64_t lo = 30;
    std::int64_t hi = 60;
    bool operator==(const TteRange&) const = default;
    bool contains(std::int64_t tte) const noexcept { return tte >= lo && tte <= hi; }
    void validate() const;
};

/// T consecutive frames of one record, starting at index `first`.
struct WindowSample {
    std::size_t first = 0;
    std::size_t length = 0;
    std::int64_t end_frame = 0;
    /// event frame - end frame; absent when the track has no event.
    std::optional<std::int64_t> tte;
    int label = 0;
    std::size_t last() const noexcept { return first + length - 1; }
    bool operator==(const WindowSample&) const = default;
};

/// floor(T * (1 - overlap)), at least 1.
std::size_t window_stride(std::size_t T, double overlap);

/// Windows end at the earliest admissible end index and every stride after it.
/// Crossing tracks keep ends whose TTE lies in `tte`; other tracks keep every
/// full window. Throws ValidationError when T exceeds the track length.
std::vector<WindowSample> sample_windows(const AnnotationRecord& record, std::size_t T, TteRange tte, double overlap);

} // namespace gtpdm::data
