// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/data/windows.hpp"

#include <cmath>
#include <string>

#include "gtpdm/errors.hpp"

namespace gtpdm::data {

void TteRange::validate() const {
    if (lo < 0 || hi < lo) {
        throw ConfigError("tte range [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty or negative");
    }
}

std::size_t window_stride(std::size_t T, double overlap) {
    if (!(overlap >= 0.0 && overlap < 1.0)) {
        throw ConfigError("window overlap " + std::to_string(overlap) + " outside [0, 1)");
    }
    const auto s = static_cast<std::size_t>(std::floor(static_cast<double>(T) * (1.0 - overlap)));
    return s == 0 ? 1 : s;
}

std::vector<WindowSample> sample_windows(const AnnotationRecord& record, std::size_t T, TteRange tte, double overlap) {
    tte.validate();
    const std::size_t stride = window_stride(T, overlap);
    if (T == 0) throw ConfigError("window length must be positive");
    const std::size_t n = record.length();
    if (T > n) {
        throw ValidationError("track '" + record.pedestrian_id + "': window length " + std::to_string(T) +
                              " exceeds track length " + std::to_string(n));
    }
    const bool filtered = record.crossing && record.event_frame.has_value();
    const auto tte_at = [&](std::size_t end) -> std::optional<std::int64_t> {
        if (!record.event_frame) return std::nullopt;
        return *record.event_frame - record.frames[end];
    };

    std::size_t anchor = T - 1;
    if (filtered) {
        // TTE shrinks as the end advances; skip ends still too far from the event
        while (anchor < n && *tte_at(anchor) > tte.hi) ++anchor;
    }
    std::vector<WindowSample> out;
    for (std::size_t end = anchor; end < n; end += stride) {
        const auto t = tte_at(end);
        if (filtered && !tte.contains(*t)) {
            if (*t < tte.lo) break;
            continue;
        }
        out.push_back({end + 1 - T, T, record.frames[end], t, record.crossing ? 1 : 0});
    }
    return out;
}

} // namespace gtpdm::data
