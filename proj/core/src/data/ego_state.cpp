// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/data/ego_state.hpp"

#include <algorithm>
#include <array>

#include "gtpdm/errors.hpp"

namespace gtpdm::data {

std::span<const std::string> default_ego_vocabulary() {
    static const std::array<std::string, 5> vocab{"stopped", "moving_slow", "moving_fast", "decelerating",
                                                  "accelerating"};
    return vocab;
}

std::vector<double> ego_state_onehot(std::string_view symbol, std::span<const std::string> vocabulary) {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), symbol);
    if (it == vocabulary.end()) {
        std::string known;
        for (const auto& v : vocabulary) known += (known.empty() ? "" : ", ") + v;
        throw ValidationError("unknown ego state '" + std::string(symbol) + "' (vocabulary: " + known + ")");
    }
    std::vector<double> v(vocabulary.size(), 0.0);
    v[static_cast<std::size_t>(it - vocabulary.begin())] = 1.0;
    return v;
}

} // namespace gtpdm::data
