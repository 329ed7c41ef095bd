// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gtpdm::data {

/// Vehicle motion states used when no speed signal exists.
std::span<const std::string> default_ego_vocabulary();

/// Unit vector at the symbol's vocabulary index. Throws ValidationError for
/// unknown symbols.
std::vector<double> ego_state_onehot(std::string_view symbol, std::span<const std::string> vocabulary);

} // namespace gtpdm::data
