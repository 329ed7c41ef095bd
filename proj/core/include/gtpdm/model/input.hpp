// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm::model {

/// One batch of model-ready features. Tensors for disabled branches may be
/// left empty.
struct ModelInput {
    std::size_t batch = 0;
    Tensor pdm;          // [B, T, 3]
    Tensor displacement; // [B, T, 2]
    Tensor velocity;     // [B, T, 2]
    Tensor ego;          // [B, T, 1] speed, or [B, T, S] one-hot state
    Tensor accel;        // [B, T, 1]
    Tensor keypoints;    // [B, T, N, 3]
    std::vector<int> labels;
};

} // namespace gtpdm::model
