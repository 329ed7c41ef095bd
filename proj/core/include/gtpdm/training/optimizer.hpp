// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gtpdm/tensor/tape.hpp"

namespace gtpdm::training {

enum class OptimizerKind {
    Adam,  // weight decay added to the gradient (L2)
    AdamW, // weight decay applied to the weights directly
};

std::string to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(const std::string& s);

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool operator==(const AdamHyper&) const = default;
};

/// First and second moments per parameter plus the shared step count.
struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;

    /// Zeroed moments shaped like `params`.
    static AdamState zeros(std::span<Parameter* const> params);
    bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update from each parameter's `grad`, with
/// `wd * w` added to the gradient. Throws DimensionError when the state does
/// not match the parameters.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, double wd, const AdamHyper& h = {});

/// As adam_step, but the weights are first scaled by (1 - lr * wd) and the
/// gradient is used as is.
void adamw_step(std::span<Parameter* const> params, AdamState& state, double lr, double wd, const AdamHyper& h = {});

/// Scales every gradient so their joint L2 norm is at most `max_norm`; returns the norm before clipping.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

} // namespace gtpdm::training
