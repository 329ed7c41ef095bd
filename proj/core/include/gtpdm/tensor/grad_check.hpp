// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gtpdm/tensor/tape.hpp"

namespace gtpdm {

struct GradCheckOptions {
    double step = 1e-5;
    /// Checks at most this many entries per parameter (evenly spaced); 0 = all.
    std::size_t max_entries_per_param = 0;
    /// Floor on the per-parameter gradient scale, so an all-zero gradient
    /// compares in absolute terms.
    double scale_floor = 1e-8;
    /// An entry whose |analytic - numeric| exceeds this fraction of
    /// max(|analytic|, |numeric|) is re-estimated with steps h/10, h/100, ...
    /// keeping the closest estimate. A ReLU kink inside [w-h, w+h] disappears
    /// as the interval shrinks; a wrong gradient disagrees at every step.
    double refine_threshold = 1e-6;
    std::size_t refine_levels = 2;
};

struct GradCheckEntry {
    std::string name;
    double max_relative_error = 0.0;
    double gradient_scale = 0.0;
    std::size_t checked = 0;
    std::size_t refined = 0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> params;
    double max_relative_error = 0.0;
    std::size_t refined = 0;
};

/// Builds the scalar loss on the supplied tape. Called once with a recording
/// tape for analytic gradients, then repeatedly on value-only tapes.
using LossBuilder = std::function<Var(Tape&)>;

/// Compares backprop gradients against central differences (f(w+h)-f(w-h))/2h.
///
/// The error for one parameter is max_i |analytic_i - numeric_i| divided by
/// max(max_i |analytic_i|, max_i |numeric_i|, scale_floor); the report's
/// headline figure is the worst parameter. Parameter grads are zeroed first.
GradCheckReport grad_check(const LossBuilder& f, const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

} // namespace gtpdm
