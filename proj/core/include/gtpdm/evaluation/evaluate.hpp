// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "gtpdm/data/dataset.hpp"
#include "gtpdm/evaluation/metrics.hpp"
#include "gtpdm/model/gtranspdm.hpp"

namespace gtpdm::evaluation {

inline constexpr std::size_t kEvalBatch = 256;

/// Eval-mode (not-cross, cross) probabilities for every window, [N, 2].
Tensor predict_probabilities(model::GTransPDM& model, const data::Dataset& data, std::size_t batch = kEvalBatch);

/// Cross-probability column of `predict_probabilities`.
std::vector<double> cross_scores(const Tensor& probabilities);

/// Mean negative log-likelihood of `labels`; probabilities are floored at the smallest normal double.
double mean_cross_entropy(const Tensor& probabilities, std::span<const int> labels);

/// Checks compatibility, predicts and scores the whole dataset.
MetricsReport evaluate(model::GTransPDM& model, const data::Dataset& data, double threshold = kDefaultThreshold);

} // namespace gtpdm::evaluation
