// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/evaluation/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gtpdm/errors.hpp"

namespace gtpdm::evaluation {

Tensor predict_probabilities(model::GTransPDM& model, const data::Dataset& data, std::size_t batch) {
    if (batch == 0) throw ConfigError("evaluation batch size must be positive");
    data::check_compatible(data, model.config());
    Tensor out = Tensor::uninitialized(Shape{data.size(), 2});
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += batch) {
        idx.resize(std::min(batch, data.size() - start));
        std::iota(idx.begin(), idx.end(), start);
        const Tensor p = model.predict(data::make_batch(data, idx)).probabilities;
        std::copy(p.data().begin(), p.data().end(), out.raw() + 2 * start);
    }
    return out;
}

std::vector<double> cross_scores(const Tensor& probabilities) {
    std::vector<double> s(probabilities.shape()[0]);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = probabilities.at(i, 1);
    return s;
}

double mean_cross_entropy(const Tensor& probabilities, std::span<const int> labels) {
    if (labels.empty() || labels.size() != probabilities.shape()[0]) {
        throw DimensionError("cross entropy: " + std::to_string(labels.size()) + " labels for " +
                             shape_string(probabilities.shape()) + " probabilities");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = probabilities.at(i, static_cast<std::size_t>(labels[i]));
        total -= std::log(std::max(p, std::numeric_limits<double>::min()));
    }
    return total / static_cast<double>(labels.size());
}

MetricsReport evaluate(model::GTransPDM& model, const data::Dataset& data, double threshold) {
    const Tensor p = predict_probabilities(model, data);
    return compute_metrics(cross_scores(p), data.labels(), threshold);
}

} // namespace gtpdm::evaluation
