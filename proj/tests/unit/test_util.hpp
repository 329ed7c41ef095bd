// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>

#include "gtpdm/tensor/ops.hpp"
#include "gtpdm/tensor/rng.hpp"
#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm::test {

inline Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    CounterRng rng(seed);
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

/// Random values kept at least `gap` away from zero, for ReLU/abs kinks.
inline Tensor random_away_from_zero(Shape shape, std::uint64_t seed, double gap = 0.05) {
    Tensor t = random_tensor(std::move(shape), seed);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::abs(t[i]) < gap) t[i] = t[i] < 0 ? t[i] - gap : t[i] + gap;
    }
    return t;
}

/// sum(x * w) for a fixed random w, so every output entry gets a distinct weight.
inline Var weighted_sum(Var x, std::uint64_t seed) {
    Var w = x.tape().constant(random_tensor(x.shape(), seed));
    return ops::sum(ops::mul(x, w));
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace gtpdm::test
