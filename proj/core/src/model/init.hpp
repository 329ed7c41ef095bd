// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "gtpdm/tensor/rng.hpp"
#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm::model::detail {

inline Tensor uniform_matrix(std::size_t din, std::size_t dout, double bound, CounterRng rng) {
    Tensor w(Shape{din, dout});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
    return w;
}

/// U(-sqrt(6/fan_in), sqrt(6/fan_in)).
inline Tensor kaiming_uniform(std::size_t din, std::size_t dout, CounterRng rng) {
    return uniform_matrix(din, dout, std::sqrt(6.0 / static_cast<double>(din)), rng);
}

/// U(-sqrt(6/(fan_in+fan_out)), +).
inline Tensor xavier_uniform(std::size_t din, std::size_t dout, CounterRng rng) {
    return uniform_matrix(din, dout, std::sqrt(6.0 / static_cast<double>(din + dout)), rng);
}

} // namespace gtpdm::model::detail
