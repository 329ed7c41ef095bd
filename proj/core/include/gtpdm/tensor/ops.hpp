// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>

#include "gtpdm/tensor/rng.hpp"
#include "gtpdm/tensor/tape.hpp"

namespace gtpdm {

/// Running statistics of one batch-norm layer, one entry per channel.
struct BatchNormState {
    Tensor running_mean;
    Tensor running_var;

    BatchNormState() = default;
    explicit BatchNormState(std::size_t channels)
        : running_mean(Shape{channels}, 0.0), running_var(Shape{channels}, 1.0) {}
    bool operator==(const BatchNormState&) const = default;
};

namespace ops {

inline constexpr double kNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

/// [m x k] * [k x n]
Var matmul(Var a, Var b);
/// x[..., d_in] * W[d_in x d_out] + b[d_out]
Var affine(Var x, Var weight, std::optional<Var> bias = std::nullopt);
/// Batched product over a leading group axis: [G,m,k]*[G,k,n], or [G,m,k]*[G,n,k]^T.
Var bmm(Var a, Var b, bool transpose_b = false);
/// Left-multiplies the node axis: adjacency[N x N] applied to x[N, ...].
Var graph_mix(Var adjacency, Var x);

Var add(Var a, Var b);
/// x[..., c...] + c broadcast over the leading axes of x.
Var add_trailing(Var x, Var c);
Var mul(Var a, Var b);
Var scale(Var x, double factor);
Var relu(Var x);
Var softmax(Var x, std::size_t axis);
Var softmax(Var x);

/// Normalizes over the last axis, then applies gamma/beta.
Var layer_norm(Var x, Var gamma, Var beta, double eps = kNormEps);

/// Normalizes each of the `channels` trailing elements using statistics over
/// all leading positions. Training mode uses batch statistics and updates
/// `state` (biased variance); eval mode uses `state`.
Var batch_norm(Var x, std::size_t channels, Var gamma, Var beta, BatchNormState& state, bool training,
               double momentum = kBatchNormMomentum, double eps = kNormEps);

/// Inverted dropout. Identity in eval mode or when p == 0.
Var dropout(Var x, double p, CounterRng& rng, bool training);

/// Concatenation along the last axis.
Var concat(std::span<const Var> parts);
Var reshape(Var x, Shape shape);
Var permute(Var x, std::span<const std::size_t> perm);

/// Mean negative log-likelihood of `labels` under softmax(logits) for logits[B x C].
Var cross_entropy(Var logits, std::span<const int> labels);

Var sum(Var x);
Var mean(Var x);

} // namespace ops
} // namespace gtpdm
