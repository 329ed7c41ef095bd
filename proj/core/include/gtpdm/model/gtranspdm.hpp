// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gtpdm/features/skeleton.hpp"
#include "gtpdm/model/config.hpp"
#include "gtpdm/model/input.hpp"
#include "gtpdm/model/parameters.hpp"
#include "gtpdm/tensor/ops.hpp"
#include "gtpdm/tensor/rng.hpp"

namespace gtpdm::model {

struct ForwardOptions {
    bool training = false;
    /// Dropout source; required when training with dropout > 0.
    CounterRng* rng = nullptr;
    bool attention = false;
};

struct ForwardResult {
    Var logits;        // [B, 2]
    Var probabilities; // [B, 2]
    /// Head-averaged attention per layer, each [B, T, T]; empty unless requested.
    std::vector<Tensor> attention;
};

struct Prediction {
    Tensor probabilities; // [B, 2] as (not-cross, cross)
    std::vector<Tensor> attention;

    double cross(std::size_t i) const { return probabilities.at(i, 1); }
};

/// Temporal sequence model over [B, T, C] features.
class TemporalEncoder {
public:
    virtual ~TemporalEncoder() = default;
    virtual Var encode(Tape& tape, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention) = 0;
};

/// Post-norm Transformer encoder with fixed sinusoidal positional encoding.
class TransformerEncoder final : public TemporalEncoder {
public:
    TransformerEncoder(const ModelConfig& cfg, ParameterSet& params, CounterRng init);
    Var encode(Tape& tape, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention) override;

    /// Row t, channel 2i: sin(t / 10000^(2i/C)); channel 2i+1: cos of the same angle.
    static Tensor sinusoidal_encoding(std::size_t T, std::size_t channels);

private:
    struct Layer {
        Parameter *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
        Parameter *ln1_g, *ln1_b, *w1, *b1, *w2, *b2, *ln2_g, *ln2_b;
    };
    Var attend(Tape& tape, const Layer& l, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention);

    ModelConfig cfg_;
    std::vector<Layer> layers_;
    Tensor pe_;
};

/// The crossing-intention network: position, ego and skeleton encoders,
/// channel fusion, temporal encoder and a linear softmax head.
class GTransPDM {
public:
    GTransPDM(ModelConfig cfg, features::SkeletonGraph graph, std::uint64_t seed);
    GTransPDM(const GTransPDM&) = delete;
    GTransPDM& operator=(const GTransPDM&) = delete;

    const ModelConfig& config() const noexcept { return cfg_; }
    const features::SkeletonGraph& graph() const noexcept { return graph_; }
    ParameterSet& parameters() noexcept { return params_; }
    const ParameterSet& parameters() const noexcept { return params_; }
    /// Skeleton input normalization statistics (absent without the pose branch).
    BatchNormState* skeleton_norm() noexcept { return cfg_.use_pose ? &bn_state_ : nullptr; }
    const BatchNormState* skeleton_norm() const noexcept { return cfg_.use_pose ? &bn_state_ : nullptr; }

    std::size_t parameter_count() const { return params_.count(); }
    /// Parameters that exist only because of the pose branch, including the
    /// fusion weights reading the skeleton slice.
    std::size_t skeleton_branch_count() const;

    /// Public pieces of the forward pass, each [B, T, C_d].
    Var positional_encoder(Tape& tape, const ModelInput& in);
    Var ego_encoder(Tape& tape, const ModelInput& in);
    Var skeleton_encoder(Tape& tape, const ModelInput& in, bool training);
    Var fuse(Tape& tape, std::span<const Var> encodings);
    Var transformer_encode(Tape& tape, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention);
    Var classify(Tape& tape, Var x);

    ForwardResult forward(Tape& tape, const ModelInput& in, const ForwardOptions& opts = {});
    /// Mean cross-entropy of `in.labels`.
    Var loss(Tape& tape, const ModelInput& in, const ForwardOptions& opts);
    /// Eval-mode forward on a value-only tape.
    Prediction predict(const ModelInput& in, bool attention = false);

    /// Toggles training of the learnable edge masks.
    void set_edges_trainable(bool trainable);

private:
    Parameter* fc(const std::string& name, std::size_t din, std::size_t dout, ParamGroup g, bool relu_follows,
                  Parameter** bias);
    void check_input(const ModelInput& in) const;

    ModelConfig cfg_;
    features::SkeletonGraph graph_;
    CounterRng init_rng_;
    std::uint64_t init_stream_ = 0;
    ParameterSet params_;
    BatchNormState bn_state_;
    std::unique_ptr<TemporalEncoder> temporal_;
};

} // namespace gtpdm::model
