// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/model/gtranspdm.hpp"

#include <array>
#include <string>

#include "gtpdm/errors.hpp"
#include "init.hpp"

namespace gtpdm::model {
namespace {

constexpr std::array<std::size_t, 3> kSwapLeading{1, 0, 2};

std::string layer_name(const char* prefix, std::size_t l, const char* suffix) {
    return std::string(prefix) + std::to_string(l) + suffix;
}

void expect_shape(const Tensor& t, const Shape& want, const char* what) {
    if (t.shape() != want) {
        throw DimensionError(std::string("model input '") + what + "' has shape " + shape_string(t.shape()) +
                             ", expected " + shape_string(want));
    }
}

} // namespace

GTransPDM::GTransPDM(ModelConfig cfg, features::SkeletonGraph graph, std::uint64_t seed)
    : cfg_(std::move(cfg)), graph_(std::move(graph)), init_rng_(seed) {
    cfg_.validate();
    const std::size_t C = cfg_.channels, D = cfg_.gcn_hidden, N = cfg_.joints;
    if (cfg_.use_pose && graph_.nodes != N) {
        throw ConfigError("skeleton graph has " + std::to_string(graph_.nodes) + " nodes but model.joints is " +
                          std::to_string(N));
    }
    Parameter* unused = nullptr;
    if (cfg_.use_position) {
        if (cfg_.use_pdm) fc("position.pdm", 3, C, ParamGroup::Position, false, &unused);
        if (cfg_.use_displacement) fc("position.displacement", 2, C, ParamGroup::Position, false, &unused);
        if (cfg_.use_velocity) fc("position.velocity", 2, C, ParamGroup::Position, false, &unused);
        fc("position.fuse", cfg_.position_streams() * C, C, ParamGroup::Position, false, &unused);
    }
    if (cfg_.use_ego) {
        fc("ego.state", cfg_.ego_input_width(), C, ParamGroup::Ego, false, &unused);
        if (cfg_.use_accel) fc("ego.accel", 1, C, ParamGroup::Ego, false, &unused);
        fc("ego.fuse", (cfg_.use_accel ? 2 : 1) * C, C, ParamGroup::Ego, false, &unused);
    }
    if (cfg_.use_pose) {
        const std::size_t in = N * cfg_.joint_channels;
        params_.add("skeleton.norm.gamma", Tensor(Shape{in}, 1.0), ParamGroup::Skeleton);
        params_.add("skeleton.norm.beta", Tensor(Shape{in}, 0.0), ParamGroup::Skeleton);
        bn_state_ = BatchNormState(in);
        for (std::size_t l = 0; l < cfg_.gcn_layers; ++l) {
            const std::size_t din = l == 0 ? cfg_.joint_channels : D;
            fc(layer_name("skeleton.gcn", l, ""), din, D, ParamGroup::Skeleton, true, nullptr);
            if (l > 0) fc(layer_name("skeleton.gcn", l, ".residual"), D, D, ParamGroup::Skeleton, true, &unused);
            if (cfg_.learnable_edges) {
                params_.add(layer_name("skeleton.gcn", l, ".edge"), Tensor(Shape{N, N}, 1.0), ParamGroup::Skeleton);
            }
        }
        fc("skeleton.project", N * D, C, ParamGroup::Skeleton, false, &unused);
    }
    fc("fusion", cfg_.encoder_count() * C, C, ParamGroup::Fusion, false, &unused);
    temporal_ = std::make_unique<TransformerEncoder>(cfg_, params_, init_rng_.derive(1u << 20));
    fc("head", cfg_.T * C, 2, ParamGroup::Head, false, &unused);
}

Parameter* GTransPDM::fc(const std::string& name, std::size_t din, std::size_t dout, ParamGroup g, bool relu_follows,
                         Parameter** bias) {
    CounterRng r = init_rng_.derive(init_stream_++);
    Parameter* w = &params_.add(name + ".weight",
                                relu_follows ? detail::kaiming_uniform(din, dout, r) : detail::xavier_uniform(din, dout, r),
                                g);
    if (bias) *bias = &params_.add(name + ".bias", Tensor(Shape{dout}), g);
    return w;
}

std::size_t GTransPDM::skeleton_branch_count() const {
    if (!cfg_.use_pose) return 0;
    return params_.count(ParamGroup::Skeleton) + cfg_.channels * cfg_.channels;
}

void GTransPDM::set_edges_trainable(bool trainable) {
    if (!cfg_.use_pose || !cfg_.learnable_edges) return;
    for (std::size_t l = 0; l < cfg_.gcn_layers; ++l) params_.get(layer_name("skeleton.gcn", l, ".edge")).trainable = trainable;
}

void GTransPDM::check_input(const ModelInput& in) const {
    const std::size_t B = in.batch, T = cfg_.T;
    if (B == 0) throw ValidationError("model input batch is empty");
    if (cfg_.use_position) {
        if (cfg_.use_pdm) expect_shape(in.pdm, Shape{B, T, 3}, "pdm");
        if (cfg_.use_displacement) expect_shape(in.displacement, Shape{B, T, 2}, "displacement");
        if (cfg_.use_velocity) expect_shape(in.velocity, Shape{B, T, 2}, "velocity");
    }
    if (cfg_.use_ego) {
        expect_shape(in.ego, Shape{B, T, cfg_.ego_input_width()}, "ego");
        if (cfg_.use_accel) expect_shape(in.accel, Shape{B, T, 1}, "accel");
    }
    if (cfg_.use_pose) expect_shape(in.keypoints, Shape{B, T, cfg_.joints, cfg_.joint_channels}, "keypoints");
}

Var GTransPDM::positional_encoder(Tape& tape, const ModelInput& in) {
    std::vector<Var> parts;
    const auto stream = [&](const char* name, const Tensor& x) {
        const std::string p = std::string("position.") + name;
        parts.push_back(ops::affine(tape.constant(x), tape.parameter(params_.get(p + ".weight")),
                                    tape.parameter(params_.get(p + ".bias"))));
    };
    if (cfg_.use_pdm) stream("pdm", in.pdm);
    if (cfg_.use_displacement) stream("displacement", in.displacement);
    if (cfg_.use_velocity) stream("velocity", in.velocity);
    return ops::affine(ops::concat(parts), tape.parameter(params_.get("position.fuse.weight")),
                       tape.parameter(params_.get("position.fuse.bias")));
}

Var GTransPDM::ego_encoder(Tape& tape, const ModelInput& in) {
    std::vector<Var> parts;
    parts.push_back(ops::affine(tape.constant(in.ego), tape.parameter(params_.get("ego.state.weight")),
                                tape.parameter(params_.get("ego.state.bias"))));
    if (cfg_.use_accel) {
        parts.push_back(ops::affine(tape.constant(in.accel), tape.parameter(params_.get("ego.accel.weight")),
                                    tape.parameter(params_.get("ego.accel.bias"))));
    }
    return ops::affine(ops::concat(parts), tape.parameter(params_.get("ego.fuse.weight")),
                       tape.parameter(params_.get("ego.fuse.bias")));
}

Var GTransPDM::skeleton_encoder(Tape& tape, const ModelInput& in, bool training) {
    const std::size_t B = in.batch, T = cfg_.T, N = cfg_.joints, J = cfg_.joint_channels, D = cfg_.gcn_hidden;
    Var x = ops::reshape(tape.constant(in.keypoints), Shape{B * T, N * J});
    x = ops::batch_norm(x, N * J, tape.parameter(params_.get("skeleton.norm.gamma")),
                        tape.parameter(params_.get("skeleton.norm.beta")), bn_state_, training);
    // node-major [N, B*T, channels] so each graph product is one GEMM
    Var h = ops::permute(ops::reshape(x, Shape{B * T, N, J}), kSwapLeading);
    Var adj = tape.constant(graph_.normalized);
    for (std::size_t l = 0; l < cfg_.gcn_layers; ++l) {
        Var mask = cfg_.learnable_edges ? ops::mul(tape.parameter(params_.get(layer_name("skeleton.gcn", l, ".edge"))), adj)
                                        : adj;
        Var w = tape.parameter(params_.get(layer_name("skeleton.gcn", l, ".weight")));
        if (l == 0) {
            h = ops::relu(ops::affine(ops::graph_mix(mask, h), w));
        } else {
            Var res = ops::affine(h, tape.parameter(params_.get(layer_name("skeleton.gcn", l, ".residual.weight"))),
                                  tape.parameter(params_.get(layer_name("skeleton.gcn", l, ".residual.bias"))));
            h = ops::relu(ops::add(ops::graph_mix(mask, ops::affine(h, w)), res));
        }
    }
    Var flat = ops::reshape(ops::permute(h, kSwapLeading), Shape{B, T, N * D});
    return ops::affine(flat, tape.parameter(params_.get("skeleton.project.weight")),
                       tape.parameter(params_.get("skeleton.project.bias")));
}

Var GTransPDM::fuse(Tape& tape, std::span<const Var> encodings) {
    const std::size_t want = cfg_.encoder_count();
    if (encodings.size() != want) {
        throw DimensionError("fuse: expected " + std::to_string(want) + " encodings, got " +
                             std::to_string(encodings.size()));
    }
    return ops::affine(ops::concat(encodings), tape.parameter(params_.get("fusion.weight")),
                       tape.parameter(params_.get("fusion.bias")));
}

Var GTransPDM::transformer_encode(Tape& tape, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention) {
    return temporal_->encode(tape, x, opts, attention);
}

Var GTransPDM::classify(Tape& tape, Var x) {
    const std::size_t B = x.shape()[0];
    Var flat = ops::reshape(x, Shape{B, cfg_.T * cfg_.channels});
    return ops::affine(flat, tape.parameter(params_.get("head.weight")), tape.parameter(params_.get("head.bias")));
}

ForwardResult GTransPDM::forward(Tape& tape, const ModelInput& in, const ForwardOptions& opts) {
    check_input(in);
    std::vector<Var> enc;
    if (cfg_.use_position) enc.push_back(positional_encoder(tape, in));
    if (cfg_.use_ego) enc.push_back(ego_encoder(tape, in));
    if (cfg_.use_pose) enc.push_back(skeleton_encoder(tape, in, opts.training));
    ForwardResult r;
    Var x = transformer_encode(tape, fuse(tape, enc), opts, opts.attention ? &r.attention : nullptr);
    r.logits = classify(tape, x);
    r.probabilities = ops::softmax(r.logits, 1);
    return r;
}

Var GTransPDM::loss(Tape& tape, const ModelInput& in, const ForwardOptions& opts) {
    if (in.labels.size() != in.batch) {
        throw ValidationError("batch has " + std::to_string(in.batch) + " samples but " +
                              std::to_string(in.labels.size()) + " labels");
    }
    return ops::cross_entropy(forward(tape, in, opts).logits, in.labels);
}

Prediction GTransPDM::predict(const ModelInput& in, bool attention) {
    Tape tape(false);
    ForwardOptions opts;
    opts.attention = attention;
    ForwardResult r = forward(tape, in, opts);
    return {r.probabilities.value(), std::move(r.attention)};
}

} // namespace gtpdm::model
