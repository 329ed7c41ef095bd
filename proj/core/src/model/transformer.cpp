// SPDX-License-Identifier: Apache-2.0
#include <array>
#include <cmath>
#include <string>

#include "gtpdm/errors.hpp"
#include "gtpdm/model/gtranspdm.hpp"
#include "init.hpp"

namespace gtpdm::model {
namespace {

Var drop(Var x, double p, const ForwardOptions& opts) {
    if (!opts.training || p == 0.0) return x;
    if (!opts.rng) throw ConfigError("training forward with dropout needs an RNG");
    return ops::dropout(x, p, *opts.rng, true);
}

} // namespace

Tensor TransformerEncoder::sinusoidal_encoding(std::size_t T, std::size_t channels) {
    Tensor pe(Shape{T, channels});
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double pair = static_cast<double>(c - c % 2);
            const double angle = static_cast<double>(t) / std::pow(10000.0, pair / static_cast<double>(channels));
            pe.at(t, c) = c % 2 == 0 ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

TransformerEncoder::TransformerEncoder(const ModelConfig& cfg, ParameterSet& params, CounterRng init)
    : cfg_(cfg), pe_(sinusoidal_encoding(cfg.T, cfg.channels)) {
    const std::size_t C = cfg.channels, F = cfg.ff_dim;
    std::uint64_t stream = 0;
    const auto weight = [&](const std::string& name, std::size_t din, std::size_t dout, bool relu) {
        CounterRng r = init.derive(stream++);
        return &params.add(name, relu ? detail::kaiming_uniform(din, dout, r) : detail::xavier_uniform(din, dout, r),
                           ParamGroup::Transformer);
    };
    const auto vec = [&](const std::string& name, std::size_t n, double fill) {
        return &params.add(name, Tensor(Shape{n}, fill), ParamGroup::Transformer);
    };
    for (std::size_t i = 0; i < cfg.layers; ++i) {
        const std::string p = "temporal." + std::to_string(i) + ".";
        Layer l{};
        l.wq = weight(p + "attn.q.weight", C, C, false);
        l.bq = vec(p + "attn.q.bias", C, 0.0);
        l.wk = weight(p + "attn.k.weight", C, C, false);
        l.bk = vec(p + "attn.k.bias", C, 0.0);
        l.wv = weight(p + "attn.v.weight", C, C, false);
        l.bv = vec(p + "attn.v.bias", C, 0.0);
        l.wo = weight(p + "attn.out.weight", C, C, false);
        l.bo = vec(p + "attn.out.bias", C, 0.0);
        l.ln1_g = vec(p + "norm1.gamma", C, 1.0);
        l.ln1_b = vec(p + "norm1.beta", C, 0.0);
        l.w1 = weight(p + "ff1.weight", C, F, true);
        l.b1 = vec(p + "ff1.bias", F, 0.0);
        l.w2 = weight(p + "ff2.weight", F, C, false);
        l.b2 = vec(p + "ff2.bias", C, 0.0);
        l.ln2_g = vec(p + "norm2.gamma", C, 1.0);
        l.ln2_b = vec(p + "norm2.beta", C, 0.0);
        layers_.push_back(l);
    }
}

Var TransformerEncoder::attend(Tape& tape, const Layer& l, Var x, const ForwardOptions& opts,
                                std::vector<Tensor>* attention) {
    const std::size_t B = x.shape()[0], T = x.shape()[1], C = cfg_.channels, H = cfg_.heads, dh = C / H;
    static constexpr std::array<std::size_t, 4> kSplit{0, 2, 1, 3};
    const auto heads = [&](Parameter* w, Parameter* b) {
        Var y = ops::affine(x, tape.parameter(*w), tape.parameter(*b));
        return ops::reshape(ops::permute(ops::reshape(y, Shape{B, T, H, dh}), kSplit), Shape{B * H, T, dh});
    };
    Var q = heads(l.wq, l.bq), k = heads(l.wk, l.bk), v = heads(l.wv, l.bv);
    Var a = ops::softmax(ops::scale(ops::bmm(q, k, true), 1.0 / std::sqrt(static_cast<double>(dh))), 2);
    if (attention) {
        const Tensor& av = a.value();
        Tensor avg(Shape{B, T, T});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t h = 0; h < H; ++h) {
                const double* src = av.raw() + (b * H + h) * T * T;
                double* dst = avg.raw() + b * T * T;
                for (std::size_t i = 0; i < T * T; ++i) dst[i] += src[i] / static_cast<double>(H);
            }
        }
        attention->push_back(std::move(avg));
    }
    a = drop(a, cfg_.dropout, opts);
    Var ctx = ops::reshape(ops::permute(ops::reshape(ops::bmm(a, v), Shape{B, H, T, dh}), kSplit), Shape{B, T, C});
    return ops::affine(ctx, tape.parameter(*l.wo), tape.parameter(*l.bo));
}

Var TransformerEncoder::encode(Tape& tape, Var x, const ForwardOptions& opts, std::vector<Tensor>* attention) {
    if (x.shape().size() != 3 || x.shape()[1] != cfg_.T || x.shape()[2] != cfg_.channels) {
        throw DimensionError("temporal encoder expects [B, " + std::to_string(cfg_.T) + ", " +
                             std::to_string(cfg_.channels) + "], got " + shape_string(x.shape()));
    }
    if (cfg_.positional_encoding) x = ops::add_trailing(x, tape.constant(pe_));
    x = drop(x, cfg_.dropout, opts);
    for (const Layer& l : layers_) {
        Var a = attend(tape, l, x, opts, attention);
        x = ops::layer_norm(ops::add(x, drop(a, cfg_.dropout, opts)), tape.parameter(*l.ln1_g),
                            tape.parameter(*l.ln1_b));
        Var h = ops::relu(ops::affine(x, tape.parameter(*l.w1), tape.parameter(*l.b1)));
        Var f = ops::affine(drop(h, cfg_.dropout, opts), tape.parameter(*l.w2), tape.parameter(*l.b2));
        x = ops::layer_norm(ops::add(x, drop(f, cfg_.dropout, opts)), tape.parameter(*l.ln2_g),
                            tape.parameter(*l.ln2_b));
    }
    return x;
}

} // namespace gtpdm::model
