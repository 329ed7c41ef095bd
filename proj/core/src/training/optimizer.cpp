// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/training/optimizer.hpp"

#include <cmath>

#include "gtpdm/errors.hpp"

namespace gtpdm::training {
namespace {

void check_state(std::span<Parameter* const> params, const AdamState& s) {
    if (s.m.size() != params.size() || s.v.size() != params.size()) {
        throw DimensionError("optimizer state holds " + std::to_string(s.m.size()) + " moments for " +
                             std::to_string(params.size()) + " parameters");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Shape& want = params[i]->value.shape();
        if (s.m[i].shape() != want || s.v[i].shape() != want || params[i]->grad.shape() != want) {
            throw DimensionError("optimizer state for '" + params[i]->name + "' does not match shape " +
                                 shape_string(want));
        }
    }
}

void update(std::span<Parameter* const> params, AdamState& s, double lr, double l2, double decay, const AdamHyper& h) {
    check_state(params, s);
    ++s.step;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        double* w = p.value.raw();
        const double* g = p.grad.raw();
        double* m = s.m[i].raw();
        double* v = s.v[i].raw();
        for (std::size_t k = 0; k < p.value.size(); ++k) {
            if (decay != 0.0) w[k] *= 1.0 - decay;
            const double gk = g[k] + l2 * w[k];
            m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * gk;
            v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * gk * gk;
            w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + h.eps);
        }
    }
}

} // namespace

std::string to_string(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "adamw"; }

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "adamw") return OptimizerKind::AdamW;
    throw ConfigError("unknown optimizer '" + s + "', expected adam or adamw");
}

AdamState AdamState::zeros(std::span<Parameter* const> params) {
    AdamState s;
    for (const Parameter* p : params) {
        s.m.emplace_back(p->value.shape());
        s.v.emplace_back(p->value.shape());
    }
    return s;
}

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr, double wd, const AdamHyper& h) {
    update(params, state, lr, wd, 0.0, h);
}

void adamw_step(std::span<Parameter* const> params, AdamState& state, double lr, double wd, const AdamHyper& h) {
    update(params, state, lr, 0.0, lr * wd, h);
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
    if (!(max_norm > 0.0)) throw ConfigError("gradient clip norm must be positive");
    double sq = 0.0;
    for (const Parameter* p : params) {
        for (double g : p->grad.data()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (Parameter* p : params) {
            for (double& g : p->grad.data()) g *= scale;
        }
    }
    return norm;
}

} // namespace gtpdm::training
