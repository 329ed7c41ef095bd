// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/tensor/tape.hpp"

#include "gtpdm/errors.hpp"

namespace gtpdm {

namespace {

void require_finite_leaf(const Tensor& v, const char* kind) {
    if (!v.all_finite()) throw NumericError(std::string("non-finite value in tape ") + kind);
}

} // namespace

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
    require_finite_leaf(value, "constant");
    Node n;
    n.owned = std::move(value);
    return push(std::move(n));
}

Var Tape::variable(Tensor value) {
    require_finite_leaf(value, "variable");
    Node n;
    n.owned = std::move(value);
    n.requires_grad = recording_;
    return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
    if (!p.value.all_finite()) throw NumericError("non-finite value in parameter '" + p.name + "'");
    Node n;
    n.external = &p.value;
    if (recording_ && p.trainable) {
        n.requires_grad = true;
        n.grad_target = &p.grad;
    }
    return push(std::move(n));
}

const Tensor* Tape::grad(Var v) const {
    const Node& n = nodes_[v.id()];
    if (!n.has_grad) return nullptr;
    return n.grad_target ? n.grad_target : &n.grad;
}

bool Tape::needs_grad(std::initializer_list<Var> inputs) const {
    if (!recording_) return false;
    for (const Var& v : inputs) {
        if (v.valid() && nodes_[v.id()].requires_grad) return true;
    }
    return false;
}

Var Tape::emit(Tensor out, bool requires_grad, BackwardFn fn, const char* op_name) {
    if (consumed_) throw TapeError(std::string("op '") + op_name + "' recorded on a consumed tape");
    if (!out.all_finite()) {
        throw NumericError(std::string("non-finite value produced by op '") + op_name + "' with output shape " +
                           shape_string(out.shape()));
    }
    const bool tracked = recording_ && requires_grad;
    Node n;
    n.owned = std::move(out);
    n.requires_grad = tracked;
    Var v = push(std::move(n));
    if (tracked) ops_.push_back(Op{v.id(), std::move(fn)});
    return v;
}

Tensor& Tape::grad_of(std::uint32_t id) {
    Node& n = nodes_[id];
    Tensor& g = n.grad_target ? *n.grad_target : n.grad;
    const Shape& want = value_of(id).shape();
    if (!n.has_grad) {
        if (n.grad_target) {
            if (g.shape() != want) g = Tensor(want);
        } else {
            g = Tensor(want);
        }
        n.has_grad = true;
    }
    return g;
}

void Tape::backward(Var loss) {
    if (consumed_) throw TapeError("backward called twice on the same tape; rebuild the forward pass first");
    if (!recording_) throw TapeError("backward on a tape created without gradient recording");
    if (value(loss).size() != 1) {
        throw TapeError("backward requires a scalar loss, got shape " + shape_string(value(loss).shape()));
    }
    consumed_ = true;
    if (!nodes_[loss.id()].requires_grad) return;
    grad_of(loss.id())[0] += 1.0;
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
        Node& out = nodes_[it->output];
        if (!out.has_grad) continue;
        const Tensor& g = out.grad_target ? *out.grad_target : out.grad;
        it->backward(*this, g);
        // an op output's gradient is dead once propagated to its inputs
        if (!out.grad_target) out.grad = Tensor();
    }
    ops_.clear();
    ops_.shrink_to_fit();
}

} // namespace gtpdm
