// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "gtpdm/tensor/tensor.hpp"

namespace gtpdm {

/// A named trainable array. Gradients accumulate into `grad` when the
/// parameter takes part in a recorded forward pass.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

    void zero_grad() {
        if (grad.shape() != value.shape()) grad = Tensor(value.shape());
        else grad.fill(0.0);
    }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; only valid while its tape lives.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
    Tape& tape() const { return *tape_; }
    std::uint32_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::uint32_t id_ = 0;
};

/// Records operations in execution order for reverse-mode differentiation.
///
/// Each op pushes its output node and, when any input needs a gradient, a
/// closure that maps the output gradient onto its inputs. `backward` replays
/// the closures in exact reverse order and then marks the tape consumed; a
/// second call is an error until the graph is rebuilt on a fresh tape.
///
/// A tape constructed with `record = false` keeps values only, which is the
/// inference path.
class Tape {
public:
    /// Receives the gradient of the op's output.
    using BackwardFn = std::function<void(Tape&, const Tensor&)>;

    explicit Tape(bool record = true) : recording_(record) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    /// Leaf whose gradient is kept on the tape and readable through `grad`.
    Var variable(Tensor value);
    /// Leaf referencing external storage; gradient accumulates into `p.grad`.
    /// Non-trainable parameters enter as constants.
    Var parameter(Parameter& p);

    const Tensor& value(Var v) const { return value_of(v.id()); }
    /// nullptr when no gradient reached the node.
    const Tensor* grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    bool recording() const noexcept { return recording_; }
    bool consumed() const noexcept { return consumed_; }
    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_ops() const noexcept { return ops_.size(); }

    void backward(Var loss);

    // --- op authoring interface -------------------------------------------
    bool needs_grad(std::initializer_list<Var> inputs) const;
    /// Appends an op output. `fn` is kept only when recording and `requires_grad`.
    Var emit(Tensor out, bool requires_grad, BackwardFn fn, const char* op_name);
    const Tensor& value_of(std::uint32_t id) const {
        const Node& n = nodes_[id];
        return n.external ? *n.external : n.owned;
    }
    bool node_requires_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
    /// Gradient accumulator for a node, zero-allocated on first use.
    Tensor& grad_of(std::uint32_t id);

private:
    struct Node {
        Tensor owned;
        const Tensor* external = nullptr;
        Tensor grad;
        Tensor* grad_target = nullptr;
        bool requires_grad = false;
        bool has_grad = false;
    };
    struct Op {
        std::uint32_t output;
        BackwardFn backward;
    };

    Var push(Node node);

    // deque: references returned by value() survive later pushes
    std::deque<Node> nodes_;
    std::vector<Op> ops_;
    bool recording_;
    bool consumed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(*this); }

} // namespace gtpdm
