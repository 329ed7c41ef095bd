// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "gtpdm/errors.hpp"

namespace gtpdm::ops {
namespace {

using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<MatR>;
using CMap = Eigen::Map<const MatR>;
using Idx = Eigen::Index;

Idx as_idx(std::size_t n) { return static_cast<Idx>(n); }

CMap cmap(const Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return CMap(t.raw() + offset, as_idx(rows), as_idx(cols));
}
Map map(Tensor& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return Map(t.raw() + offset, as_idx(rows), as_idx(cols));
}

void same_tape(Var a, Var b, const char* op) {
    if (&a.tape() != &b.tape()) throw TapeError(std::string(op) + ": operands live on different tapes");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

void accumulate(Tensor& dst, const Tensor& src) {
    double* d = dst.raw();
    const double* s = src.raw();
    for (std::size_t i = 0, n = dst.size(); i < n; ++i) d[i] += s[i];
}

} // namespace

Var matmul(Var a, Var b) {
    same_tape(a, b, "matmul");
    Tape& tape = a.tape();
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
        throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " +
                             shape_string(bv.shape()));
    }
    const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out = Tensor::uninitialized(Shape{m, n});
    map(out, m, n).noalias() = cmap(av, m, k) * cmap(bv, k, n);
    const std::uint32_t ia = a.id(), ib = b.id();
    return tape.emit(std::move(out), tape.needs_grad({a, b}),
                     [ia, ib, m, k, n](Tape& t, const Tensor& g) {
                         const CMap gm = cmap(g, m, n);
                         if (t.node_requires_grad(ia)) {
                             map(t.grad_of(ia), m, k).noalias() += gm * cmap(t.value_of(ib), k, n).transpose();
                         }
                         if (t.node_requires_grad(ib)) {
                             map(t.grad_of(ib), k, n).noalias() += cmap(t.value_of(ia), m, k).transpose() * gm;
                         }
                     },
                     "matmul");
}

Var affine(Var x, Var weight, std::optional<Var> bias) {
    same_tape(x, weight, "affine");
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    const Tensor& wv = weight.value();
    if (wv.rank() != 2 || xv.rank() == 0 || xv.shape().back() != wv.dim(0)) {
        throw DimensionError("affine: input " + shape_string(xv.shape()) + " incompatible with weight " +
                             shape_string(wv.shape()));
    }
    const std::size_t din = wv.dim(0), dout = wv.dim(1);
    const std::size_t rows = xv.size() / din;
    if (bias && (bias->value().rank() != 1 || bias->value().dim(0) != dout)) {
        throw DimensionError("affine: bias " + shape_string(bias->value().shape()) + " does not match width " +
                             std::to_string(dout));
    }
    Shape out_shape = xv.shape();
    out_shape.back() = dout;
    Tensor out = Tensor::uninitialized(out_shape);
    Map om = map(out, rows, dout);
    om.noalias() = cmap(xv, rows, din) * cmap(wv, din, dout);
    if (bias) {
        const Eigen::Map<const Eigen::RowVectorXd> bv(bias->value().raw(), as_idx(dout));
        om.rowwise() += bv;
    }
    const std::uint32_t ix = x.id(), iw = weight.id();
    const std::int64_t ib = bias ? static_cast<std::int64_t>(bias->id()) : -1;
    const bool needs = bias ? tape.needs_grad({x, weight, *bias}) : tape.needs_grad({x, weight});
    return tape.emit(std::move(out), needs,
                     [ix, iw, ib, rows, din, dout](Tape& t, const Tensor& g) {
                         const CMap gm = cmap(g, rows, dout);
                         if (t.node_requires_grad(ix)) {
                             map(t.grad_of(ix), rows, din).noalias() += gm * cmap(t.value_of(iw), din, dout).transpose();
                         }
                         if (t.node_requires_grad(iw)) {
                             map(t.grad_of(iw), din, dout).noalias() += cmap(t.value_of(ix), rows, din).transpose() * gm;
                         }
                         if (ib >= 0 && t.node_requires_grad(static_cast<std::uint32_t>(ib))) {
                             Eigen::Map<Eigen::RowVectorXd> gb(t.grad_of(static_cast<std::uint32_t>(ib)).raw(),
                                                               as_idx(dout));
                             gb += gm.colwise().sum();
                         }
                     },
                     "affine");
}

Var bmm(Var a, Var b, bool transpose_b) {
    same_tape(a, b, "bmm");
    Tape& tape = a.tape();
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.rank() != 3 || bv.rank() != 3 || av.dim(0) != bv.dim(0)) {
        throw DimensionError("bmm: incompatible operands " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    const std::size_t groups = av.dim(0), m = av.dim(1), k = av.dim(2);
    const std::size_t n = transpose_b ? bv.dim(1) : bv.dim(2);
    const std::size_t kb = transpose_b ? bv.dim(2) : bv.dim(1);
    if (kb != k) {
        throw DimensionError("bmm: inner dimensions differ for " + shape_string(av.shape()) + " and " +
                             shape_string(bv.shape()));
    }
    Tensor out = Tensor::uninitialized(Shape{groups, m, n});
    for (std::size_t g = 0; g < groups; ++g) {
        if (transpose_b) {
            map(out, m, n, g * m * n).noalias() = cmap(av, m, k, g * m * k) * cmap(bv, n, k, g * n * k).transpose();
        } else {
            map(out, m, n, g * m * n).noalias() = cmap(av, m, k, g * m * k) * cmap(bv, k, n, g * k * n);
        }
    }
    const std::uint32_t ia = a.id(), ib = b.id();
    return tape.emit(std::move(out), tape.needs_grad({a, b}),
                     [ia, ib, groups, m, k, n, transpose_b](Tape& t, const Tensor& gout) {
                         const bool need_a = t.node_requires_grad(ia);
                         const bool need_b = t.node_requires_grad(ib);
                         Tensor* ga = need_a ? &t.grad_of(ia) : nullptr;
                         Tensor* gb = need_b ? &t.grad_of(ib) : nullptr;
                         const Tensor& av2 = t.value_of(ia);
                         const Tensor& bv2 = t.value_of(ib);
                         for (std::size_t g = 0; g < groups; ++g) {
                             const CMap gm = cmap(gout, m, n, g * m * n);
                             if (transpose_b) {
                                 // out = A B^T
                                 if (ga) map(*ga, m, k, g * m * k).noalias() += gm * cmap(bv2, n, k, g * n * k);
                                 if (gb) map(*gb, n, k, g * n * k).noalias() += gm.transpose() * cmap(av2, m, k, g * m * k);
                             } else {
                                 if (ga) {
                                     map(*ga, m, k, g * m * k).noalias() += gm * cmap(bv2, k, n, g * k * n).transpose();
                                 }
                                 if (gb) {
                                     map(*gb, k, n, g * k * n).noalias() += cmap(av2, m, k, g * m * k).transpose() * gm;
                                 }
                             }
                         }
                     },
                     "bmm");
}

Var graph_mix(Var adjacency, Var x) {
    same_tape(adjacency, x, "graph_mix");
    Tape& tape = x.tape();
    const Tensor& av = adjacency.value();
    const Tensor& xv = x.value();
    if (av.rank() != 2 || av.dim(0) != av.dim(1) || xv.rank() < 1 || xv.dim(0) != av.dim(0)) {
        throw DimensionError("graph_mix: adjacency " + shape_string(av.shape()) + " does not match node axis of " +
                             shape_string(xv.shape()));
    }
    const std::size_t nodes = av.dim(0);
    const std::size_t cols = xv.size() / nodes;
    Tensor out = Tensor::uninitialized(xv.shape());
    map(out, nodes, cols).noalias() = cmap(av, nodes, nodes) * cmap(xv, nodes, cols);
    const std::uint32_t ia = adjacency.id(), ix = x.id();
    return tape.emit(std::move(out), tape.needs_grad({adjacency, x}),
                     [ia, ix, nodes, cols](Tape& t, const Tensor& g) {
                         const CMap gm = cmap(g, nodes, cols);
                         if (t.node_requires_grad(ix)) {
                             map(t.grad_of(ix), nodes, cols).noalias() +=
                                 cmap(t.value_of(ia), nodes, nodes).transpose() * gm;
                         }
                         if (t.node_requires_grad(ia)) {
                             map(t.grad_of(ia), nodes, nodes).noalias() +=
                                 gm * cmap(t.value_of(ix), nodes, cols).transpose();
                         }
                     },
                     "graph_mix");
}

Var add(Var a, Var b) {
    same_tape(a, b, "add");
    Tape& tape = a.tape();
    require_same_shape(a.value(), b.value(), "add");
    Tensor out = a.value();
    accumulate(out, b.value());
    const std::uint32_t ia = a.id(), ib = b.id();
    return tape.emit(std::move(out), tape.needs_grad({a, b}),
                     [ia, ib](Tape& t, const Tensor& g) {
                         if (t.node_requires_grad(ia)) accumulate(t.grad_of(ia), g);
                         if (t.node_requires_grad(ib)) accumulate(t.grad_of(ib), g);
                     },
                     "add");
}

Var add_trailing(Var x, Var c) {
    same_tape(x, c, "add_trailing");
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    const Tensor& cv = c.value();
    const Shape& xs = xv.shape();
    const Shape& cs = cv.shape();
    if (cs.size() > xs.size() || !std::equal(cs.rbegin(), cs.rend(), xs.rbegin())) {
        throw DimensionError("add_trailing: " + shape_string(cs) + " is not a trailing shape of " + shape_string(xs));
    }
    const std::size_t inner = cv.size();
    const std::size_t outer = xv.size() / inner;
    Tensor out = xv;
    for (std::size_t o = 0; o < outer; ++o) {
        double* row = out.raw() + o * inner;
        for (std::size_t i = 0; i < inner; ++i) row[i] += cv[i];
    }
    const std::uint32_t ix = x.id(), ic = c.id();
    return tape.emit(std::move(out), tape.needs_grad({x, c}),
                     [ix, ic, outer, inner](Tape& t, const Tensor& g) {
                         if (t.node_requires_grad(ix)) accumulate(t.grad_of(ix), g);
                         if (t.node_requires_grad(ic)) {
                             Tensor& gc = t.grad_of(ic);
                             for (std::size_t o = 0; o < outer; ++o) {
                                 const double* row = g.raw() + o * inner;
                                 for (std::size_t i = 0; i < inner; ++i) gc[i] += row[i];
                             }
                         }
                     },
                     "add_trailing");
}

Var mul(Var a, Var b) {
    same_tape(a, b, "mul");
    Tape& tape = a.tape();
    require_same_shape(a.value(), b.value(), "mul");
    Tensor out = a.value();
    const Tensor& bv = b.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    const std::uint32_t ia = a.id(), ib = b.id();
    return tape.emit(std::move(out), tape.needs_grad({a, b}),
                     [ia, ib](Tape& t, const Tensor& g) {
                         if (t.node_requires_grad(ia)) {
                             Tensor& ga = t.grad_of(ia);
                             const Tensor& bv2 = t.value_of(ib);
                             for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv2[i];
                         }
                         if (t.node_requires_grad(ib)) {
                             Tensor& gb = t.grad_of(ib);
                             const Tensor& av2 = t.value_of(ia);
                             for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av2[i];
                         }
                     },
                     "mul");
}

Var scale(Var x, double factor) {
    Tape& tape = x.tape();
    Tensor out = x.value();
    for (double& v : out.data()) v *= factor;
    const std::uint32_t ix = x.id();
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix, factor](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
                     },
                     "scale");
}

Var relu(Var x) {
    Tape& tape = x.tape();
    Tensor out = x.value();
    for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    const std::uint32_t ix = x.id();
    const auto iy = static_cast<std::uint32_t>(tape.num_nodes());
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix, iy](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         const Tensor& y = t.value_of(iy);
                         for (std::size_t i = 0; i < g.size(); ++i) {
                             if (y[i] > 0.0) gx[i] += g[i];
                         }
                     },
                     "relu");
}

Var softmax(Var x, std::size_t axis) {
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    if (axis >= xv.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_string(xv.shape()));
    }
    const Shape& s = xv.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];
    Tensor out = Tensor::uninitialized(s);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < len; ++j) mx = std::max(mx, xv[base + j * inner]);
            double total = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                const double e = std::exp(xv[base + j * inner] - mx);
                out[base + j * inner] = e;
                total += e;
            }
            for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= total;
        }
    }
    const std::uint32_t ix = x.id();
    const auto iy = static_cast<std::uint32_t>(tape.num_nodes());
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix, iy, outer, inner, len](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         const Tensor& y = t.value_of(iy);
                         for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t in = 0; in < inner; ++in) {
                                 const std::size_t base = o * len * inner + in;
                                 double dot = 0.0;
                                 for (std::size_t j = 0; j < len; ++j) dot += g[base + j * inner] * y[base + j * inner];
                                 for (std::size_t j = 0; j < len; ++j) {
                                     const std::size_t k = base + j * inner;
                                     gx[k] += y[k] * (g[k] - dot);
                                 }
                             }
                         }
                     },
                     "softmax");
}

Var softmax(Var x) { return softmax(x, x.value().rank() - 1); }

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    same_tape(x, gamma, "layer_norm");
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    const std::size_t d = xv.shape().back();
    if (gamma.value().size() != d || beta.value().size() != d) {
        throw DimensionError("layer_norm: affine width does not match last axis of " + shape_string(xv.shape()));
    }
    const std::size_t rows = xv.size() / d;
    Tensor out = Tensor::uninitialized(xv.shape());
    std::vector<double> xhat(xv.size());
    std::vector<double> inv_std(rows);
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = xv.raw() + r * d;
        double m = 0.0;
        for (std::size_t j = 0; j < d; ++j) m += xr[j];
        m /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (xr[j] - m) * (xr[j] - m);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std[r] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (xr[j] - m) * inv;
            xhat[r * d + j] = h;
            out[r * d + j] = h * gv[j] + bv[j];
        }
    }
    const std::uint32_t ix = x.id(), ig = gamma.id(), ib = beta.id();
    return tape.emit(std::move(out), tape.needs_grad({x, gamma, beta}),
                     [ix, ig, ib, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape& t,
                                                                                              const Tensor& g) {
                         const Tensor& gv2 = t.value_of(ig);
                         if (t.node_requires_grad(ig)) {
                             Tensor& gg = t.grad_of(ig);
                             for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * xhat[r * d + j];
                         }
                         if (t.node_requires_grad(ib)) {
                             Tensor& gb = t.grad_of(ib);
                             for (std::size_t r = 0; r < rows; ++r)
                                 for (std::size_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
                         }
                         if (t.node_requires_grad(ix)) {
                             Tensor& gx = t.grad_of(ix);
                             const double dd = static_cast<double>(d);
                             for (std::size_t r = 0; r < rows; ++r) {
                                 double s1 = 0.0, s2 = 0.0;
                                 for (std::size_t j = 0; j < d; ++j) {
                                     const double dh = g[r * d + j] * gv2[j];
                                     s1 += dh;
                                     s2 += dh * xhat[r * d + j];
                                 }
                                 for (std::size_t j = 0; j < d; ++j) {
                                     const double dh = g[r * d + j] * gv2[j];
                                     gx[r * d + j] += inv_std[r] / dd * (dd * dh - s1 - xhat[r * d + j] * s2);
                                 }
                             }
                         }
                     },
                     "layer_norm");
}

Var batch_norm(Var x, std::size_t channels, Var gamma, Var beta, BatchNormState& state, bool training,
               double momentum, double eps) {
    same_tape(x, gamma, "batch_norm");
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    if (channels == 0 || xv.size() % channels != 0) {
        throw DimensionError("batch_norm: " + std::to_string(channels) + " channels do not tile " +
                             shape_string(xv.shape()));
    }
    if (gamma.value().size() != channels || beta.value().size() != channels ||
        state.running_mean.size() != channels || state.running_var.size() != channels) {
        throw DimensionError("batch_norm: parameter/statistics width differs from " + std::to_string(channels));
    }
    const std::size_t rows = xv.size() / channels;
    std::vector<double> mean(channels, 0.0), var(channels, 0.0);
    if (training) {
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < channels; ++c) mean[c] += xv[r * channels + c];
        for (double& m : mean) m /= static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < channels; ++c) {
                const double d = xv[r * channels + c] - mean[c];
                var[c] += d * d;
            }
        for (double& v : var) v /= static_cast<double>(rows);
        for (std::size_t c = 0; c < channels; ++c) {
            state.running_mean[c] = (1.0 - momentum) * state.running_mean[c] + momentum * mean[c];
            state.running_var[c] = (1.0 - momentum) * state.running_var[c] + momentum * var[c];
        }
    } else {
        for (std::size_t c = 0; c < channels; ++c) {
            mean[c] = state.running_mean[c];
            var[c] = state.running_var[c];
        }
    }
    std::vector<double> inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + eps);
    const Tensor& gv = gamma.value();
    const Tensor& bv = beta.value();
    Tensor out = Tensor::uninitialized(xv.shape());
    std::vector<double> xhat(xv.size());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < channels; ++c) {
            const std::size_t k = r * channels + c;
            xhat[k] = (xv[k] - mean[c]) * inv_std[c];
            out[k] = xhat[k] * gv[c] + bv[c];
        }
    const std::uint32_t ix = x.id(), ig = gamma.id(), ib = beta.id();
    return tape.emit(
        std::move(out), tape.needs_grad({x, gamma, beta}),
        [ix, ig, ib, rows, channels, training, xhat = std::move(xhat), inv_std = std::move(inv_std)](
            Tape& t, const Tensor& g) {
            const Tensor& gv2 = t.value_of(ig);
            std::vector<double> s1(channels, 0.0), s2(channels, 0.0);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t k = r * channels + c;
                    s1[c] += g[k];
                    s2[c] += g[k] * xhat[k];
                }
            if (t.node_requires_grad(ig)) {
                Tensor& gg = t.grad_of(ig);
                for (std::size_t c = 0; c < channels; ++c) gg[c] += s2[c];
            }
            if (t.node_requires_grad(ib)) {
                Tensor& gb = t.grad_of(ib);
                for (std::size_t c = 0; c < channels; ++c) gb[c] += s1[c];
            }
            if (t.node_requires_grad(ix)) {
                Tensor& gx = t.grad_of(ix);
                const double m = static_cast<double>(rows);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < channels; ++c) {
                        const std::size_t k = r * channels + c;
                        const double scale_c = gv2[c] * inv_std[c];
                        if (training) {
                            gx[k] += scale_c * (g[k] - s1[c] / m - xhat[k] * s2[c] / m);
                        } else {
                            gx[k] += scale_c * g[k];
                        }
                    }
            }
        },
        "batch_norm");
}

Var dropout(Var x, double p, CounterRng& rng, bool training) {
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout: probability " + std::to_string(p) + " outside [0, 1)");
    if (!training || p == 0.0) return x;
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> mask(xv.size());
    Tensor out = Tensor::uninitialized(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        mask[i] = rng.uniform() < p ? 0.0 : keep_scale;
        out[i] = xv[i] * mask[i];
    }
    const std::uint32_t ix = x.id();
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix, mask = std::move(mask)](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                     },
                     "dropout");
}

Var concat(std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    Tape& tape = parts.front().tape();
    const Shape& first = parts.front().value().shape();
    const std::size_t rows = parts.front().value().size() / first.back();
    std::vector<std::size_t> widths;
    std::vector<std::uint32_t> ids;
    std::size_t total = 0;
    bool needs = false;
    for (const Var& p : parts) {
        same_tape(parts.front(), p, "concat");
        const Shape& s = p.value().shape();
        if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin())) {
            throw DimensionError("concat: leading shape " + shape_string(s) + " differs from " + shape_string(first));
        }
        widths.push_back(s.back());
        ids.push_back(p.id());
        total += s.back();
        needs = needs || tape.needs_grad({p});
    }
    Shape out_shape = first;
    out_shape.back() = total;
    Tensor out = Tensor::uninitialized(out_shape);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& v = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(v.raw() + r * widths[k], widths[k], out.raw() + r * total + offset);
        }
        offset += widths[k];
    }
    return tape.emit(std::move(out), needs,
                     [ids = std::move(ids), widths = std::move(widths), rows, total](Tape& t, const Tensor& g) {
                         std::size_t off = 0;
                         for (std::size_t k = 0; k < ids.size(); ++k) {
                             if (t.node_requires_grad(ids[k])) {
                                 Tensor& gp = t.grad_of(ids[k]);
                                 for (std::size_t r = 0; r < rows; ++r) {
                                     const double* src = g.raw() + r * total + off;
                                     double* dst = gp.raw() + r * widths[k];
                                     for (std::size_t j = 0; j < widths[k]; ++j) dst[j] += src[j];
                                 }
                             }
                             off += widths[k];
                         }
                     },
                     "concat");
}

Var reshape(Var x, Shape shape) {
    Tape& tape = x.tape();
    Tensor out = x.value().reshaped(std::move(shape));
    const std::uint32_t ix = x.id();
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix](Tape& t, const Tensor& g) { accumulate(t.grad_of(ix), g); }, "reshape");
}

Var permute(Var x, std::span<const std::size_t> perm) {
    Tape& tape = x.tape();
    const Tensor& xv = x.value();
    const Shape& s = xv.shape();
    const std::size_t r = s.size();
    if (perm.size() != r) throw DimensionError("permute: permutation rank differs from " + shape_string(s));
    std::vector<bool> seen(r, false);
    for (std::size_t p : perm) {
        if (p >= r || seen[p]) throw DimensionError("permute: invalid permutation");
        seen[p] = true;
    }
    std::vector<std::size_t> in_stride(r, 1);
    for (std::size_t i = r; i-- > 1;) in_stride[i - 1] = in_stride[i] * s[i];
    Shape out_shape(r);
    std::vector<std::size_t> src_stride(r);
    for (std::size_t i = 0; i < r; ++i) {
        out_shape[i] = s[perm[i]];
        src_stride[i] = in_stride[perm[i]];
    }
    // src_index[k] = input flat index of output flat index k
    std::vector<std::size_t> src_index(xv.size());
    std::vector<std::size_t> counter(r, 0);
    std::size_t src = 0;
    for (std::size_t k = 0; k < xv.size(); ++k) {
        src_index[k] = src;
        for (std::size_t i = r; i-- > 0;) {
            ++counter[i];
            src += src_stride[i];
            if (counter[i] < out_shape[i]) break;
            src -= src_stride[i] * out_shape[i];
            counter[i] = 0;
        }
    }
    Tensor out = Tensor::uninitialized(out_shape);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = xv[src_index[k]];
    const std::uint32_t ix = x.id();
    return tape.emit(std::move(out), tape.needs_grad({x}),
                     [ix, src_index = std::move(src_index)](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         for (std::size_t k = 0; k < g.size(); ++k) gx[src_index[k]] += g[k];
                     },
                     "permute");
}

Var cross_entropy(Var logits, std::span<const int> labels) {
    Tape& tape = logits.tape();
    const Tensor& lv = logits.value();
    if (lv.rank() != 2 || lv.dim(0) != labels.size() || lv.dim(0) == 0) {
        throw DimensionError("cross_entropy: logits " + shape_string(lv.shape()) + " vs " +
                             std::to_string(labels.size()) + " labels");
    }
    const std::size_t batch = lv.dim(0), classes = lv.dim(1);
    std::vector<double> probs(lv.size());
    std::vector<int> ys(labels.begin(), labels.end());
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        if (ys[b] < 0 || static_cast<std::size_t>(ys[b]) >= classes) {
            throw ValidationError("cross_entropy: invalid label " + std::to_string(ys[b]) + " at row " +
                                  std::to_string(b));
        }
        const double* row = lv.raw() + b * classes;
        const double mx = *std::max_element(row, row + classes);
        double total = 0.0;
        for (std::size_t c = 0; c < classes; ++c) total += std::exp(row[c] - mx);
        const double log_z = mx + std::log(total);
        for (std::size_t c = 0; c < classes; ++c) probs[b * classes + c] = std::exp(row[c] - log_z);
        loss += log_z - row[ys[b]];
    }
    loss /= static_cast<double>(batch);
    const std::uint32_t il = logits.id();
    return tape.emit(Tensor::scalar(loss), tape.needs_grad({logits}),
                     [il, batch, classes, probs = std::move(probs), ys = std::move(ys)](Tape& t, const Tensor& g) {
                         Tensor& gl = t.grad_of(il);
                         const double s = g[0] / static_cast<double>(batch);
                         for (std::size_t b = 0; b < batch; ++b)
                             for (std::size_t c = 0; c < classes; ++c) {
                                 const double onehot = static_cast<int>(c) == ys[b] ? 1.0 : 0.0;
                                 gl[b * classes + c] += s * (probs[b * classes + c] - onehot);
                             }
                     },
                     "cross_entropy");
}

Var sum(Var x) {
    Tape& tape = x.tape();
    double total = 0.0;
    for (double v : x.value().data()) total += v;
    const std::uint32_t ix = x.id();
    return tape.emit(Tensor::scalar(total), tape.needs_grad({x}),
                     [ix](Tape& t, const Tensor& g) {
                         Tensor& gx = t.grad_of(ix);
                         for (double& v : gx.data()) v += g[0];
                     },
                     "sum");
}

Var mean(Var x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

} // namespace gtpdm::ops
