// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/tensor/tensor.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <functional>
#include <numeric>

#include "gtpdm/errors.hpp"

namespace gtpdm {

std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), values_(shape_numel(shape_), fill) {}

Tensor Tensor::uninitialized(Shape shape) {
    Tensor t;
    t.values_.resize(shape_numel(shape));
    t.shape_ = std::move(shape);
    return t;
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(values.begin(), values.end()) {
    if (shape_numel(shape_) != values_.size()) {
        throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                             std::to_string(values_.size()) + " values");
    }
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> v;
    v.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("ragged rows in Tensor::from_rows");
        v.insert(v.end(), row.begin(), row.end());
    }
    return Tensor(Shape{r, c}, std::move(v));
}

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= shape_.size()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(shape_));
    }
    return shape_[axis];
}

Tensor Tensor::reshaped(Shape shape) const& {
    Tensor copy = *this;
    return std::move(copy).reshaped(std::move(shape));
}

Tensor Tensor::reshaped(Shape shape) && {
    if (shape_numel(shape) != values_.size()) {
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
    return std::move(*this);
}

void Tensor::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const noexcept {
    constexpr std::uint64_t kExponent = 0x7ff0000000000000ULL;
    std::uint64_t bad = 0;
    for (double x : values_) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof bits);
        bad |= static_cast<std::uint64_t>((bits & kExponent) == kExponent);
    }
    return bad == 0;
}

} // namespace gtpdm
