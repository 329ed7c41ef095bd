// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace gtpdm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Cache-line aligned storage whose elements are default-initialized
/// (indeterminate for double) when constructed without a value, so buffers
/// that are fully overwritten skip a fill. The fixed alignment keeps
/// vectorized reductions in the same order from run to run.
template <class T>
struct TensorAllocator {
    using value_type = T;
    static constexpr std::size_t kAlignment = 64;

    TensorAllocator() noexcept = default;
    template <class U>
    TensorAllocator(const TensorAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kAlignment}));
    }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kAlignment}); }

    template <class U>
    void construct(U* p) noexcept {
        ::new (static_cast<void*>(p)) U;
    }
    template <class U, class... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
    template <class U>
    bool operator==(const TensorAllocator<U>&) const noexcept {
        return true;
    }
};

/// Dense row-major array of doubles. Value type; copies are deep.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    /// Contents are indeterminate; every element must be written before use.
    static Tensor uninitialized(Shape shape);
    static Tensor scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::span<double> data() noexcept { return values_; }
    std::span<const double> data() const noexcept { return values_; }
    double* raw() noexcept { return values_.data(); }
    const double* raw() const noexcept { return values_.data(); }
    std::vector<double> values() const { return {values_.begin(), values_.end()}; }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    double& at(std::size_t i, std::size_t j) { return values_[i * shape_.back() + j]; }
    double at(std::size_t i, std::size_t j) const { return values_[i * shape_.back() + j]; }

    /// Same values, new shape. Throws DimensionError when element counts differ.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(double v);
    bool all_finite() const noexcept;

    bool operator==(const Tensor& other) const = default;

private:
    Shape shape_;
    std::vector<double, TensorAllocator<double>> values_;
};

} // namespace gtpdm
