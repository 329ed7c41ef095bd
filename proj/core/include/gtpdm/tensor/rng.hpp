// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace gtpdm {

/// Counter-based generator: the i-th draw is a pure function of (key, i).
/// The whole state is two integers, so it checkpoints and replays exactly.
class CounterRng {
public:
    CounterRng() = default;
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

    /// Independent stream derived from this key and a stream id.
    CounterRng derive(std::uint64_t stream) const;

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of mantissa.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Standard normal via Box-Muller (one value per two draws; no cached spare).
    double normal();
    /// Uniform integer in [0, n). Unbiased (rejection).
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    bool operator==(const CounterRng&) const = default;

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x) noexcept;

} // namespace gtpdm
