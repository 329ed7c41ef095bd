// SPDX-License-Identifier: Apache-2.0
#include "gtpdm/tensor/rng.hpp"

#include <cmath>
#include <numbers>

namespace gtpdm {

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

CounterRng CounterRng::derive(std::uint64_t stream) const {
    return CounterRng(mix64(key_ ^ mix64(stream + 0x632be59bd9b4e019ULL)), 0);
}

std::uint64_t CounterRng::next_u64() {
    const std::uint64_t c = counter_++;
    return mix64(mix64(c ^ key_) + key_);
}

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t CounterRng::below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

} // namespace gtpdm
