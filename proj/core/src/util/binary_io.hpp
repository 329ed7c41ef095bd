// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"

// Container layout: 8-byte magic, u32 version, u64 header size, JSON header,
// then raw little-endian doubles.
namespace gtpdm::util {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError(what + ": truncated file");
    return v;
}

inline void write_header(std::ostream& out, std::string_view magic, std::uint32_t version, const nlohmann::json& header) {
    out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
    write_pod(out, version);
    const std::string h = header.dump();
    write_pod(out, static_cast<std::uint64_t>(h.size()));
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
}

inline nlohmann::json read_header(std::istream& in, std::string_view magic, std::uint32_t version,
                                  const std::string& what) {
    std::string m(magic.size(), '\0');
    if (!in.read(m.data(), static_cast<std::streamsize>(m.size())) || m != magic) {
        throw ValidationError(what + ": not a " + std::string(magic) + " file");
    }
    const auto v = read_pod<std::uint32_t>(in, what);
    if (v != version) {
        throw ValidationError(what + ": unsupported version " + std::to_string(v) + ", expected " + std::to_string(version));
    }
    const auto n = read_pod<std::uint64_t>(in, what);
    if (n > (std::uint64_t{1} << 32)) throw ValidationError(what + ": implausible header size");
    std::string h(n, '\0');
    if (!in.read(h.data(), static_cast<std::streamsize>(n))) throw IoError(what + ": truncated header");
    try {
        return nlohmann::json::parse(h);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(what + ": corrupt header: " + e.what());
    }
}

inline void write_doubles(std::ostream& out, std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

inline void read_doubles(std::istream& in, std::span<double> v, const std::string& what) {
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()))) {
        throw IoError(what + ": truncated payload");
    }
}

} // namespace gtpdm::util
