// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "gtpdm/errors.hpp"

namespace gtpdm::util {

/// Reads optional, type-checked fields from a JSON object and rejects keys
/// that nothing asked for.
class FieldReader {
public:
    FieldReader(const nlohmann::json& j, std::string section) : j_(j), section_(std::move(section)) {
        if (!j_.is_object()) throw ConfigError(section_ + ": expected an object");
    }

    template <typename T>
    bool read(const char* key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return false;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) throw ConfigError("");
            } else if constexpr (std::is_unsigned_v<T>) {
                // integers built in code are signed even when non-negative
                if (!it->is_number_integer() || (!it->is_number_unsigned() && it->template get<std::int64_t>() < 0)) {
                    throw ConfigError("");
                }
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer()) throw ConfigError("");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) throw ConfigError("");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) throw ConfigError("");
            }
            out = it->get<T>();
        } catch (const std::exception&) {
            throw ConfigError(section_ + "." + key + ": wrong type (" + it->dump() + ")");
        }
        return true;
    }

    /// Raw access for nested values; marks the key as consumed.
    const nlohmann::json* get(const char* key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void require(const char* key, T& out) {
        if (!read(key, out)) throw ConfigError(section_ + "." + key + ": missing required field");
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(section_ + "." + key + ": unknown key");
        }
    }

private:
    const nlohmann::json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

} // namespace gtpdm::util
