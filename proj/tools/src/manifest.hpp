// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gtpdm::cli {

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

struct FileDigest {
    std::string path;
    std::uint64_t bytes = 0;
    std::string sha256;
};

FileDigest digest(const std::filesystem::path& path);

/// Record of one command invocation, written as manifest.json in the output directory.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config;  // resolved, or null when the command takes none
    std::optional<std::uint64_t> seed;
    std::string code_version;
    std::vector<FileDigest> inputs;
    std::vector<FileDigest> outputs;
    std::string started_at;  // UTC, ISO 8601
    double wall_clock_s = 0.0;
    std::string status = "ok";
    nlohmann::json error;    // error record on failure, else null

    void add_input(const std::filesystem::path& p) { inputs.push_back(digest(p)); }
    void add_output(const std::filesystem::path& p) { outputs.push_back(digest(p)); }
};

nlohmann::json to_json(const RunManifest& m);
void write_manifest(const std::filesystem::path& path, const RunManifest& m);

std::string code_version();
std::string utc_timestamp(std::chrono::system_clock::time_point t);

} // namespace gtpdm::cli
