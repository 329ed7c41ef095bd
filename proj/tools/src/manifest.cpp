// SPDX-License-Identifier: Apache-2.0
#include "manifest.hpp"

#include <array>
#include <ctime>
#include <fstream>
#include <memory>

#include <openssl/evp.h>

#include "gtpdm/errors.hpp"

namespace gtpdm::cli {

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "' for hashing");
    const std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw IoError("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xf];
    }
    return out;
}

FileDigest digest(const std::filesystem::path& path) {
    return {path.string(), std::filesystem::file_size(path), sha256_file(path)};
}

nlohmann::json to_json(const RunManifest& m) {
    const auto files = [](const std::vector<FileDigest>& v) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& f : v) a.push_back({{"path", f.path}, {"bytes", f.bytes}, {"sha256", f.sha256}});
        return a;
    };
    return {{"command", m.command},
            {"argv", m.argv},
            {"config", m.config},
            {"seed", m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr)},
            {"code_version", m.code_version},
            {"inputs", files(m.inputs)},
            {"outputs", files(m.outputs)},
            {"started_at", m.started_at},
            {"wall_clock_s", m.wall_clock_s},
            {"status", m.status},
            {"error", m.error}};
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
    out << to_json(m).dump(2) << '\n';
}

std::string code_version() { return GTPDM_CODE_VERSION; }

std::string utc_timestamp(std::chrono::system_clock::time_point t) {
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace gtpdm::cli
