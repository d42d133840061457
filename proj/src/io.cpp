#include "coke/io.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "coke/error.hpp"

namespace coke::io {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError(path, "cannot create parent directory: " + ec.message());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(tmp, "cannot open for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError(tmp, "write failed");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) throw IoError(path, "rename failed: " + ec.message());
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open for reading");
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ":" + std::to_string(lineno), e.what());
        }
    }
    return out;
}

std::string to_jsonl(const std::vector<nlohmann::json>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.dump();
        out += '\n';
    }
    return out;
}

std::uint32_t crc32(std::string_view data) noexcept {
    uLong c = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const uInt chunk = static_cast<uInt>(left > (1u << 30) ? (1u << 30) : left);
        c = ::crc32(c, reinterpret_cast<const Bytef*>(p), chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(c);
}

std::string crc32_hex(std::string_view data) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", crc32(data));
    return buf;
}

std::string file_checksum(const std::string& path) { return "crc32:" + crc32_hex(read_file(path)); }

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) noexcept {
    std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9E3779B97F4A7C15ull);
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace coke::io
