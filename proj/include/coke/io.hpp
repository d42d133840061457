#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace coke::io {

std::string read_file(const std::string& path);

// Writes to a sibling temp file and renames over the target.
void write_file(const std::string& path, std::string_view content);

// One JSON document per non-blank line. Parse errors carry path:line.
std::vector<nlohmann::json> read_jsonl(const std::string& path);
std::string to_jsonl(const std::vector<nlohmann::json>& records);

std::uint32_t crc32(std::string_view data) noexcept;
std::string crc32_hex(std::string_view data);
std::string file_checksum(const std::string& path);  // "crc32:xxxxxxxx"

// Stable 64-bit FNV-1a; used wherever a hash must survive across builds.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0) noexcept;

std::string utc_timestamp();

}  // namespace coke::io
