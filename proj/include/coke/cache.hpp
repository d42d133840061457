#pragma once

#include <cstddef>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace coke {

struct CacheKey {
    std::string model;
    std::string prompt;  // post-envelope
    int max_new_tokens = 0;
    std::vector<std::string> stop;

    std::string encode() const;
};

// Append-only record store for probe results. Each line carries the key, a
// CRC-32 of the payload, and the payload text; lines that fail to parse or
// verify are treated as misses. Writers are serialized; lookups may run
// concurrently with an append.
class CacheStore {
public:
    // In-memory only.
    CacheStore() = default;
    // Loads existing records from `path` (created on first insert).
    explicit CacheStore(std::string path);

    CacheStore(const CacheStore&) = delete;
    CacheStore& operator=(const CacheStore&) = delete;

    std::optional<std::string> lookup(const CacheKey& key) const;
    void insert(const CacheKey& key, std::string payload);

    std::size_t size() const;
    std::size_t corrupt_records() const noexcept { return corrupt_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
    mutable std::shared_mutex index_mutex_;
    std::mutex write_mutex_;
    std::unordered_map<std::string, std::string> index_;
    std::ofstream out_;
    std::size_t corrupt_ = 0;
};

}  // namespace coke
