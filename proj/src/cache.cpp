#include "coke/cache.hpp"

#include <filesystem>

#include <json.hpp>

#include "coke/error.hpp"
#include "coke/io.hpp"

namespace coke {

std::string CacheKey::encode() const {
    return nlohmann::json::array({model, prompt, max_new_tokens, stop}).dump();
}

CacheStore::CacheStore(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // a fresh cache
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            auto payload = j.at("payload").get<std::string>();
            if (j.at("crc").get<std::string>() != io::crc32_hex(payload)) {
                ++corrupt_;
                continue;
            }
            index_[j.at("key").get<std::string>()] = std::move(payload);
        } catch (const nlohmann::json::exception&) {
            ++corrupt_;
        }
    }
}

std::optional<std::string> CacheStore::lookup(const CacheKey& key) const {
    std::shared_lock lock(index_mutex_);
    auto it = index_.find(key.encode());
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void CacheStore::insert(const CacheKey& key, std::string payload) {
    const std::string encoded = key.encode();
    std::lock_guard write_lock(write_mutex_);
    if (!path_.empty()) {
        if (!out_.is_open()) {
            const std::filesystem::path p(path_);
            if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
            out_.open(path_, std::ios::app);
            if (!out_) throw IoError(path_, "cannot open cache for appending");
        }
        nlohmann::json rec = {{"key", encoded}, {"crc", io::crc32_hex(payload)}, {"payload", payload}};
        out_ << rec.dump() << '\n';
        out_.flush();
        if (!out_) throw IoError(path_, "cache append failed");
    }
    std::unique_lock lock(index_mutex_);
    index_[encoded] = std::move(payload);
}

std::size_t CacheStore::size() const {
    std::shared_lock lock(index_mutex_);
    return index_.size();
}

}  // namespace coke
