// SPDX-License-Identifier: Apache-2.0
#include "lvd/cache.hpp"

#include "lvd/digest.hpp"
#include "lvd/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace lvd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::atomic<unsigned> tmp_counter{0};

} // namespace

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

fs::path ResponseCache::entry_path(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<ModelReply> ResponseCache::lookup(const std::string& key) {
    const fs::path path = entry_path(key);
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    in.close();

    auto evict = [&] {
        std::error_code ec;
        fs::remove(path, ec);
    };
    try {
        json entry = json::parse(buf.str());
        const std::string text = entry.at("reply_text").get<std::string>();
        const std::string checksum = entry.at("checksum").get<std::string>();
        const std::string digest = entry.at("request_digest").get<std::string>();
        if (digest != key || checksum != sha256_hex(text)) {
            evict();
            return std::nullopt;
        }
        ModelReply reply;
        reply.text = text;
        reply.from_cache = true;
        return reply;
    } catch (const json::exception&) {
        evict();
        return std::nullopt;
    }
}

void ResponseCache::store(const std::string& key, const ModelReply& reply) {
    json entry{{"request_digest", key},
               {"reply_text", reply.text},
               {"timestamp", utc_timestamp()},
               {"checksum", sha256_hex(reply.text)}};
    std::string serialized;
    try {
        serialized = entry.dump(2);
    } catch (const json::exception&) {
        return; // reply text is not valid UTF-8; skip caching rather than corrupt
    }

    const fs::path path = entry_path(key);
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                         std::to_string(tmp_counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw MissingFile("cannot write cache entry: " + tmp.string());
        out << serialized << "\n";
    }
    fs::rename(tmp, path);
}

ResponseCache::Stats ResponseCache::stats() const {
    Stats s;
    if (!fs::exists(dir_)) return s;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        ++s.entries;
        s.bytes += entry.file_size();
    }
    return s;
}

std::size_t ResponseCache::clear() {
    std::size_t removed = 0;
    if (!fs::exists(dir_)) return removed;
    for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        ++removed;
    }
    for (auto it = fs::directory_iterator(dir_); it != fs::directory_iterator(); ++it)
        fs::remove_all(it->path());
    return removed;
}

} // namespace lvd
