// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/backend.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lvd {

/// Content-addressed response cache: one JSON file per entry under
/// <dir>/<first 2 hex of key>/<key>.json with the request digest, the reply
/// text, a timestamp and a checksum. Writes are atomic (write-then-rename),
/// so concurrent readers and writers are safe. Corrupt entries are treated
/// as misses and evicted.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<ModelReply> lookup(const std::string& key);
    void store(const std::string& key, const ModelReply& reply);

    std::filesystem::path entry_path(const std::string& key) const;

    struct Stats {
        std::size_t entries = 0;
        std::uintmax_t bytes = 0;
    };
    Stats stats() const;

    /// Remove every entry; returns the number removed.
    std::size_t clear();

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

} // namespace lvd
