// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "cache.hpp"

#include <fstream>
#include <system_error>

#include "util.hpp"

namespace rf {

namespace fs = std::filesystem;

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw_error(ErrorKind::Io, "cannot create cache directory " + dir_.string() + ": " + ec.message());
}

std::string ResponseCache::make_key(const std::string& backend, const std::string& version,
                                    const std::string& canonical_request) {
    return sha256_hex(backend + "\x1f" + version + "\x1f" + canonical_request);
}

fs::path ResponseCache::path_for(const std::string& key) const {
    if (key.size() < 3) throw_error(ErrorKind::Invalid, "cache key too short: " + key);
    return dir_ / key.substr(0, 2) / (key + ".bin");
}

std::optional<std::string> ResponseCache::get(const std::string& key) {
    const fs::path p = path_for(key);
    {
        std::lock_guard<std::mutex> lock(mutex_);
        std::error_code ec;
        if (!fs::exists(p, ec)) {
            misses_.fetch_add(1);
            return std::nullopt;
        }
    }
    std::string value = read_file(p);
    hits_.fetch_add(1);
    return value;
}

void ResponseCache::put(const std::string& key, const std::string& value) {
    const fs::path p = path_for(key);
    std::lock_guard<std::mutex> lock(mutex_);
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw_error(ErrorKind::Io, "cannot create cache shard " + p.parent_path().string() + ": " + ec.message());
    write_file_atomic(p, value);
}

}  // namespace rf
