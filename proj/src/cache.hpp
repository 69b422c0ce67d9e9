// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>

namespace rf {

// Directory-backed response cache. Keys are sha256 hex strings derived from
// (backend name, backend version, canonical request); values are response
// payloads. Writes are atomic, so a cache directory can be shared between
// concurrent runs.
class ResponseCache {
public:
    explicit ResponseCache(std::filesystem::path dir);

    std::optional<std::string> get(const std::string& key);
    void put(const std::string& key, const std::string& value);

    int64_t hits() const { return hits_.load(); }
    int64_t misses() const { return misses_.load(); }

    // Canonical key derivation used by every caching backend.
    static std::string make_key(const std::string& backend, const std::string& version,
                                const std::string& canonical_request);

private:
    std::filesystem::path path_for(const std::string& key) const;

    std::filesystem::path dir_;
    std::atomic<int64_t> hits_{0};
    std::atomic<int64_t> misses_{0};
    std::mutex mutex_;
};

}  // namespace rf
