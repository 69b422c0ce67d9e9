// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imaging.hpp"

namespace rf {

// Flat key-value run configuration. Precedence is applied by layering:
// defaults, then config file, then environment, then explicit sets
// (flags) — later layers win. The resolved map is what gets hashed.
class RunConfig {
public:
    RunConfig();  // defaults only

    void set(const std::string& key, const std::string& value);
    // KEY=VALUE lines, '#' comments, blank lines ignored.
    void load_file(const std::filesystem::path& path);
    // REASONFORGE_<BACKEND>_URL / _KEY plus REASONFORGE_<KEY> for any
    // config key (uppercased).
    void load_env();

    std::string get(const std::string& key, const std::string& fallback = "") const;
    bool get_bool(const std::string& key, bool fallback = false) const;
    int64_t get_int(const std::string& key, int64_t fallback = 0) const;
    double get_double(const std::string& key, double fallback = 0.0) const;
    bool has(const std::string& key) const;

    // Common typed views.
    bool mock() const { return get_bool("mock"); }
    uint64_t seed() const { return static_cast<uint64_t>(get_int("seed", 0)); }
    int canonical_size() const { return static_cast<int>(get_int("canonical_size", 256)); }
    int n_candidates() const { return static_cast<int>(get_int("n_candidates", 5)); }
    int parallelism() const { return static_cast<int>(get_int("parallelism", 1)); }
    int retry_budget() const { return static_cast<int>(get_int("retry_budget", 5)); }
    std::string out_dir() const { return get("out_dir"); }

    FilterConfig filter_config() const;

    // sha256 over the sorted resolved pairs, excluding keys that cannot
    // affect output bytes (out_dir, parallelism, rate limits, timeouts).
    std::string config_hash() const;

    // Full resolved view for run_config.json.
    const std::map<std::string, std::string>& entries() const { return values_; }

    std::string validate() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace rf
