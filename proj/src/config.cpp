// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <cstdlib>

extern char** environ;

namespace rf {

namespace {

// Keys with no influence on output bytes; excluded from config_hash so
// resumes and golden comparisons survive parallelism/path changes.
bool hash_excluded(const std::string& key) {
    if (key == "out_dir" || key == "parallelism" || key == "cache_dir" ||
        key == "mock_fixtures" || key == "config_file") {
        return true;
    }
    auto ends_with = [&](std::string_view suffix) {
        return key.size() >= suffix.size() &&
               key.compare(key.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with("_rps") || ends_with("_concurrency") || ends_with("_timeout_ms") ||
           ends_with("_key") || key == "retry_base_ms";
}

}  // namespace

RunConfig::RunConfig() {
    values_ = {
        {"mock", "false"},
        {"seed", "0"},
        {"canonical_size", "256"},
        {"n_candidates", "5"},
        {"parallelism", "1"},
        {"retry_budget", "5"},
        {"retry_base_ms", "250"},
        {"filter_mode", "rank"},
        {"filter_fraction", "0.10"},
        {"filter_tau", "0"},
        {"filter_part2", "true"},
        {"min_box_area", "1024"},  // 32x32 px
        {"box_padding", "0.05"},
        {"temperature_gen", "0.7"},
        {"temperature_select", "0"},
        {"chat_model", "gpt-3.5-turbo"},
    };
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key.empty()) throw_error(ErrorKind::Config, "empty config key");
    values_[key] = value;
}

void RunConfig::load_file(const std::filesystem::path& path) {
    for (const auto& raw : read_lines(path)) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw_error(ErrorKind::Config, "config line is not KEY=VALUE: " + line);
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw_error(ErrorKind::Config, "config line has empty key: " + line);
        values_[key] = value;
    }
}

void RunConfig::load_env() {
    const std::string prefix = "REASONFORGE_";
    for (char** env = environ; *env != nullptr; ++env) {
        std::string entry(*env);
        size_t eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string name = entry.substr(0, eq);
        if (name.rfind(prefix, 0) != 0) continue;
        std::string key = to_lower(name.substr(prefix.size()));
        values_[key] = entry.substr(eq + 1);
    }
}

std::string RunConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = to_lower(trim(it->second));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw_error(ErrorKind::Config, "config key '" + key + "' is not a boolean: " + it->second);
}

int64_t RunConfig::get_int(const std::string& key, int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end() || trim(it->second).empty()) return fallback;
    try {
        size_t pos = 0;
        int64_t v = std::stoll(trim(it->second), &pos);
        if (pos != trim(it->second).size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw_error(ErrorKind::Config, "config key '" + key + "' is not an integer: " + it->second);
    }
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end() || trim(it->second).empty()) return fallback;
    try {
        size_t pos = 0;
        double v = std::stod(trim(it->second), &pos);
        if (pos != trim(it->second).size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw_error(ErrorKind::Config, "config key '" + key + "' is not a number: " + it->second);
    }
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

FilterConfig RunConfig::filter_config() const {
    FilterConfig fc;
    std::string mode = to_lower(get("filter_mode", "rank"));
    if (mode == "absolute") {
        fc.mode = FilterConfig::Mode::Absolute;
    } else if (mode == "rank" || mode == "rankfraction") {
        fc.mode = FilterConfig::Mode::RankFraction;
    } else {
        throw_error(ErrorKind::Config, "filter_mode must be 'absolute' or 'rank', got: " + mode);
    }
    fc.tau = get_double("filter_tau", 0.0);
    fc.fraction = get_double("filter_fraction", 0.10);
    fc.canonical_size = canonical_size();
    if (auto err = fc.validate(); !err.empty()) throw_error(ErrorKind::Config, err);
    return fc;
}

std::string RunConfig::config_hash() const {
    std::string canon;
    for (const auto& [key, value] : values_) {
        if (hash_excluded(key)) continue;
        canon += key;
        canon += '=';
        canon += value;
        canon += '\n';
    }
    return sha256_hex(canon);
}

std::string RunConfig::validate() const {
    if (canonical_size() < 1) return "canonical_size must be >= 1";
    if (n_candidates() < 1) return "n_candidates must be >= 1";
    if (parallelism() < 1) return "parallelism must be >= 1";
    if (retry_budget() < 1) return "retry_budget must be >= 1";
    try {
        (void)filter_config();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

}  // namespace rf
