// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rf {

enum class ErrorKind {
    Config,   // bad configuration / usage
    Io,       // filesystem or decode failure
    Invalid,  // invariant or precondition violation
    Backend,  // remote/mock backend failure after retries
    Parse,    // malformed structured reply or record
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

// SHA-256 as lowercase hex. Collision-resistant enough for content
// addressing and cache keys.
std::string sha256_hex(std::span<const uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// Deterministic 64-bit string hash (FNV-1a). Not collision-resistant;
// used only to derive mock seeds and stable orderings.
uint64_t fnv1a64(std::string_view text, uint64_t seed = 1469598103934665603ULL);

// Small deterministic RNG (splitmix64). The standard distributions are
// not portable across library implementations, so everything that ends
// up in golden files goes through this.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64();
    // Uniform in [0, bound); bound must be > 0.
    uint64_t next_below(uint64_t bound);
    // Uniform in [0, 1) with 53 bits.
    double next_double();

private:
    uint64_t state_;
};

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Whole-file IO. write_file_atomic writes to a sibling temp file and
// renames, so concurrent writers of the same path are last-writer-wins.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Base64 for the image-over-HTTP wire contract.
std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

}  // namespace rf
