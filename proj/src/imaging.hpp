// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "records.hpp"
#include "util.hpp"

namespace rf {

// RGB image with intensities normalized to [0,1], row-major, interleaved.
struct PixelGrid {
    int width = 0;
    int height = 0;
    std::vector<float> values;  // width * height * 3

    static PixelGrid filled(int width, int height, float value);

    size_t index(int x, int y, int c) const {
        return (static_cast<size_t>(y) * width + x) * 3 + c;
    }
    float at(int x, int y, int c) const { return values[index(x, y, c)]; }
    float& at(int x, int y, int c) { return values[index(x, y, c)]; }

    bool same_shape(const PixelGrid& other) const {
        return width == other.width && height == other.height;
    }
};

// 8-bit RGB image as decoded from disk, used where exact bytes matter
// (hashing, mock editing, re-encoding).
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> pixels;  // width * height * 3, RGB

    size_t index(int x, int y, int c) const {
        return (static_cast<size_t>(y) * width + x) * 3 + c;
    }
};

// Decode a PNG or JPEG file to RGB. Errors on undecodable or
// zero-dimension input.
RgbImage decode_image(const std::filesystem::path& path);
RgbImage decode_image_bytes(std::span<const uint8_t> bytes);

// Encode as PNG (always PNG: generated images must survive a decode with
// bit-identical pixels).
void encode_png(const RgbImage& image, const std::filesystem::path& path);

// sha256 over "rgb:{w}x{h}:" + raw RGB bytes; stable across re-encodings
// that preserve pixel content and dimensions.
std::string content_hash(const RgbImage& image);

// Decode + build an ImageRef for a file. `stored_path` is what goes into
// the record (usually relative to the dataset root).
ImageRef make_image_ref(const std::filesystem::path& file,
                        const std::string& stored_path);

PixelGrid to_grid(const RgbImage& image);
RgbImage to_rgb8(const PixelGrid& grid);

// Bilinear resample with half-pixel center alignment, no antialias
// filter. A no-op resize returns identical values.
PixelGrid resize_bilinear(const PixelGrid& src, int out_width, int out_height);

// Decode + normalize + bilinear resize to canonical_size x canonical_size.
PixelGrid load_canonical(const std::filesystem::path& path, int canonical_size);

// Mean over all value slots of (a_i - b_i)^2. Symmetric, zero iff the
// grids are identical. Errors on shape mismatch.
double divergence(const PixelGrid& a, const PixelGrid& b);

struct FilterConfig {
    enum class Mode { Absolute, RankFraction };
    Mode mode = Mode::RankFraction;
    double tau = 0.0;        // Absolute: abandon divergence < tau (strict)
    double fraction = 0.10;  // RankFraction: abandon the floor(p*N) most-similar pairs
    int canonical_size = 256;

    std::string validate() const;
};

struct FilterResult {
    std::vector<std::string> kept;       // sorted by id
    std::vector<std::string> abandoned;  // sorted by id
};

// Partition ids into kept/abandoned per the configured mode.
// RankFraction ties break by lexicographic sample id (smaller id
// abandoned first).
FilterResult apply_filter(const std::vector<std::pair<std::string, double>>& divergences,
                          const FilterConfig& config);

}  // namespace rf
