// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "imaging.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>

namespace rf {

PixelGrid PixelGrid::filled(int width, int height, float value) {
    PixelGrid g;
    g.width = width;
    g.height = height;
    g.values.assign(static_cast<size_t>(width) * height * 3, value);
    return g;
}

namespace {

RgbImage bgr_to_rgb(const cv::Mat& bgr, const std::string& what) {
    if (bgr.empty()) {
        throw_error(ErrorKind::Io, "cannot decode image: " + what);
    }
    if (bgr.cols < 1 || bgr.rows < 1) {
        throw_error(ErrorKind::Io, "zero-dimension image: " + what);
    }
    RgbImage out;
    out.width = bgr.cols;
    out.height = bgr.rows;
    out.pixels.resize(static_cast<size_t>(out.width) * out.height * 3);
    for (int y = 0; y < out.height; ++y) {
        const uint8_t* row = bgr.ptr<uint8_t>(y);
        for (int x = 0; x < out.width; ++x) {
            out.pixels[out.index(x, y, 0)] = row[x * 3 + 2];
            out.pixels[out.index(x, y, 1)] = row[x * 3 + 1];
            out.pixels[out.index(x, y, 2)] = row[x * 3 + 0];
        }
    }
    return out;
}

}  // namespace

RgbImage decode_image(const std::filesystem::path& path) {
    return bgr_to_rgb(cv::imread(path.string(), cv::IMREAD_COLOR), path.string());
}

RgbImage decode_image_bytes(std::span<const uint8_t> bytes) {
    cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                const_cast<uint8_t*>(bytes.data()));
    return bgr_to_rgb(cv::imdecode(raw, cv::IMREAD_COLOR), "<memory buffer>");
}

void encode_png(const RgbImage& image, const std::filesystem::path& path) {
    cv::Mat bgr(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y) {
        uint8_t* row = bgr.ptr<uint8_t>(y);
        for (int x = 0; x < image.width; ++x) {
            row[x * 3 + 0] = image.pixels[image.index(x, y, 2)];
            row[x * 3 + 1] = image.pixels[image.index(x, y, 1)];
            row[x * 3 + 2] = image.pixels[image.index(x, y, 0)];
        }
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::vector<uint8_t> buf;
    if (!cv::imencode(".png", bgr, buf)) {
        throw_error(ErrorKind::Io, "PNG encode failed: " + path.string());
    }
    write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(buf.data()), buf.size()));
}

std::string content_hash(const RgbImage& image) {
    std::string preimage = "rgb:" + std::to_string(image.width) + "x" +
                           std::to_string(image.height) + ":";
    std::vector<uint8_t> bytes(preimage.begin(), preimage.end());
    bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
    return sha256_hex(std::span<const uint8_t>(bytes.data(), bytes.size()));
}

ImageRef make_image_ref(const std::filesystem::path& file, const std::string& stored_path) {
    RgbImage img = decode_image(file);
    ImageRef ref;
    ref.path = stored_path;
    ref.width = img.width;
    ref.height = img.height;
    ref.content_hash = content_hash(img);
    return ref;
}

PixelGrid to_grid(const RgbImage& image) {
    PixelGrid g;
    g.width = image.width;
    g.height = image.height;
    g.values.resize(image.pixels.size());
    for (size_t i = 0; i < image.pixels.size(); ++i) {
        g.values[i] = static_cast<float>(image.pixels[i]) / 255.0f;
    }
    return g;
}

RgbImage to_rgb8(const PixelGrid& grid) {
    RgbImage img;
    img.width = grid.width;
    img.height = grid.height;
    img.pixels.resize(grid.values.size());
    for (size_t i = 0; i < grid.values.size(); ++i) {
        float v = std::clamp(grid.values[i], 0.0f, 1.0f);
        img.pixels[i] = static_cast<uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

PixelGrid resize_bilinear(const PixelGrid& src, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) {
        throw_error(ErrorKind::Invalid, "resize target must be >= 1 pixel");
    }
    if (src.width == out_width && src.height == out_height) return src;

    PixelGrid dst;
    dst.width = out_width;
    dst.height = out_height;
    dst.values.resize(static_cast<size_t>(out_width) * out_height * 3);

    const double sx = static_cast<double>(src.width) / out_width;
    const double sy = static_cast<double>(src.height) / out_height;
    for (int y = 0; y < out_height; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(src.height - 1));
        int y0 = static_cast<int>(std::floor(fy));
        int y1 = std::min(y0 + 1, src.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < out_width; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(src.width - 1));
            int x0 = static_cast<int>(std::floor(fx));
            int x1 = std::min(x0 + 1, src.width - 1);
            double wx = fx - x0;
            for (int c = 0; c < 3; ++c) {
                double top = src.at(x0, y0, c) * (1.0 - wx) + src.at(x1, y0, c) * wx;
                double bot = src.at(x0, y1, c) * (1.0 - wx) + src.at(x1, y1, c) * wx;
                dst.at(x, y, c) = static_cast<float>(top * (1.0 - wy) + bot * wy);
            }
        }
    }
    return dst;
}

PixelGrid load_canonical(const std::filesystem::path& path, int canonical_size) {
    if (canonical_size < 1) throw_error(ErrorKind::Config, "canonical_size must be >= 1");
    return resize_bilinear(to_grid(decode_image(path)), canonical_size, canonical_size);
}

double divergence(const PixelGrid& a, const PixelGrid& b) {
    if (!a.same_shape(b)) {
        throw_error(ErrorKind::Invalid,
                    "divergence: shape mismatch " + std::to_string(a.width) + "x" +
                        std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                        std::to_string(b.height));
    }
    double sum = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
        sum += d * d;
    }
    return a.values.empty() ? 0.0 : sum / static_cast<double>(a.values.size());
}

std::string FilterConfig::validate() const {
    if (mode == Mode::Absolute && tau < 0.0) return "Absolute filter requires tau >= 0";
    if (mode == Mode::RankFraction && (fraction < 0.0 || fraction > 1.0)) {
        return "RankFraction filter requires fraction in [0,1]";
    }
    if (canonical_size < 1) return "canonical_size must be >= 1";
    return {};
}

FilterResult apply_filter(const std::vector<std::pair<std::string, double>>& divergences,
                          const FilterConfig& config) {
    if (auto err = config.validate(); !err.empty()) throw_error(ErrorKind::Config, err);
    for (const auto& [id, d] : divergences) {
        if (!std::isfinite(d) || d < 0.0) {
            throw_error(ErrorKind::Invalid, "divergence for '" + id + "' must be finite and >= 0");
        }
    }

    FilterResult result;
    if (config.mode == FilterConfig::Mode::Absolute) {
        for (const auto& [id, d] : divergences) {
            (d < config.tau ? result.abandoned : result.kept).push_back(id);
        }
    } else {
        // floor with a small guard so exact-decimal fractions don't lose a
        // slot to binary rounding (0.1 * 1000 must abandon 100).
        const size_t n = divergences.size();
        const size_t k = static_cast<size_t>(
            std::floor(config.fraction * static_cast<double>(n) + 1e-9));
        std::vector<std::pair<std::string, double>> sorted = divergences;
        std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second < b.second;
            return a.first < b.first;
        });
        for (size_t i = 0; i < sorted.size(); ++i) {
            (i < k ? result.abandoned : result.kept).push_back(sorted[i].first);
        }
    }
    std::sort(result.kept.begin(), result.kept.end());
    std::sort(result.abandoned.begin(), result.abandoned.end());
    return result;
}

}  // namespace rf
