// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "fixtures.hpp"

#include <algorithm>
#include <cstdio>

#include "json.hpp"
#include "util.hpp"

namespace rf::testing {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "reasonforge-tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

RgbImage make_image(int width, int height, uint64_t seed) {
    RgbImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(static_cast<size_t>(width) * height * 3);
    Rng rng(seed);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int base[3] = {
                width > 1 ? (x * 255) / (width - 1) : 0,
                height > 1 ? (y * 255) / (height - 1) : 0,
                width + height > 2 ? ((x + y) * 255) / (width + height - 2) : 0,
            };
            for (int c = 0; c < 3; ++c) {
                int noise = static_cast<int>(rng.next_below(41)) - 20;
                img.pixels[img.index(x, y, c)] =
                    static_cast<uint8_t>(std::clamp(base[c] + noise, 0, 255));
            }
        }
    }
    return img;
}

RgbImage perturb(const RgbImage& base, int amplitude, uint64_t seed) {
    RgbImage img = base;
    if (amplitude == 0) return img;
    Rng rng(seed);
    const int bw = std::max(1, base.width / 4 + static_cast<int>(rng.next_below(
                                                    std::max(1, base.width / 4))));
    const int bh = std::max(1, base.height / 4 + static_cast<int>(rng.next_below(
                                                     std::max(1, base.height / 4))));
    const int x0 = static_cast<int>(rng.next_below(std::max(1, base.width - bw)));
    const int y0 = static_cast<int>(rng.next_below(std::max(1, base.height - bh)));
    for (int y = y0; y < std::min(base.height, y0 + bh); ++y) {
        for (int x = x0; x < std::min(base.width, x0 + bw); ++x) {
            for (int c = 0; c < 3; ++c) {
                int v = img.pixels[img.index(x, y, c)] + amplitude;
                img.pixels[img.index(x, y, c)] = static_cast<uint8_t>(std::clamp(v, 0, 255));
            }
        }
    }
    return img;
}

fs::path write_pair_corpus(const fs::path& dir, size_t n, int width, int height) {
    fs::create_directories(dir / "images");
    SourceManifest manifest;
    manifest.source_dataset = SourceDataset::InstructPix2Pix;
    manifest.root = dir;
    for (size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "pair-%04zu", i);
        RgbImage input = make_image(width, height, 1000 + i);
        RgbImage edited = perturb(input, static_cast<int>(i % 10) * 6, 2000 + i);
        const std::string in_rel = std::string("images/") + id + "_in.png";
        const std::string ed_rel = std::string("images/") + id + "_ed.png";
        encode_png(input, dir / in_rel);
        encode_png(edited, dir / ed_rel);
        SourcePair p;
        p.id = id;
        p.input_image = make_image_ref(dir / in_rel, in_rel);
        p.edited_image = make_image_ref(dir / ed_rel, ed_rel);
        p.input_caption = "a photo of scene " + std::to_string(i);
        p.edited_caption = "an edited photo of scene " + std::to_string(i);
        p.original_instruction = "brighten region " + std::to_string(i);
        manifest.sources.push_back(std::move(p));
    }
    const fs::path path = dir / "sources.jsonl";
    write_source_manifest(manifest, path);
    return path;
}

SingleCorpus write_single_corpus(const fs::path& dir, size_t n, int width, int height) {
    static const char* kCaptions[] = {
        "a butterfly resting on a flower",
        "a dog beside a bicycle",
        "a lantern above a wooden table",
        "a boat near a lighthouse",
        "a cat under a garden chair",
    };
    fs::create_directories(dir / "images");
    SourceManifest manifest;
    manifest.source_dataset = SourceDataset::V3Det;
    manifest.root = dir;
    nlohmann::ordered_json captions = nlohmann::ordered_json::object();
    for (size_t i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "img-%04zu", i);
        RgbImage img = make_image(width, height, 5000 + i);
        const std::string rel = std::string("images/") + id + ".png";
        encode_png(img, dir / rel);
        SourcePair p;
        p.id = id;
        p.input_image = make_image_ref(dir / rel, rel);
        const std::string caption = kCaptions[i % 5];
        if (i % 2 == 0) {
            p.input_caption = caption;  // Part II
        } else {
            captions[p.input_image.content_hash] = caption;  // Part III, via captioner
        }
        manifest.sources.push_back(std::move(p));
    }
    SingleCorpus out;
    out.manifest = dir / "sources.jsonl";
    write_source_manifest(manifest, out.manifest);
    nlohmann::ordered_json fixtures;
    fixtures["captions"] = captions;
    fixtures["grounding"] = nlohmann::ordered_json::object();
    out.fixtures = dir / "fixtures.json";
    write_file_atomic(out.fixtures, fixtures.dump(2) + "\n");
    return out;
}

std::string slurp(const fs::path& path) { return read_file(path); }

std::string file_sha256(const fs::path& path) { return sha256_hex(read_file(path)); }

}  // namespace rf::testing
