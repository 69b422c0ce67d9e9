// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "imaging.hpp"
#include "pipeline.hpp"

namespace rf::testing {

// Fresh per-test scratch directory under the system temp root. Any
// previous contents are removed, so goldens never see stale state.
std::filesystem::path scratch_dir(const std::string& name);

// Deterministic synthetic photo: smooth gradients plus seeded noise.
RgbImage make_image(int width, int height, uint64_t seed);

// Copy of `base` with a seeded rectangular band shifted by `amplitude`
// (0 → identical copy). Bigger amplitude → bigger divergence.
RgbImage perturb(const RgbImage& base, int amplitude, uint64_t seed);

// Paired corpus for the Part-I pipeline: n before/after pairs with
// captions and a direct instruction. Pair i is perturbed with amplitude
// (i % 10) * 6, so a rank filter has a spread to work with and pairs
// with i % 10 == 0 are exact copies. Returns the manifest path.
std::filesystem::path write_pair_corpus(const std::filesystem::path& dir, size_t n,
                                        int width = 96, int height = 80);

// Single-image corpus for the Part-II/III pipeline. Every even source
// carries a caption (Part II); odd ones rely on the captioner (Part
// III). Writes a mock-fixtures JSON next to the manifest that pins a
// caption for the caption-less images (grounding boxes stay derived),
// and returns {manifest, fixtures} paths.
struct SingleCorpus {
    std::filesystem::path manifest;
    std::filesystem::path fixtures;
};
SingleCorpus write_single_corpus(const std::filesystem::path& dir, size_t n, int width = 96,
                                 int height = 80);

// Reads a file fully (binary).
std::string slurp(const std::filesystem::path& path);

// sha256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

}  // namespace rf::testing
