// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "util.hpp"

namespace rf {

// Axis-aligned box in pixel coordinates of the referenced image.
// Half-open on nothing: x_min < x_max and y_min < y_max, both edges
// inside [0, dimension].
struct BoundingBox {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    int width() const { return x_max - x_min; }
    int height() const { return y_max - y_min; }
    long long area() const { return static_cast<long long>(width()) * height(); }

    // Invariant check against the dimensions of the image the box refers to.
    // Returns an error message, or empty when valid.
    std::string validate(int image_width, int image_height) const;

    bool operator==(const BoundingBox&) const = default;
};

struct ImageRef {
    std::string path;  // relative to the dataset root
    int width = 0;
    int height = 0;
    std::string content_hash;  // sha256 of decoded RGB bytes (see imaging)

    std::string validate() const;

    bool operator==(const ImageRef&) const = default;
};

enum class Part { I, II, III };

std::string part_name(Part p);                     // "PartI" / "PartII" / "PartIII"
std::optional<Part> part_from_name(std::string_view name);

struct ReplacementRecord {
    std::string selected_category;
    std::string target_category;
    BoundingBox selected_box;
    std::vector<std::string> candidate_categories;

    std::string validate() const;

    bool operator==(const ReplacementRecord&) const = default;
};

enum class SourceDataset { InstructPix2Pix, V3Det, Fixture };

std::string source_dataset_name(SourceDataset d);
std::optional<SourceDataset> source_dataset_from_name(std::string_view name);

struct ProvenanceRecord {
    SourceDataset source_dataset = SourceDataset::Fixture;
    std::string source_id;
    // backend name -> version string, every backend that touched the sample
    std::map<std::string, std::string> generator_versions;
    int64_t seed = 0;

    bool operator==(const ProvenanceRecord&) const = default;
};

// One dataset record. Optional text fields serialize as explicit null.
struct EditSample {
    std::string id;
    ImageRef input_image;
    ImageRef edited_image;
    std::optional<std::string> input_caption;
    std::optional<std::string> edited_caption;
    std::optional<std::string> direct_instruction;
    std::string reasoning_instruction;
    Part part = Part::I;
    std::optional<ReplacementRecord> replacement;
    ProvenanceRecord provenance;

    // Full invariant check; returns an error message naming the failed
    // invariant, or empty when the sample is finalized.
    std::string validate() const;

    bool operator==(const EditSample&) const = default;
};

struct ShardSummary {
    int64_t total = 0;
    std::map<Part, int64_t> part_counts;

    int64_t count(Part p) const {
        auto it = part_counts.find(p);
        return it == part_counts.end() ? 0 : it->second;
    }
};

// Serialized record key order (documented, fixed):
//   id, part, input_image, edited_image, input_caption, edited_caption,
//   direct_instruction, reasoning_instruction, replacement, provenance
// ImageRef: path, width, height, content_hash
// ReplacementRecord: selected_category, target_category,
//   selected_box [x_min, y_min, x_max, y_max], candidate_categories
// ProvenanceRecord: source_dataset, source_id, generator_versions, seed
std::string sample_to_json_line(const EditSample& sample);
EditSample sample_from_json_line(const std::string& line);

// Writes one JSON document per line, UTF-8, plus a `<shard>.summary.json`
// sidecar. Byte-deterministic for a fixed sample sequence. Samples are
// validated first; a violation names the sample id and the invariant.
ShardSummary write_shard(const std::vector<EditSample>& samples,
                         const std::filesystem::path& shard_path);

// Round-trip inverse of write_shard. Malformed lines report the 1-based
// line number; invariant violations on decode are errors too.
std::vector<EditSample> read_shard(const std::filesystem::path& shard_path);

}  // namespace rf
