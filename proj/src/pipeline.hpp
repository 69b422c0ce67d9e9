// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "backends.hpp"
#include "prompts.hpp"

namespace rf {

// ---------------------------------------------------------------------------
// Source corpus manifest: JSONL, one header line declaring the source
// dataset, then one SourcePair per line. Image paths are relative to the
// manifest's directory.
// ---------------------------------------------------------------------------

struct SourcePair {
    std::string id;
    ImageRef input_image;
    std::optional<ImageRef> edited_image;
    std::optional<std::string> input_caption;
    std::optional<std::string> edited_caption;
    std::optional<std::string> original_instruction;

    // Part I needs the full five-field pair; Part II/III generation only
    // needs the input image (caption optional).
    std::string validate_for_part1() const;
    std::string validate_minimal() const;

    bool has_pair() const { return edited_image.has_value(); }
};

struct SourceManifest {
    SourceDataset source_dataset = SourceDataset::Fixture;
    std::vector<SourcePair> sources;
    std::filesystem::path root;  // directory the image paths resolve against

    const SourcePair* find(const std::string& id) const;
};

SourceManifest read_source_manifest(const std::filesystem::path& path);
// Paths inside `manifest` must already be relative to the target directory.
void write_source_manifest(const SourceManifest& manifest, const std::filesystem::path& path);

// Corpus converters ("convert" subcommand). Both expect a pre-fetched
// corpus directory:
//   ip2p:  metadata.jsonl lines {id?, input_image, edited_image,
//          input_caption, edited_caption, instruction}, image paths
//          relative to the directory.
//   v3det: metadata.jsonl lines {id?, image, caption?}; or, without a
//          metadata file, every *.png/*.jpg/*.jpeg in the directory
//          (sorted) becomes an image-only source.
// Emitted image paths stay relative to the corpus directory; pass
// out_path inside/alongside it or use absolute-path corpora.
SourceManifest convert_ip2p_corpus(const std::filesystem::path& dir);
SourceManifest convert_v3det_corpus(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Pipeline manifest
// ---------------------------------------------------------------------------

enum class SampleStatus { Pending, Done, Failed, FilteredOut };

std::string sample_status_name(SampleStatus s);
std::optional<SampleStatus> sample_status_from_name(std::string_view name);

struct ManifestEntry {
    SampleStatus status = SampleStatus::Pending;
    std::optional<Part> part;
    std::optional<double> divergence;
    std::vector<std::string> warnings;
    std::vector<std::string> cache_keys;  // deterministic request fingerprints
    std::string error;                    // Failed only
    std::optional<EditSample> sample;     // Done only; persisted via the journal
};

struct PipelineManifest {
    std::string run_id;
    std::string config_hash;
    std::map<std::string, ManifestEntry> entries;

    std::map<Part, int64_t> part_counts() const;
    std::map<std::string, int64_t> failure_histogram() const;
    int64_t count(SampleStatus s) const;
};

// ---------------------------------------------------------------------------
// Stage machines
// ---------------------------------------------------------------------------

enum class RunMode { Part1, Part23 };

struct PipelineContext {
    const RunConfig* config = nullptr;
    const BackendSuite* suite = nullptr;
    const PromptLibrary* prompts = nullptr;
    SourceDataset source_dataset = SourceDataset::Fixture;  // from the corpus header
    std::filesystem::path source_root;  // resolves source image paths
    std::filesystem::path out_dir;      // sample image paths are stored relative to this
};

struct StageOutput {
    EditSample sample;
    std::vector<std::string> warnings;
    std::vector<std::string> cache_keys;
};

// Part I: copy the source pair unmodified (hash-verified) and synthesize
// the reasoning instruction via candidate generation + selection.
StageOutput run_part1(const PipelineContext& ctx, const SourcePair& source);

// Part II/III: caption (source caption when present → PartII, generated
// → PartIII), extract categories, pick the replacement triple, ground the
// selected category, pad the best box, inpaint.
StageOutput run_part23(const PipelineContext& ctx, const SourcePair& source);

// 5%-per-edge padding, clamped to the image. Exposed for tests.
BoundingBox pad_box(const BoundingBox& box, double padding, int image_width, int image_height);

// Highest score, then largest area, then top-left-most.
const Detection& pick_detection(const std::vector<Detection>& detections);

// ---------------------------------------------------------------------------
// Orchestrator
// ---------------------------------------------------------------------------

// Called after each sample reaches a terminal status (serialized).
// Returning false aborts the run: the journal keeps what finished, no
// final outputs are written, and orchestrate throws.
using ProgressFn =
    std::function<bool(const std::string& id, SampleStatus status, size_t done, size_t total)>;

// Runs the paired stage machine over every source, honoring the
// divergence filter pre-pass (Part I always; Part II when filter_part2 is
// set and the source carries a pair). Writes run_config.json up front,
// journals every terminal sample, and on completion writes sorted shards
// (shard-NNNNN.jsonl + summaries), manifest.json, and stats.txt under
// out_dir. A partially processed out_dir resumes if its journal's
// config_hash matches; a mismatch is refused.
PipelineManifest orchestrate(const RunConfig& config, RunMode mode,
                             const std::filesystem::path& sources_path,
                             const std::filesystem::path& out_dir,
                             const ProgressFn& progress = {},
                             const BackendSuite* suite_override = nullptr);

// Plain-text per-part counts + failure histogram for an orchestrate
// output directory (reads manifest.json), including the reference row of
// the full-scale run this pipeline mirrors.
std::string stats_text(const std::filesystem::path& manifest_json);

// Divergence report for a source manifest: mode, threshold, and the
// kept/abandoned partition with per-id divergences.
std::string filter_report_json(const RunConfig& config, const std::filesystem::path& sources_path);

}  // namespace rf
