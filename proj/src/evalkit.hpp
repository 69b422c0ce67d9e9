// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "backends.hpp"
#include "imaging.hpp"

namespace rf {

// ---------------------------------------------------------------------------
// Benchmark
// ---------------------------------------------------------------------------

struct BenchmarkEntry {
    std::string id;
    ImageRef input_image;
    ImageRef gt_edited_image;
    std::string input_caption;
    std::string target_caption;
    std::string direct_instruction;
    std::string reasoning_instruction;
    std::string selected_category;
    std::string target_category;

    // Both instructions non-empty; direct_instruction contains both
    // category strings.
    std::string validate() const;
};

// The shipped direct-instruction templates; each must contain {selected}
// and {target}.
std::vector<std::string> default_templates();

struct BenchmarkBuild {
    std::vector<BenchmarkEntry> entries;
    std::vector<std::pair<std::string, std::string>> skipped;  // id, reason
};

// Runs the region-replacement generation chain over the first n_images
// sources of the corpus. The template for each entry is cycled by source
// index; per-source failures are skipped and reported in `skipped`.
// Images land under out_dir/images; entry paths are relative to out_dir.
BenchmarkBuild build_benchmark(const RunConfig& config, const std::filesystem::path& sources_path,
                               const std::filesystem::path& out_dir,
                               const std::vector<std::string>& templates, int64_t n_images,
                               const BackendSuite* suite_override = nullptr);

void write_benchmark(const std::vector<BenchmarkEntry>& entries,
                     const std::filesystem::path& path);
std::vector<BenchmarkEntry> read_benchmark(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct L1L2 {
    double l1 = 0.0;
    double l2 = 0.0;
};

// Mean absolute difference and mean squared difference over all value
// slots. L2 is the imaging divergence (one definition, two call sites).
L1L2 l1_l2(const PixelGrid& pred, const PixelGrid& gt);

// Cosine similarity in [-1, 1]; errors on dimension mismatch or a zero
// vector.
double embed_similarity(const std::vector<double>& a, const std::vector<double>& b);

enum class InstructionKind { Direct, Reasoning };
std::string instruction_kind_name(InstructionKind k);

struct MetricRow {
    std::string id;
    double l1 = 0.0;
    double l2 = 0.0;
    double clip_i = 0.0;
    double dino = 0.0;
    double clip_t = 0.0;
};

struct MetricAggregate {
    double l1 = 0.0;
    double l2 = 0.0;
    double clip_i = 0.0;
    double dino = 0.0;
    double clip_t = 0.0;
};

struct MetricReport {
    InstructionKind kind = InstructionKind::Direct;
    std::vector<MetricRow> rows;  // sorted by id
    std::vector<std::pair<std::string, std::string>> missing;  // id, reason
    std::optional<MetricAggregate> aggregate;  // absent when rows is empty
};

// Edits every benchmark input with the instruction of the given kind and
// scores the prediction against the ground truth: L1/L2 at canonical
// size, CLIP-I/DINO between image embeddings, CLIP-T between the target
// caption embedding and the prediction embedding. Editor or metric
// failures exclude the row (reported, not zero-filled).
MetricReport evaluate(const std::vector<BenchmarkEntry>& benchmark,
                      const std::filesystem::path& benchmark_root,
                      ConditionedEditBackend& editor, const EmbedderPair& embedders,
                      InstructionKind kind, int canonical_size);

// Plain-text and JSON reports; either report pointer may be null. The
// text includes the reference rows of the reported full-scale results.
std::string render_metric_report(const MetricReport* direct, const MetricReport* reasoning);
std::string metric_report_json(const MetricReport* direct, const MetricReport* reasoning);

// ---------------------------------------------------------------------------
// User study
// ---------------------------------------------------------------------------

struct UserStudyTable {
    std::vector<std::string> methods;
    std::map<std::string, int64_t> counts;
    int64_t total = 0;
};

std::vector<std::string> default_user_study_methods();

// Votes CSV: header rater_id,sample_id,method. A vote naming a method
// outside the list is an error. Counts always sum to the vote total.
UserStudyTable tabulate_user_study(const std::filesystem::path& votes_csv,
                                   const std::vector<std::string>& methods);

std::string render_user_study(const UserStudyTable& table);

}  // namespace rf
