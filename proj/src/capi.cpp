// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "reasonforge/reasonforge.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "json.hpp"

#include "backends.hpp"
#include "cache.hpp"
#include "config.hpp"
#include "evalkit.hpp"
#include "imaging.hpp"
#include "pipeline.hpp"
#include "util.hpp"

namespace fs = std::filesystem;

struct rf_config {
    rf::RunConfig impl;
};

namespace {

thread_local std::string t_last_error;

rf_status status_for(rf::ErrorKind kind) {
    switch (kind) {
        case rf::ErrorKind::Config: return RF_ERR_CONFIG;
        case rf::ErrorKind::Io: return RF_ERR_IO;
        case rf::ErrorKind::Invalid: return RF_ERR_INVALID;
        case rf::ErrorKind::Backend: return RF_ERR_BACKEND;
        case rf::ErrorKind::Parse: return RF_ERR_PARSE;
    }
    return RF_ERR_UNKNOWN;
}

template <typename Fn>
rf_status guard(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return RF_OK;
    } catch (const rf::Error& e) {
        t_last_error = e.what();
        return status_for(e.kind());
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return RF_ERR_UNKNOWN;
    } catch (...) {
        t_last_error = "unknown failure";
        return RF_ERR_UNKNOWN;
    }
}

rf_status bad_argument(const std::string& message) {
    t_last_error = message;
    return RF_ERR_CONFIG;
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Suite + embedder construction shared by the entry points that talk to
// backends. Cache only applies to remote runs.
std::shared_ptr<rf::ResponseCache> make_cache(const rf::RunConfig& config) {
    if (config.mock() || config.get("cache_dir").empty()) return nullptr;
    return std::make_shared<rf::ResponseCache>(config.get("cache_dir"));
}

}  // namespace

extern "C" {

rf_config* rf_config_new(void) {
    try {
        return new rf_config();
    } catch (...) {
        return nullptr;
    }
}

void rf_config_free(rf_config* cfg) { delete cfg; }

rf_status rf_config_set(rf_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return bad_argument("rf_config_set: null argument");
    return guard([&] { cfg->impl.set(key, value); });
}

rf_status rf_config_load_file(rf_config* cfg, const char* path) {
    if (!cfg || !path) return bad_argument("rf_config_load_file: null argument");
    return guard([&] { cfg->impl.load_file(path); });
}

rf_status rf_config_load_env(rf_config* cfg) {
    if (!cfg) return bad_argument("rf_config_load_env: null argument");
    return guard([&] { cfg->impl.load_env(); });
}

rf_status rf_config_validate(const rf_config* cfg) {
    if (!cfg) return bad_argument("rf_config_validate: null argument");
    return guard([&] {
        if (auto err = cfg->impl.validate(); !err.empty()) {
            rf::throw_error(rf::ErrorKind::Config, err);
        }
    });
}

rf_status rf_convert(const rf_config* cfg, const char* kind, const char* in_dir,
                     const char* out_path, uint64_t* n_sources_out) {
    if (!cfg || !kind || !in_dir || !out_path) return bad_argument("rf_convert: null argument");
    return guard([&] {
        rf::SourceManifest manifest;
        const std::string k = kind;
        if (k == "ip2p") {
            manifest = rf::convert_ip2p_corpus(in_dir);
        } else if (k == "v3det") {
            manifest = rf::convert_v3det_corpus(in_dir);
        } else {
            rf::throw_error(rf::ErrorKind::Config,
                            "unknown corpus kind '" + k + "' (expected ip2p or v3det)");
        }
        rf::write_source_manifest(manifest, out_path);
        if (n_sources_out) *n_sources_out = manifest.sources.size();
    });
}

rf_status rf_filter_report(const rf_config* cfg, const char* sources_path, char** json_out) {
    if (!cfg || !sources_path || !json_out) return bad_argument("rf_filter_report: null argument");
    return guard([&] { *json_out = dup_string(rf::filter_report_json(cfg->impl, sources_path)); });
}

rf_status rf_generate(const rf_config* cfg, rf_mode mode, const char* sources_path,
                      const char* out_dir, rf_progress_fn progress, void* user_data,
                      uint64_t* n_done_out, uint64_t* n_failed_out, uint64_t* n_filtered_out) {
    if (!cfg || !sources_path || !out_dir) return bad_argument("rf_generate: null argument");
    if (mode != RF_MODE_PART1 && mode != RF_MODE_PART23) {
        return bad_argument("rf_generate: bad mode");
    }
    return guard([&] {
        rf::ProgressFn fn;
        if (progress) {
            fn = [progress, user_data](const std::string& id, rf::SampleStatus status, size_t done,
                                       size_t total) {
                return progress(id.c_str(), rf::sample_status_name(status).c_str(),
                                static_cast<uint64_t>(done), static_cast<uint64_t>(total),
                                user_data) == 0;
            };
        }
        rf::PipelineManifest manifest = rf::orchestrate(
            cfg->impl, mode == RF_MODE_PART1 ? rf::RunMode::Part1 : rf::RunMode::Part23,
            sources_path, out_dir, fn);
        if (n_done_out) *n_done_out = static_cast<uint64_t>(manifest.count(rf::SampleStatus::Done));
        if (n_failed_out) {
            *n_failed_out = static_cast<uint64_t>(manifest.count(rf::SampleStatus::Failed));
        }
        if (n_filtered_out) {
            *n_filtered_out = static_cast<uint64_t>(manifest.count(rf::SampleStatus::FilteredOut));
        }
    });
}

rf_status rf_build_benchmark(const rf_config* cfg, const char* sources_path, const char* out_dir,
                             uint64_t n_images, const char* const* templates, size_t n_templates,
                             uint64_t* n_entries_out, uint64_t* n_skipped_out) {
    if (!cfg || !sources_path || !out_dir) return bad_argument("rf_build_benchmark: null argument");
    if (n_templates > 0 && !templates) return bad_argument("rf_build_benchmark: null templates");
    return guard([&] {
        std::vector<std::string> tpls;
        if (n_templates == 0) {
            tpls = rf::default_templates();
        } else {
            for (size_t i = 0; i < n_templates; ++i) {
                if (!templates[i]) {
                    rf::throw_error(rf::ErrorKind::Config, "null template string");
                }
                tpls.emplace_back(templates[i]);
            }
        }
        rf::BenchmarkBuild build = rf::build_benchmark(cfg->impl, sources_path, out_dir, tpls,
                                                       static_cast<int64_t>(n_images));
        rf::write_benchmark(build.entries, fs::path(out_dir) / "benchmark.jsonl");
        nlohmann::ordered_json skipped = nlohmann::ordered_json::array();
        for (const auto& [id, reason] : build.skipped) {
            nlohmann::ordered_json j;
            j["id"] = id;
            j["reason"] = reason;
            skipped.push_back(j);
        }
        rf::write_file_atomic(fs::path(out_dir) / "skipped.json", skipped.dump(2) + "\n");
        if (n_entries_out) *n_entries_out = build.entries.size();
        if (n_skipped_out) *n_skipped_out = build.skipped.size();
    });
}

rf_status rf_evaluate(const rf_config* cfg, const char* benchmark_path, const char* out_dir,
                      char** text_out) {
    if (!cfg || !benchmark_path || !out_dir) return bad_argument("rf_evaluate: null argument");
    return guard([&] {
        if (auto err = cfg->impl.validate(); !err.empty()) {
            rf::throw_error(rf::ErrorKind::Config, err);
        }
        std::vector<rf::BenchmarkEntry> benchmark = rf::read_benchmark(benchmark_path);
        const fs::path root = fs::path(benchmark_path).parent_path();
        fs::create_directories(fs::path(out_dir) / "images");
        auto cache = make_cache(cfg->impl);
        rf::BackendSuite suite =
            rf::make_suite(cfg->impl, fs::path(out_dir) / "images", cache);
        rf::EmbedderPair embedders = rf::make_embedders(cfg->impl, cache);
        rf::MetricReport direct =
            rf::evaluate(benchmark, root, *suite.editor, embedders, rf::InstructionKind::Direct,
                         cfg->impl.canonical_size());
        rf::MetricReport reasoning =
            rf::evaluate(benchmark, root, *suite.editor, embedders,
                         rf::InstructionKind::Reasoning, cfg->impl.canonical_size());
        const std::string text = rf::render_metric_report(&direct, &reasoning);
        rf::write_file_atomic(fs::path(out_dir) / "report.txt", text);
        rf::write_file_atomic(fs::path(out_dir) / "report.json",
                              rf::metric_report_json(&direct, &reasoning));
        if (text_out) *text_out = dup_string(text);
    });
}

rf_status rf_stats_text(const char* manifest_path, char** text_out) {
    if (!manifest_path || !text_out) return bad_argument("rf_stats_text: null argument");
    return guard([&] { *text_out = dup_string(rf::stats_text(manifest_path)); });
}

rf_status rf_user_study_text(const char* votes_path, const char* const* methods, size_t n_methods,
                             char** text_out) {
    if (!votes_path || !text_out) return bad_argument("rf_user_study_text: null argument");
    if (n_methods > 0 && !methods) return bad_argument("rf_user_study_text: null methods");
    return guard([&] {
        std::vector<std::string> names;
        if (n_methods == 0) {
            names = rf::default_user_study_methods();
        } else {
            for (size_t i = 0; i < n_methods; ++i) {
                if (!methods[i]) rf::throw_error(rf::ErrorKind::Config, "null method name");
                names.emplace_back(methods[i]);
            }
        }
        rf::UserStudyTable table = rf::tabulate_user_study(votes_path, names);
        *text_out = dup_string(rf::render_user_study(table));
    });
}

rf_status rf_divergence(const char* image_a, const char* image_b, int canonical_size,
                        double* divergence_out) {
    if (!image_a || !image_b || !divergence_out) return bad_argument("rf_divergence: null argument");
    return guard([&] {
        *divergence_out = rf::divergence(rf::load_canonical(image_a, canonical_size),
                                         rf::load_canonical(image_b, canonical_size));
    });
}

const char* rf_last_error(void) { return t_last_error.c_str(); }

void rf_string_free(char* s) { std::free(s); }

const char* rf_version(void) { return "1.0.0"; }

}  // extern "C"
