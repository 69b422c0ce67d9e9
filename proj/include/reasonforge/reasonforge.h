/* Copyright (C) 2026 ReasonForge Authors */
/* SPDX-License-Identifier: Apache-2.0 */

/* C interface to the reasonforge pipeline and evaluation toolkit.
 *
 * All functions return rf_status; RF_OK means success. On any other
 * status, rf_last_error() returns a human-readable message for the
 * calling thread. Strings returned through char** out-parameters are
 * heap-allocated; release them with rf_string_free().
 */

#ifndef REASONFORGE_H
#define REASONFORGE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rf_status {
    RF_OK = 0,
    RF_ERR_CONFIG = 1,  /* bad configuration or usage */
    RF_ERR_IO = 2,      /* filesystem trouble */
    RF_ERR_INVALID = 3, /* invariant violation in data */
    RF_ERR_BACKEND = 4, /* an external model service failed */
    RF_ERR_PARSE = 5,   /* malformed input file or reply */
    RF_ERR_UNKNOWN = 6
} rf_status;

typedef enum rf_mode {
    RF_MODE_PART1 = 1,
    RF_MODE_PART23 = 2
} rf_mode;

/* Opaque run configuration handle. */
typedef struct rf_config rf_config;

rf_config* rf_config_new(void);
void rf_config_free(rf_config* cfg);
rf_status rf_config_set(rf_config* cfg, const char* key, const char* value);
rf_status rf_config_load_file(rf_config* cfg, const char* path);
rf_status rf_config_load_env(rf_config* cfg);
/* Validates the resolved configuration; RF_ERR_CONFIG with a message on
 * rejection. */
rf_status rf_config_validate(const rf_config* cfg);

/* Convert a raw corpus directory into a source manifest.
 * kind: "ip2p" (paired before/after corpus) or "v3det" (single images).
 * n_sources_out may be NULL. */
rf_status rf_convert(const rf_config* cfg, const char* kind, const char* in_dir,
                     const char* out_path, uint64_t* n_sources_out);

/* Render the divergence-filter report for a source manifest as JSON. */
rf_status rf_filter_report(const rf_config* cfg, const char* sources_path, char** json_out);

/* Progress callback: return 0 to continue, nonzero to abort the run
 * (the journal is kept so the run can resume). */
typedef int (*rf_progress_fn)(const char* sample_id, const char* status, uint64_t done,
                              uint64_t total, void* user_data);

/* Run the generation pipeline over a source manifest into out_dir.
 * Resumes from out_dir's journal when one is present. The count
 * out-parameters may be NULL. */
rf_status rf_generate(const rf_config* cfg, rf_mode mode, const char* sources_path,
                      const char* out_dir, rf_progress_fn progress, void* user_data,
                      uint64_t* n_done_out, uint64_t* n_failed_out, uint64_t* n_filtered_out);

/* Build an evaluation benchmark from the first n_images sources.
 * templates may be NULL (with n_templates 0) to use the built-in set.
 * Writes out_dir/benchmark.jsonl and out_dir/skipped.json. */
rf_status rf_build_benchmark(const rf_config* cfg, const char* sources_path, const char* out_dir,
                             uint64_t n_images, const char* const* templates, size_t n_templates,
                             uint64_t* n_entries_out, uint64_t* n_skipped_out);

/* Run the metric suite over a benchmark file for both instruction
 * kinds. Writes out_dir/report.txt and out_dir/report.json; text_out
 * (optional) receives the rendered text report. */
rf_status rf_evaluate(const rf_config* cfg, const char* benchmark_path, const char* out_dir,
                      char** text_out);

/* Render the statistics table for a pipeline manifest.json. */
rf_status rf_stats_text(const char* manifest_path, char** text_out);

/* Tabulate a user-study votes CSV (header rater_id,sample_id,method).
 * methods may be NULL (with n_methods 0) to use the built-in list. */
rf_status rf_user_study_text(const char* votes_path, const char* const* methods, size_t n_methods,
                             char** text_out);

/* Mean squared divergence between two images after canonical resize. */
rf_status rf_divergence(const char* image_a, const char* image_b, int canonical_size,
                        double* divergence_out);

/* Message for the last failing call on this thread; empty string if none. */
const char* rf_last_error(void);

void rf_string_free(char* s);

const char* rf_version(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* REASONFORGE_H */
