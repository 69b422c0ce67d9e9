// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

// reasonforge CLI. A thin driver over the C API: every subcommand
// resolves a RunConfig (flags > environment > config file > defaults),
// calls one library entry point, and maps the outcome to an exit code —
// 0 success, 1 completed run with sample-level failures, 2 configuration
// or hard errors.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "reasonforge/reasonforge.h"

namespace {

struct ConfigArgs {
    std::string config_file;
    std::vector<std::string> sets;  // key=value
    bool mock = false;
    std::uint64_t seed = 0;
    int parallelism = 1;
    std::string prompt_dir;
    std::string cache_dir;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* parallelism_opt = nullptr;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    cmd->add_option("--config", args.config_file, "Key-value config file (KEY=VALUE lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", args.sets, "Override a config key (key=value), repeatable");
    cmd->add_flag("--mock", args.mock, "Use the deterministic mock backend suite");
    args.seed_opt = cmd->add_option("--seed", args.seed, "Base seed for deterministic generation");
    args.parallelism_opt =
        cmd->add_option("--parallelism", args.parallelism, "Worker threads for the pipeline");
    cmd->add_option("--prompts", args.prompt_dir, "Directory of prompt template files");
    cmd->add_option("--cache", args.cache_dir, "Response cache directory (remote runs)");
}

using ConfigPtr = std::unique_ptr<rf_config, decltype(&rf_config_free)>;

[[noreturn]] void die(const std::string& context) {
    std::cerr << "error: " << context << rf_last_error() << "\n";
    std::exit(2);
}

void check(rf_status status, const std::string& context) {
    if (status != RF_OK) die(context);
}

// Precedence: defaults < config file < environment < flags.
ConfigPtr resolve_config(const ConfigArgs& args) {
    ConfigPtr cfg(rf_config_new(), rf_config_free);
    if (!cfg) die("out of memory: ");
    if (!args.config_file.empty()) {
        check(rf_config_load_file(cfg.get(), args.config_file.c_str()),
              "config file " + args.config_file + ": ");
    }
    check(rf_config_load_env(cfg.get()), "environment: ");
    if (args.mock) check(rf_config_set(cfg.get(), "mock", "true"), "--mock: ");
    if (args.seed_opt && args.seed_opt->count() > 0) {
        check(rf_config_set(cfg.get(), "seed", std::to_string(args.seed).c_str()), "--seed: ");
    }
    if (args.parallelism_opt && args.parallelism_opt->count() > 0) {
        check(rf_config_set(cfg.get(), "parallelism", std::to_string(args.parallelism).c_str()),
              "--parallelism: ");
    }
    if (!args.prompt_dir.empty()) {
        check(rf_config_set(cfg.get(), "prompt_dir", args.prompt_dir.c_str()), "--prompts: ");
    }
    if (!args.cache_dir.empty()) {
        check(rf_config_set(cfg.get(), "cache_dir", args.cache_dir.c_str()), "--cache: ");
    }
    for (const auto& kv : args.sets) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            std::exit(2);
        }
        check(rf_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()),
              "--set " + kv + ": ");
    }
    check(rf_config_validate(cfg.get()), "configuration: ");
    return cfg;
}

struct OwnedString {
    char* value = nullptr;
    ~OwnedString() { rf_string_free(value); }
};

int progress_line(const char* id, const char* status, uint64_t done, uint64_t total, void*) {
    std::fprintf(stderr, "[%llu/%llu] %s %s\n", static_cast<unsigned long long>(done),
                 static_cast<unsigned long long>(total), id, status);
    return 0;
}

int run_generate(const ConfigArgs& cargs, rf_mode mode, const std::string& in,
                 const std::string& out, bool quiet) {
    ConfigPtr cfg = resolve_config(cargs);
    uint64_t done = 0, failed = 0, filtered = 0;
    check(rf_generate(cfg.get(), mode, in.c_str(), out.c_str(),
                      quiet ? nullptr : progress_line, nullptr, &done, &failed, &filtered),
          "generate: ");
    std::cout << "done " << done << ", failed " << failed << ", filtered out " << filtered
              << "\n";
    if (failed > 0) {
        std::cout << failed << " sample(s) failed; see " << out << "/manifest.json\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reasonforge: reasoning-instruction dataset pipeline and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("reasonforge ") + rf_version());

    // convert ------------------------------------------------------------
    std::string conv_kind, conv_in, conv_out;
    auto* conv = app.add_subcommand("convert", "Convert a raw corpus into a source manifest");
    conv->add_option("--kind", conv_kind, "Corpus layout: ip2p (paired) or v3det (single images)")
        ->required()
        ->check(CLI::IsMember({"ip2p", "v3det"}));
    conv->add_option("--in", conv_in, "Corpus directory")->required();
    conv->add_option("--out", conv_out, "Output source manifest path")->required();

    // filter ---------------------------------------------------------------
    ConfigArgs filter_cfg;
    std::string filter_in, filter_out;
    auto* filter = app.add_subcommand("filter", "Report the divergence filter decision per pair");
    filter->add_option("--in", filter_in, "Source manifest")->required();
    filter->add_option("--out", filter_out, "Write the JSON report here instead of stdout");
    add_config_options(filter, filter_cfg);

    // gen part1 | part23 -----------------------------------------------------
    auto* gen = app.add_subcommand("gen", "Run the dataset generation pipeline");
    gen->require_subcommand(1);
    ConfigArgs gen1_cfg, gen23_cfg;
    std::string gen1_in, gen1_out, gen23_in, gen23_out;
    bool gen1_quiet = false, gen23_quiet = false;
    auto* gen1 = gen->add_subcommand("part1", "Reasoning instructions for existing edit pairs");
    gen1->add_option("--in", gen1_in, "Source manifest")->required();
    gen1->add_option("--out", gen1_out, "Output directory")->required();
    gen1->add_flag("--quiet", gen1_quiet, "Suppress per-sample progress");
    add_config_options(gen1, gen1_cfg);
    auto* gen23 = gen->add_subcommand("part23", "Grounded region replacement from single images");
    gen23->add_option("--in", gen23_in, "Source manifest")->required();
    gen23->add_option("--out", gen23_out, "Output directory")->required();
    gen23->add_flag("--quiet", gen23_quiet, "Suppress per-sample progress");
    add_config_options(gen23, gen23_cfg);

    // build-benchmark ---------------------------------------------------------
    ConfigArgs bench_cfg;
    std::string bench_in, bench_out;
    uint64_t bench_n = 1000;
    std::vector<std::string> bench_templates;
    auto* bench = app.add_subcommand("build-benchmark", "Build an evaluation benchmark");
    bench->add_option("--in", bench_in, "Source manifest")->required();
    bench->add_option("--out", bench_out, "Output directory")->required();
    bench->add_option("--n", bench_n, "Number of source images to draw from");
    bench->add_option("--template", bench_templates,
                      "Direct-instruction template with {selected} and {target}, repeatable");
    add_config_options(bench, bench_cfg);

    // evaluate -----------------------------------------------------------
    ConfigArgs eval_cfg;
    std::string eval_benchmark, eval_out;
    auto* eval = app.add_subcommand("evaluate", "Run the metric suite over a benchmark");
    eval->add_option("--benchmark", eval_benchmark, "Benchmark JSONL file")->required();
    eval->add_option("--out", eval_out, "Output directory for report files")->required();
    add_config_options(eval, eval_cfg);

    // stats ---------------------------------------------------------------
    std::string stats_manifest;
    auto* stats = app.add_subcommand("stats", "Render statistics for a pipeline manifest");
    stats->add_option("--manifest", stats_manifest, "manifest.json from a pipeline run")
        ->required();

    // user-study -----------------------------------------------------------
    std::string votes_path;
    std::vector<std::string> study_methods;
    auto* study = app.add_subcommand("user-study", "Tabulate a user-study votes CSV");
    study->add_option("--votes", votes_path, "CSV with header rater_id,sample_id,method")
        ->required();
    study->add_option("--methods", study_methods, "Method names (default: built-in list)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (conv->parsed()) {
        ConfigPtr cfg(rf_config_new(), rf_config_free);
        if (!cfg) die("out of memory: ");
        uint64_t n = 0;
        check(rf_convert(cfg.get(), conv_kind.c_str(), conv_in.c_str(), conv_out.c_str(), &n),
              "convert: ");
        std::cout << "wrote " << n << " source(s) to " << conv_out << "\n";
        return 0;
    }
    if (filter->parsed()) {
        ConfigPtr cfg = resolve_config(filter_cfg);
        OwnedString json;
        check(rf_filter_report(cfg.get(), filter_in.c_str(), &json.value), "filter: ");
        if (filter_out.empty()) {
            std::cout << json.value;
        } else {
            std::ofstream out(filter_out, std::ios::binary);
            out << json.value;
            if (!out) die("filter: cannot write " + filter_out + ": ");
        }
        return 0;
    }
    if (gen1->parsed()) return run_generate(gen1_cfg, RF_MODE_PART1, gen1_in, gen1_out, gen1_quiet);
    if (gen23->parsed()) {
        return run_generate(gen23_cfg, RF_MODE_PART23, gen23_in, gen23_out, gen23_quiet);
    }
    if (bench->parsed()) {
        ConfigPtr cfg = resolve_config(bench_cfg);
        std::vector<const char*> tpl_ptrs;
        for (const auto& t : bench_templates) tpl_ptrs.push_back(t.c_str());
        uint64_t entries = 0, skipped = 0;
        check(rf_build_benchmark(cfg.get(), bench_in.c_str(), bench_out.c_str(), bench_n,
                                 tpl_ptrs.empty() ? nullptr : tpl_ptrs.data(), tpl_ptrs.size(),
                                 &entries, &skipped),
              "build-benchmark: ");
        std::cout << "benchmark entries " << entries << ", skipped " << skipped << "\n";
        if (entries == 0 && skipped > 0) {
            std::cout << "all sources were skipped; see " << bench_out << "/skipped.json\n";
            return 1;
        }
        return 0;
    }
    if (eval->parsed()) {
        ConfigPtr cfg = resolve_config(eval_cfg);
        OwnedString text;
        check(rf_evaluate(cfg.get(), eval_benchmark.c_str(), eval_out.c_str(), &text.value),
              "evaluate: ");
        std::cout << text.value;
        return 0;
    }
    if (stats->parsed()) {
        OwnedString text;
        check(rf_stats_text(stats_manifest.c_str(), &text.value), "stats: ");
        std::cout << text.value;
        return 0;
    }
    if (study->parsed()) {
        std::vector<const char*> method_ptrs;
        for (const auto& m : study_methods) method_ptrs.push_back(m.c_str());
        OwnedString text;
        check(rf_user_study_text(votes_path.c_str(),
                                 method_ptrs.empty() ? nullptr : method_ptrs.data(),
                                 method_ptrs.size(), &text.value),
              "user-study: ");
        std::cout << text.value;
        return 0;
    }
    return 2;
}
