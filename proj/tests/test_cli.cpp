// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end checks of the installed command-line binary (located via
// RF_CLI_PATH). Each invocation runs in a subprocess with stdout/stderr
// captured to scratch files.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "json.hpp"

#include "fixtures.hpp"
#include "imaging.hpp"
#include "pipeline.hpp"
#include "records.hpp"
#include "util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rf;
using namespace rf::testing;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const fs::path& dir, const std::string& args,
                  const std::string& env_prefix = {}) {
    static int counter = 0;
    const fs::path out_file = dir / ("cli-stdout-" + std::to_string(counter) + ".txt");
    const fs::path err_file = dir / ("cli-stderr-" + std::to_string(counter) + ".txt");
    ++counter;
    std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + "\"" + RF_CLI_PATH + "\" " +
                      args + " > \"" + out_file.string() + "\" 2> \"" + err_file.string() + "\"";
    int status = std::system(cmd.c_str());
    CliResult result;
    if (status != -1 && WIFEXITED(status)) result.code = WEXITSTATUS(status);
    result.out = slurp(out_file);
    result.err = slurp(err_file);
    return result;
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

// Output-tree digest; the volatile-by-design files are compared via
// manifest_sans_run instead.
std::map<std::string, std::string> tree_hashes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.journal" || rel == "run_config.json" || rel == "manifest.json") {
            continue;
        }
        out[rel] = file_sha256(entry.path());
    }
    return out;
}

ordered_json manifest_sans_run(const fs::path& out_dir) {
    ordered_json j = ordered_json::parse(slurp(out_dir / "manifest.json"));
    j.erase("run");
    return j;
}

}  // namespace

TEST_CASE("cli --version prints the binary version") {
    const fs::path dir = scratch_dir("cli-version");
    CliResult r = run_cli(dir, "--version");
    CHECK(r.code == 0);
    CHECK(r.out == "reasonforge 1.0.0\n");
}

TEST_CASE("cli usage errors exit 2") {
    const fs::path dir = scratch_dir("cli-usage");
    CHECK(run_cli(dir, "").code == 2);
    CHECK(run_cli(dir, "gen part1 --out " + quoted(dir / "o")).code == 2);
    CHECK(run_cli(dir, "convert --kind nope --in x --out y").code == 2);
    CHECK(run_cli(dir, "--definitely-not-a-flag").code == 2);

    const fs::path sources = write_pair_corpus(dir / "corpus", 4);
    CliResult bad_set = run_cli(dir, "filter --in " + quoted(sources) + " --set seedonly");
    CHECK(bad_set.code == 2);
    CHECK(bad_set.err.find("--set expects key=value") != std::string::npos);

    CliResult bad_cfg = run_cli(dir, "gen part1 --mock --in " + quoted(sources) + " --out " +
                                         quoted(dir / "o2") + " --set n_candidates=0");
    CHECK(bad_cfg.code == 2);
    CHECK(bad_cfg.err.find("error: configuration: ") != std::string::npos);
    CHECK(bad_cfg.err.find("n_candidates must be >= 1") != std::string::npos);

    CliResult bad_stats = run_cli(dir, "stats --manifest " + quoted(dir / "absent.json"));
    CHECK(bad_stats.code == 2);
    CHECK(bad_stats.err.find("error: stats: ") != std::string::npos);
}

TEST_CASE("cli gen part1 is deterministic across runs and parallelism") {
    const fs::path dir = scratch_dir("cli-gen");
    const fs::path sources = write_pair_corpus(dir / "corpus", 10);

    const std::string common = "gen part1 --mock --seed 7 --in " + quoted(sources) + " --out ";
    CliResult first = run_cli(dir, common + quoted(dir / "o1") + " --quiet");
    CHECK(first.code == 0);
    CHECK(first.out == "done 9, failed 0, filtered out 1\n");
    CHECK(first.err.empty());

    CliResult second = run_cli(dir, common + quoted(dir / "o2") + " --parallelism 3");
    CHECK(second.code == 0);
    CHECK(second.out == first.out);
    CHECK(second.err.find("[") != std::string::npos);  // progress lines

    CHECK(tree_hashes(dir / "o1") == tree_hashes(dir / "o2"));
    CHECK(manifest_sans_run(dir / "o1") == manifest_sans_run(dir / "o2"));

    CliResult stats =
        run_cli(dir, "stats --manifest " + quoted(dir / "o1" / "manifest.json"));
    CHECK(stats.code == 0);
    CHECK(stats.out.find("Pipeline statistics") != std::string::npos);
    CHECK(stats.out.find("8,013 / 4,141 / 28,058") != std::string::npos);
}

TEST_CASE("cli config precedence: flags beat environment beat config file") {
    const fs::path dir = scratch_dir("cli-precedence");
    const fs::path sources = write_pair_corpus(dir / "corpus", 6);
    const std::string gen = "gen part1 --mock --quiet --in " + quoted(sources) + " --out ";

    CHECK(run_cli(dir, gen + quoted(dir / "seed7") + " --seed 7").code == 0);
    CHECK(run_cli(dir, gen + quoted(dir / "seed3") + " --seed 3").code == 0);
    // Seeds must actually steer the output for the comparisons to mean anything.
    CHECK(manifest_sans_run(dir / "seed7") != manifest_sans_run(dir / "seed3"));

    CHECK(run_cli(dir, gen + quoted(dir / "flag-wins") + " --seed 7",
                  "REASONFORGE_SEED=3").code == 0);
    CHECK(manifest_sans_run(dir / "flag-wins") == manifest_sans_run(dir / "seed7"));

    write_file_atomic(dir / "file.conf", "seed=5\n");
    CHECK(run_cli(dir, gen + quoted(dir / "env-wins") + " --config " + quoted(dir / "file.conf"),
                  "REASONFORGE_SEED=3").code == 0);
    CHECK(manifest_sans_run(dir / "env-wins") == manifest_sans_run(dir / "seed3"));

    CHECK(run_cli(dir, gen + quoted(dir / "file-wins") + " --config " +
                           quoted(dir / "file.conf")).code == 0);
    CliResult seed5 = run_cli(dir, gen + quoted(dir / "seed5") + " --seed 5");
    CHECK(seed5.code == 0);
    CHECK(manifest_sans_run(dir / "file-wins") == manifest_sans_run(dir / "seed5"));
}

TEST_CASE("cli gen exits 1 when samples fail") {
    const fs::path dir = scratch_dir("cli-gen-failures");
    fs::create_directories(dir / "corpus" / "images");
    SourceManifest m;
    m.source_dataset = SourceDataset::V3Det;
    m.root = dir / "corpus";
    for (int i = 0; i < 2; ++i) {
        const std::string name = "img-" + std::to_string(i) + ".png";
        encode_png(make_image(96, 80, 700 + i), dir / "corpus" / "images" / name);
        SourcePair p;
        p.id = "img-" + std::to_string(i);
        p.input_image = make_image_ref(dir / "corpus" / "images" / name, "images/" + name);
        p.input_caption = i == 0 ? "a butterfly resting on a flower" : "in and of the";
        m.sources.push_back(std::move(p));
    }
    const fs::path sources = dir / "corpus" / "sources.jsonl";
    write_source_manifest(m, sources);

    CliResult r = run_cli(dir, "gen part23 --mock --seed 5 --quiet --in " + quoted(sources) +
                                   " --out " + quoted(dir / "out"));
    CHECK(r.code == 1);
    CHECK(r.out.find("failed 1") != std::string::npos);
    CHECK(r.out.find("1 sample(s) failed; see ") != std::string::npos);
    CHECK(r.out.find("manifest.json") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "manifest.json"));
}

TEST_CASE("cli filter writes a JSON report to stdout or a file") {
    const fs::path dir = scratch_dir("cli-filter");
    const fs::path sources = write_pair_corpus(dir / "corpus", 10);

    CliResult to_stdout = run_cli(dir, "filter --mock --in " + quoted(sources));
    CHECK(to_stdout.code == 0);
    ordered_json j = ordered_json::parse(to_stdout.out);
    CHECK(j.at("mode") == "rank");
    CHECK(j.at("divergences").size() == 10);

    CliResult to_file = run_cli(dir, "filter --mock --in " + quoted(sources) + " --out " +
                                         quoted(dir / "report.json"));
    CHECK(to_file.code == 0);
    CHECK(to_file.out.empty());
    CHECK(ordered_json::parse(slurp(dir / "report.json")) == j);

    CHECK(run_cli(dir, "filter --mock --in " + quoted(dir / "absent.jsonl")).code == 2);
}

TEST_CASE("cli convert, build-benchmark, evaluate, and user-study round trip") {
    const fs::path dir = scratch_dir("cli-bench");

    const fs::path raw = dir / "raw";
    fs::create_directories(raw);
    encode_png(make_image(64, 48, 21), raw / "one.png");
    encode_png(make_image(64, 48, 22), raw / "two.png");
    CliResult conv = run_cli(dir, "convert --kind v3det --in " + quoted(raw) + " --out " +
                                      quoted(dir / "converted.jsonl"));
    CHECK(conv.code == 0);
    CHECK(conv.out.find("wrote 2 source(s)") != std::string::npos);
    CHECK(fs::exists(dir / "converted.jsonl"));

    SingleCorpus corpus = write_single_corpus(dir / "corpus", 6);
    const std::string common = " --mock --seed 11 --set mock_fixtures=" +
                               corpus.fixtures.string();
    CliResult bench =
        run_cli(dir, "build-benchmark --in " + quoted(corpus.manifest) + " --out " +
                         quoted(dir / "bench") + " --n 4" + common +
                         " --template \"Turn {selected} to {target}\"");
    CHECK(bench.code == 0);
    CHECK(bench.out.find("benchmark entries ") != std::string::npos);
    CHECK(fs::exists(dir / "bench" / "benchmark.jsonl"));
    CHECK(fs::exists(dir / "bench" / "skipped.json"));

    CliResult eval = run_cli(dir, "evaluate --benchmark " +
                                      quoted(dir / "bench" / "benchmark.jsonl") + " --out " +
                                      quoted(dir / "eval") + common);
    CHECK(eval.code == 0);
    CHECK(eval.out.find("Quantitative results (local run)") != std::string::npos);
    CHECK(eval.out.find("Reference (reported results)") != std::string::npos);
    CHECK(fs::exists(dir / "eval" / "report.txt"));
    CHECK(fs::exists(dir / "eval" / "report.json"));

    write_file_atomic(dir / "votes.csv",
                      "rater_id,sample_id,method\n"
                      "r1,s1,ReasonPix2Pix\n"
                      "r2,s1,InstructPix2Pix\n");
    CliResult study = run_cli(dir, "user-study --votes " + quoted(dir / "votes.csv"));
    CHECK(study.code == 0);
    CHECK(study.out.find("User study (local votes)") != std::string::npos);
    CHECK(study.out.find("Reference (reported votes)") != std::string::npos);

    CliResult custom = run_cli(dir, "user-study --votes " + quoted(dir / "votes.csv") +
                                        " --methods ReasonPix2Pix InstructPix2Pix");
    CHECK(custom.code == 0);
    CHECK(custom.out.find("ReasonPix2Pix") != std::string::npos);
}
