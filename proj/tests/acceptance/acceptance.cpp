// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate: one pass/fail line per shipped guarantee, exit 0 only
// when every criterion holds. Tolerances and runtime budgets are pinned
// here as constants; each criterion function returns an empty string on
// pass or a human-readable detail on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "backends.hpp"
#include "config.hpp"
#include "doubles.hpp"
#include "evalkit.hpp"
#include "fixtures.hpp"
#include "imaging.hpp"
#include "pipeline.hpp"
#include "prompts.hpp"
#include "records.hpp"
#include "util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace rf;
using namespace rf::testing;

namespace {

constexpr double kDivergenceOracleTol = 1e-9;  // criterion 1
constexpr double kUnityTol = 1e-12;            // criterion 6: CLIP-I/DINO vs 1.0
constexpr double kCosineTol = 1e-7;            // criterion 6: cosine fixture
const double kCosineOracle = 32.0 / std::sqrt(14.0 * 77.0);  // (1,2,3)·(4,5,6)

constexpr double kOracleBudgetSeconds = 5.0;       // criteria 1 and 2
constexpr double kDeterminismBudgetSeconds = 60.0; // criterion 3

#define EXPECT(cond, detail)                          \
    do {                                              \
        if (!(cond)) return std::string(detail);      \
    } while (0)

RunConfig mock_config(int seed) {
    RunConfig cfg;
    cfg.set("mock", "true");
    cfg.set("seed", std::to_string(seed));
    cfg.set("canonical_size", "64");
    return cfg;
}

PixelGrid random_grid(int width, int height, Rng& rng) {
    PixelGrid g = PixelGrid::filled(width, height, 0.0f);
    for (auto& v : g.values) v = static_cast<float>(rng.next_double());
    return g;
}

// ---------------------------------------------------------------------------
// 1. Divergence oracle
// ---------------------------------------------------------------------------

std::string check_divergence_oracle() {
    Rng rng(2026);
    for (int trial = 0; trial < 1000; ++trial) {
        PixelGrid a = random_grid(16, 16, rng);
        PixelGrid b = random_grid(16, 16, rng);

        // Per-pixel loop in a deliberately different traversal order.
        double sum = 0.0;
        for (int x = 0; x < a.width; ++x) {
            for (int y = 0; y < a.height; ++y) {
                for (int c = 0; c < 3; ++c) {
                    double d = static_cast<double>(a.at(x, y, c)) -
                               static_cast<double>(b.at(x, y, c));
                    sum += d * d;
                }
            }
        }
        double oracle = sum / static_cast<double>(a.values.size());

        double got = divergence(a, b);
        EXPECT(std::fabs(got - oracle) <= kDivergenceOracleTol,
               "trial " + std::to_string(trial) + ": divergence " + std::to_string(got) +
                   " vs oracle " + std::to_string(oracle));
        EXPECT(divergence(b, a) == got, "trial " + std::to_string(trial) + ": not symmetric");
        EXPECT(divergence(a, a) == 0.0,
               "trial " + std::to_string(trial) + ": self-divergence not exactly zero");
    }
    return {};
}

// ---------------------------------------------------------------------------
// 2. Filter laws
// ---------------------------------------------------------------------------

std::string check_filter_laws() {
    Rng rng(7040);

    // Absolute-mode monotonicity: raising tau never keeps a pair that a
    // lower tau abandoned.
    for (int trial = 0; trial < 200; ++trial) {
        const size_t n = 1 + rng.next_below(150);
        std::vector<std::pair<std::string, double>> divergences;
        for (size_t i = 0; i < n; ++i) {
            divergences.emplace_back("s-" + std::to_string(i),
                                     static_cast<double>(rng.next_below(40)) * 1e-3);
        }
        double tau1 = rng.next_double() * 0.05;
        double tau2 = rng.next_double() * 0.05;
        if (tau1 > tau2) std::swap(tau1, tau2);

        FilterConfig fc;
        fc.mode = FilterConfig::Mode::Absolute;
        fc.tau = tau1;
        FilterResult low = apply_filter(divergences, fc);
        fc.tau = tau2;
        FilterResult high = apply_filter(divergences, fc);
        EXPECT(std::includes(low.kept.begin(), low.kept.end(), high.kept.begin(),
                             high.kept.end()),
               "trial " + std::to_string(trial) + ": kept(tau2) is not a subset of kept(tau1)");
    }

    // RankFraction(p) == Absolute at the p-quantile when divergences are
    // distinct, for the pinned fractions.
    for (double p : {0.0, 0.1, 0.25, 0.5, 1.0}) {
        for (size_t n : {size_t{1}, size_t{7}, size_t{20}, size_t{100}}) {
            std::vector<std::pair<std::string, double>> divergences;
            for (size_t i = 0; i < n; ++i) {
                divergences.emplace_back("s-" + std::to_string(rng.next_below(1000000)) + "-" +
                                             std::to_string(i),
                                         static_cast<double>(i + 1) * 1e-3);
            }
            for (size_t i = n; i > 1; --i) {
                std::swap(divergences[i - 1], divergences[rng.next_below(i)]);
            }

            std::vector<double> sorted_values;
            for (const auto& [id, d] : divergences) sorted_values.push_back(d);
            std::sort(sorted_values.begin(), sorted_values.end());
            const size_t k = static_cast<size_t>(
                std::floor(p * static_cast<double>(n) + 1e-9));
            FilterConfig rank;
            rank.mode = FilterConfig::Mode::RankFraction;
            rank.fraction = p;
            FilterConfig absolute;
            absolute.mode = FilterConfig::Mode::Absolute;
            absolute.tau = k >= n ? sorted_values.back() + 1.0 : sorted_values[k];

            FilterResult by_rank = apply_filter(divergences, rank);
            FilterResult by_tau = apply_filter(divergences, absolute);
            EXPECT(by_rank.kept == by_tau.kept && by_rank.abandoned == by_tau.abandoned,
                   "p=" + std::to_string(p) + " n=" + std::to_string(n) +
                       ": rank and absolute partitions differ");
        }
    }

    // Tie-break check with the cut between distinct values: both zeros go.
    {
        std::vector<std::pair<std::string, double>> divergences = {
            {"b", 0.0}, {"a", 0.0}, {"c", 1.0}, {"d", 2.0}};
        FilterConfig rank;
        rank.mode = FilterConfig::Mode::RankFraction;
        rank.fraction = 0.5;
        FilterConfig absolute;
        absolute.mode = FilterConfig::Mode::Absolute;
        absolute.tau = 1.0;
        FilterResult by_rank = apply_filter(divergences, rank);
        FilterResult by_tau = apply_filter(divergences, absolute);
        EXPECT(by_rank.abandoned == std::vector<std::string>({"a", "b"}),
               "tied pairs were not abandoned in id order");
        EXPECT(by_rank.kept == by_tau.kept && by_rank.abandoned == by_tau.abandoned,
               "tie case: rank and absolute partitions differ");
    }
    return {};
}

// ---------------------------------------------------------------------------
// 3. End-to-end determinism
// ---------------------------------------------------------------------------

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
    j.erase("run");  // run_id, timestamps, host parallelism: volatile by design
    return j;
}

std::string check_determinism() {
    const fs::path dir = scratch_dir("acceptance-determinism");
    const fs::path sources = write_pair_corpus(dir / "corpus", 50);

    RunConfig cfg = mock_config(7);
    cfg.set("shard_size", "20");

    orchestrate(cfg, RunMode::Part1, sources, dir / "p1");

    RunConfig cfg8 = cfg;
    cfg8.set("parallelism", "8");
    orchestrate(cfg8, RunMode::Part1, sources, dir / "p8");

    size_t seen = 0;
    auto stop_at_20 = [&seen](const std::string&, SampleStatus, size_t, size_t) {
        seen += 1;
        return seen <= 20;
    };
    bool aborted = false;
    try {
        orchestrate(cfg, RunMode::Part1, sources, dir / "resumed", stop_at_20);
    } catch (const Error& e) {
        aborted = std::string(e.what()).find("aborted by progress callback") !=
                  std::string::npos;
    }
    EXPECT(aborted, "interrupting the run after 20 samples did not abort it");
    orchestrate(cfg, RunMode::Part1, sources, dir / "resumed");

    EXPECT(fs::exists(dir / "p1" / "shard-00000.jsonl"), "no shards were written");
    auto p1 = tree_hashes(dir / "p1");
    EXPECT(p1 == tree_hashes(dir / "p8"), "parallelism 8 output tree differs from parallelism 1");
    EXPECT(p1 == tree_hashes(dir / "resumed"),
           "interrupted-then-resumed output tree differs from the straight run");
    auto m1 = manifest_sans_run(dir / "p1");
    EXPECT(m1 == manifest_sans_run(dir / "p8"),
           "parallelism 8 manifest differs from parallelism 1");
    EXPECT(m1 == manifest_sans_run(dir / "resumed"),
           "interrupted-then-resumed manifest differs from the straight run");
    return {};
}

// ---------------------------------------------------------------------------
// 4. Part II/III locality
// ---------------------------------------------------------------------------

std::string exterior_hash(const RgbImage& image, const BoundingBox& box) {
    std::vector<uint8_t> bytes;
    bytes.reserve(image.pixels.size());
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            if (x >= box.x_min && x < box.x_max && y >= box.y_min && y < box.y_max) continue;
            for (int c = 0; c < 3; ++c) bytes.push_back(image.pixels[image.index(x, y, c)]);
        }
    }
    return sha256_hex(std::string(bytes.begin(), bytes.end()));
}

std::string check_locality() {
    const fs::path dir = scratch_dir("acceptance-locality");
    SingleCorpus corpus = write_single_corpus(dir / "corpus", 30);

    RunConfig cfg = mock_config(5);
    cfg.set("mock_fixtures", corpus.fixtures.string());
    const fs::path out = dir / "out";
    orchestrate(cfg, RunMode::Part23, corpus.manifest, out);

    size_t checked = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("shard-", 0) != 0 || entry.path().extension() != ".jsonl") continue;
        for (const EditSample& s : read_shard(entry.path())) {
            EXPECT(s.replacement.has_value(), s.id + ": no replacement record");
            RgbImage input = decode_image(out / s.input_image.path);
            RgbImage edited = decode_image(out / s.edited_image.path);
            EXPECT(input.width == edited.width && input.height == edited.height,
                   s.id + ": edited image changed dimensions");
            const BoundingBox& box = s.replacement->selected_box;
            EXPECT(exterior_hash(input, box) == exterior_hash(edited, box),
                   s.id + ": pixels outside the padded box changed");
            ++checked;
        }
    }
    EXPECT(checked >= 20, "only " + std::to_string(checked) + " samples reached Done");
    return {};
}

// ---------------------------------------------------------------------------
// 5. Prompt/protocol contracts
// ---------------------------------------------------------------------------

std::string check_prompt_contracts() {
    RunConfig cfg = mock_config(3);
    const fs::path dir = scratch_dir("acceptance-prompts");
    BackendSuite suite = make_suite(cfg, dir / "images", nullptr);
    PromptLibrary lib = PromptLibrary::builtin();
    GenPromptInput input{"a pond in a park", "a frozen pond in a park", "turn the pond to ice"};

    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t k = 2 + rng.next_below(6);
        std::vector<std::string> candidates;
        for (size_t j = 0; j < k; ++j) {
            candidates.push_back("rewrite " + std::to_string(trial) + "-" + std::to_string(j) +
                                 " so the pond freezes over");
        }
        SelectResult res = select_best(*suite.llm, lib, input, candidates, 0.0,
                                       derive_seed(2024, "trial:" + std::to_string(trial)),
                                       nullptr);
        EXPECT(res.index < candidates.size(),
               "trial " + std::to_string(trial) + ": index out of range");
        EXPECT(res.instruction == candidates[res.index],
               "trial " + std::to_string(trial) + ": returned text is not the indexed candidate");
        EXPECT(std::find(candidates.begin(), candidates.end(), res.instruction) !=
                   candidates.end(),
               "trial " + std::to_string(trial) + ": returned text is not a candidate");
    }

    // Valid replacement replies round-trip, including case and fences.
    const std::vector<std::string> categories = {"butterfly", "flower", "lantern"};
    ReplaceDecision d = parse_replace_reply(
        "```json\n{\"selected\": \"BUTTERFLY\", \"target\": \" bee \", "
        "\"instruction\": \"  let it buzz instead  \"}\n```",
        categories);
    EXPECT(d.selected_category == "butterfly", "selected did not canonicalize to the candidate");
    EXPECT(d.target_category == "bee", "target did not round-trip trimmed");
    EXPECT(d.instruction == "let it buzz instead", "instruction did not round-trip trimmed");

    // Every malformed-reply path errors as a parse failure.
    const std::vector<std::pair<std::string, std::string>> malformed = {
        {"not json at all", "non-JSON"},
        {"[1, 2, 3]", "array instead of object"},
        {R"({"selected": "butterfly", "target": "bee"})", "missing key"},
        {R"({"selected": "butterfly", "target": "bee", "instruction": "x", "extra": 1})",
         "extra key"},
        {R"({"selected": "butterfly", "target": 7, "instruction": "x"})", "non-string value"},
        {R"({"selected": "zebra", "target": "bee", "instruction": "x"})", "unknown selected"},
        {R"({"selected": "butterfly", "target": "BUTTERFLY", "instruction": "x"})",
         "target equals selected"},
        {R"({"selected": "butterfly", "target": "", "instruction": "x"})", "empty target"},
        {R"({"selected": "butterfly", "target": "bee", "instruction": "   "})",
         "blank instruction"},
    };
    for (const auto& [reply, label] : malformed) {
        try {
            parse_replace_reply(reply, categories);
            return label + ": malformed reply was accepted";
        } catch (const Error& e) {
            EXPECT(e.kind() == ErrorKind::Parse, label + ": wrong error kind");
        }
    }

    // Select fallback on an out-of-range or unusable judge reply.
    for (const std::string& reply : {std::string("7"), std::string("none of them"),
                                     std::string("0"), std::string("")}) {
        ScriptedChat judge([reply](const ChatRequest&) { return reply; });
        std::vector<std::string> warnings;
        SelectResult res = select_best(judge, lib, input, {"first", "second"}, 0.0, 1, &warnings);
        EXPECT(res.used_fallback && res.index == 0 && res.instruction == "first",
               "reply \"" + reply + "\" did not fall back to the first candidate");
        EXPECT(!warnings.empty(), "fallback produced no warning");
    }
    ScriptedChat empty_completion([](const ChatRequest&) -> std::string {
        throw_error(ErrorKind::Backend, "chat: empty completion");
    });
    SelectResult res = select_best(empty_completion, lib, input, {"first", "second"}, 0.0, 1,
                                   nullptr);
    EXPECT(res.used_fallback && res.index == 0, "empty completion did not fall back");
    return {};
}

// ---------------------------------------------------------------------------
// 6. Metric identities
// ---------------------------------------------------------------------------

std::string check_metric_identities() {
    const fs::path dir = scratch_dir("acceptance-metrics");
    fs::create_directories(dir / "images");
    std::vector<BenchmarkEntry> entries;
    for (int i = 0; i < 3; ++i) {
        BenchmarkEntry e;
        e.id = "bench-000" + std::to_string(i);
        const fs::path in_rel = "images/in_" + e.id + ".png";
        const fs::path gt_rel = "images/gt_" + e.id + ".png";
        encode_png(make_image(64, 48, 100 + i), dir / in_rel);
        encode_png(make_image(64, 48, 200 + i), dir / gt_rel);
        e.input_image = make_image_ref(dir / in_rel, in_rel.string());
        e.gt_edited_image = make_image_ref(dir / gt_rel, gt_rel.string());
        e.input_caption = "a butterfly resting on a flower";
        e.target_caption = "a bee resting on a flower";
        e.direct_instruction = "Turn butterfly to bee";
        e.reasoning_instruction = "let something that buzzes take its place";
        e.selected_category = "butterfly";
        e.target_category = "bee";
        entries.push_back(std::move(e));
    }

    std::map<std::string, ImageRef> gt_by_input;
    for (const auto& e : entries) {
        ImageRef gt = e.gt_edited_image;
        gt.path = (dir / e.gt_edited_image.path).string();
        gt_by_input[(dir / e.input_image.path).string()] = gt;
    }
    ScriptedEdit echo([&gt_by_input](const ImageRef& image, const std::string&) {
        return gt_by_input.at(image.path);
    });

    RunConfig cfg = mock_config(1);
    EmbedderPair embedders = make_embedders(cfg, nullptr);
    MetricReport report = evaluate(entries, dir, echo, embedders, InstructionKind::Direct, 64);
    EXPECT(report.missing.empty(), "gt-as-pred run excluded rows");
    EXPECT(report.rows.size() == entries.size(), "gt-as-pred run lost rows");
    EXPECT(report.aggregate.has_value(), "gt-as-pred run has no aggregate");
    EXPECT(report.aggregate->l1 == 0.0, "aggregate L1 is not exactly zero");
    EXPECT(report.aggregate->l2 == 0.0, "aggregate L2 is not exactly zero");
    for (const MetricRow& row : report.rows) {
        EXPECT(row.l1 == 0.0 && row.l2 == 0.0, row.id + ": L1/L2 not exactly zero");
        EXPECT(std::fabs(row.clip_i - 1.0) <= kUnityTol, row.id + ": CLIP-I not 1 within 1e-12");
        EXPECT(std::fabs(row.dino - 1.0) <= kUnityTol, row.id + ": DINO not 1 within 1e-12");
    }

    L1L2 constant = l1_l2(PixelGrid::filled(8, 8, 0.25f), PixelGrid::filled(8, 8, 0.75f));
    EXPECT(constant.l1 == 0.5, "constant-grid L1 is not exactly 0.5");
    EXPECT(constant.l2 == 0.25, "constant-grid L2 is not exactly 0.25");

    double cosine = embed_similarity({1.0, 2.0, 3.0}, {4.0, 5.0, 6.0});
    EXPECT(std::fabs(cosine - kCosineOracle) <= kCosineTol,
           "cosine fixture " + std::to_string(cosine) + " is off the oracle value");
    return {};
}

// ---------------------------------------------------------------------------
// 7. Benchmark construction
// ---------------------------------------------------------------------------

std::string instantiate(std::string text, const std::string& selected,
                        const std::string& target) {
    for (const auto& [token, value] :
         {std::pair<std::string, std::string>{"{selected}", selected}, {"{target}", target}}) {
        size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string check_benchmark_construction() {
    const std::vector<std::string> templates = default_templates();
    EXPECT(std::find(templates.begin(), templates.end(), "Turn {selected} to {target}") !=
               templates.end(),
           "the shipped templates do not include \"Turn {selected} to {target}\"");

    const fs::path dir = scratch_dir("acceptance-benchmark");
    SingleCorpus corpus = write_single_corpus(dir / "corpus", 100);
    RunConfig cfg = mock_config(11);
    cfg.set("mock_fixtures", corpus.fixtures.string());

    BenchmarkBuild build = build_benchmark(cfg, corpus.manifest, dir / "bench", templates, 100);
    EXPECT(build.entries.size() + build.skipped.size() == 100,
           "entries + skipped is not the corpus size");
    EXPECT(build.entries.size() >= 50,
           "only " + std::to_string(build.entries.size()) + " of 100 sources became entries");
    for (const BenchmarkEntry& e : build.entries) {
        EXPECT(e.direct_instruction.find(e.selected_category) != std::string::npos,
               e.id + ": direct instruction lacks the selected category");
        EXPECT(e.direct_instruction.find(e.target_category) != std::string::npos,
               e.id + ": direct instruction lacks the target category");
        bool matches_template = false;
        for (const std::string& t : templates) {
            if (instantiate(t, e.selected_category, e.target_category) == e.direct_instruction) {
                matches_template = true;
                break;
            }
        }
        EXPECT(matches_template, e.id + ": direct instruction matches no instantiated template");
    }
    return {};
}

// ---------------------------------------------------------------------------
// 8. Reference-table rendering
// ---------------------------------------------------------------------------

std::string check_reference_tables() {
    MetricReport direct;
    direct.kind = InstructionKind::Direct;
    direct.rows = {{"a", 0, 0, 0, 0, 0}, {"b", 0, 0, 0, 0, 0}};
    direct.aggregate = MetricAggregate{0.1, 0.02, 0.9, 0.8, 0.25};
    direct.missing = {{"c", "editor offline"}};
    MetricReport reasoning;
    reasoning.kind = InstructionKind::Reasoning;

    const std::string metric_golden =
        "Quantitative results (local run)\n"
        "  kind          n      L1      L2  CLIP-I    DINO  CLIP-T\n"
        "  direct        2  0.1000  0.0200  0.9000  0.8000  0.2500\n"
        "  reasoning     0     n/a     n/a     n/a     n/a     n/a\n"
        "  excluded rows: direct 1, reasoning 0\n"
        "\n"
        "Reference (reported results)\n"
        "  method             kind           L1      L2  CLIP-I    DINO  CLIP-T\n"
        "  ReasonPix2Pix      direct     0.0646  0.0203  0.9246  0.8920  0.2553\n"
        "  ReasonPix2Pix      reasoning  0.1347  0.0476  0.7824  0.7216  0.2350\n";
    EXPECT(render_metric_report(&direct, &reasoning) == metric_golden,
           "metric report does not match the golden rendering");

    UserStudyTable table;
    table.methods = default_user_study_methods();
    table.counts = {{"InstructPix2Pix", 3},
                    {"MagicBrush", 1},
                    {"InstructDiffusion", 2},
                    {"ReasonPix2Pix", 4}};
    table.total = 10;
    const std::string study_golden =
        "User study (local votes)\n"
        "  method              votes\n"
        "  InstructPix2Pix         3\n"
        "  MagicBrush              1\n"
        "  InstructDiffusion       2\n"
        "  ReasonPix2Pix           4\n"
        "  total                  10\n"
        "\n"
        "Reference (reported votes)\n"
        "  method              direct  reasoning\n"
        "  InstructPix2Pix        16         13\n"
        "  MagicBrush             21         15\n"
        "  InstructDiffusion      28         18\n"
        "  ReasonPix2Pix          35         54\n";
    EXPECT(render_user_study(table) == study_golden,
           "user-study report does not match the golden rendering");
    return {};
}

// ---------------------------------------------------------------------------
// 9. Stats echo
// ---------------------------------------------------------------------------

std::string check_stats_echo() {
    const fs::path dir = scratch_dir("acceptance-stats");
    const fs::path sources = write_pair_corpus(dir / "corpus", 6);
    RunConfig cfg = mock_config(3);
    orchestrate(cfg, RunMode::Part1, sources, dir / "out");
    const std::string text = stats_text(dir / "out" / "manifest.json");
    EXPECT(text.find("  reference row: 8,013 / 4,141 / 28,058\n") != std::string::npos,
           "stats output lacks the exact reference part counts");
    return {};
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::string (*run)();
        double budget_seconds;  // 0 = unbounded
    };
    const std::vector<Criterion> criteria = {
        {1, "divergence oracle", check_divergence_oracle, kOracleBudgetSeconds},
        {2, "filter laws", check_filter_laws, kOracleBudgetSeconds},
        {3, "end-to-end determinism", check_determinism, kDeterminismBudgetSeconds},
        {4, "region-replacement locality", check_locality, 0.0},
        {5, "prompt/protocol contracts", check_prompt_contracts, 0.0},
        {6, "metric identities", check_metric_identities, 0.0},
        {7, "benchmark construction", check_benchmark_construction, 0.0},
        {8, "reference-table rendering", check_reference_tables, 0.0},
        {9, "stats echo", check_stats_echo, 0.0},
    };

    bool all_passed = true;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        try {
            detail = c.run();
        } catch (const std::exception& e) {
            detail = std::string("unexpected error: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (detail.empty() && c.budget_seconds > 0.0 && elapsed > c.budget_seconds) {
            char buffer[96];
            std::snprintf(buffer, sizeof(buffer), "runtime %.2fs exceeds the %.0fs budget",
                          elapsed, c.budget_seconds);
            detail = buffer;
        }
        if (detail.empty()) {
            std::printf("PASS — criterion %d: %s (%.2fs)\n", c.number, c.name, elapsed);
        } else {
            std::printf("FAIL — criterion %d: %s: %s (%.2fs)\n", c.number, c.name,
                        detail.c_str(), elapsed);
            all_passed = false;
        }
    }
    return all_passed ? 0 : 1;
}
