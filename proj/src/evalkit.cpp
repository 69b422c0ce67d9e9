// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "pipeline.hpp"

namespace rf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr const char* kBenchmarkFormat = "reasonforge-benchmark/1";

// Reference rows of the reported full-scale results, rendered alongside
// every local report.
struct ReferenceRow {
    const char* method;
    const char* kind;
    double l1, l2, clip_i, dino, clip_t;
};
constexpr ReferenceRow kReferenceRows[] = {
    {"ReasonPix2Pix", "direct", 0.0646, 0.0203, 0.9246, 0.8920, 0.2553},
    {"ReasonPix2Pix", "reasoning", 0.1347, 0.0476, 0.7824, 0.7216, 0.2350},
};

struct UserStudyReference {
    const char* method;
    int direct;
    int reasoning;
};
constexpr UserStudyReference kUserStudyReference[] = {
    {"InstructPix2Pix", 16, 13},
    {"MagicBrush", 21, 15},
    {"InstructDiffusion", 28, 18},
    {"ReasonPix2Pix", 35, 54},
};

std::string render_template(const std::string& tpl, const std::string& selected,
                            const std::string& target) {
    std::string out = tpl;
    for (const auto& [token, value] :
         {std::pair<std::string, std::string>{"{selected}", selected}, {"{target}", target}}) {
        size_t pos = 0;
        while ((pos = out.find(token, pos)) != std::string::npos) {
            out.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return out;
}

// Target caption: first case-insensitive occurrence of the selected
// category spliced out for the target; when the caption never names the
// category, the replacement is appended instead.
std::string derive_target_caption(const std::string& caption, const std::string& selected,
                                  const std::string& target) {
    const std::string hay = to_lower(caption);
    const std::string needle = to_lower(selected);
    size_t pos = needle.empty() ? std::string::npos : hay.find(needle);
    if (pos == std::string::npos) {
        return caption + ", now with a " + target;
    }
    return caption.substr(0, pos) + target + caption.substr(pos + needle.size());
}

bool contains_ci(const std::string& hay, const std::string& needle) {
    return to_lower(hay).find(to_lower(needle)) != std::string::npos;
}

ordered_json entry_to_json(const BenchmarkEntry& e) {
    auto ref_json = [](const ImageRef& r) {
        ordered_json j;
        j["path"] = r.path;
        j["width"] = r.width;
        j["height"] = r.height;
        j["content_hash"] = r.content_hash;
        return j;
    };
    ordered_json j;
    j["id"] = e.id;
    j["input_image"] = ref_json(e.input_image);
    j["gt_edited_image"] = ref_json(e.gt_edited_image);
    j["input_caption"] = e.input_caption;
    j["target_caption"] = e.target_caption;
    j["direct_instruction"] = e.direct_instruction;
    j["reasoning_instruction"] = e.reasoning_instruction;
    j["selected_category"] = e.selected_category;
    j["target_category"] = e.target_category;
    return j;
}

BenchmarkEntry entry_from_json(const nlohmann::json& j) {
    auto ref_from = [](const nlohmann::json& r) {
        ImageRef ref;
        ref.path = r.at("path").get<std::string>();
        ref.width = r.at("width").get<int>();
        ref.height = r.at("height").get<int>();
        ref.content_hash = r.value("content_hash", std::string());
        return ref;
    };
    BenchmarkEntry e;
    e.id = j.at("id").get<std::string>();
    e.input_image = ref_from(j.at("input_image"));
    e.gt_edited_image = ref_from(j.at("gt_edited_image"));
    e.input_caption = j.at("input_caption").get<std::string>();
    e.target_caption = j.at("target_caption").get<std::string>();
    e.direct_instruction = j.at("direct_instruction").get<std::string>();
    e.reasoning_instruction = j.at("reasoning_instruction").get<std::string>();
    e.selected_category = j.at("selected_category").get<std::string>();
    e.target_category = j.at("target_category").get<std::string>();
    return e;
}

}  // namespace

std::string BenchmarkEntry::validate() const {
    if (trim(id).empty()) return "benchmark entry has an empty id";
    if (input_image.path.empty()) return "entry " + id + " has no input image";
    if (gt_edited_image.path.empty()) return "entry " + id + " has no ground-truth image";
    if (trim(target_caption).empty()) return "entry " + id + " has an empty target caption";
    if (trim(direct_instruction).empty()) return "entry " + id + " has an empty direct instruction";
    if (trim(reasoning_instruction).empty()) {
        return "entry " + id + " has an empty reasoning instruction";
    }
    if (trim(selected_category).empty() || trim(target_category).empty()) {
        return "entry " + id + " is missing a category";
    }
    if (!contains_ci(direct_instruction, selected_category) ||
        !contains_ci(direct_instruction, target_category)) {
        return "entry " + id + " direct instruction does not name both categories";
    }
    return {};
}

std::vector<std::string> default_templates() {
    return {
        "Turn {selected} to {target}",
        "Replace the {selected} with a {target}",
        "Change the {selected} into a {target}",
        "Make the {selected} a {target}",
    };
}

BenchmarkBuild build_benchmark(const RunConfig& config, const fs::path& sources_path,
                               const fs::path& out_dir, const std::vector<std::string>& templates,
                               int64_t n_images, const BackendSuite* suite_override) {
    if (auto err = config.validate(); !err.empty()) throw_error(ErrorKind::Config, err);
    if (templates.empty()) throw_error(ErrorKind::Config, "benchmark needs at least one template");
    for (const auto& tpl : templates) {
        if (tpl.find("{selected}") == std::string::npos ||
            tpl.find("{target}") == std::string::npos) {
            throw_error(ErrorKind::Config,
                        "template must contain {selected} and {target}: \"" + tpl + "\"");
        }
    }
    if (n_images < 0) throw_error(ErrorKind::Config, "n_images must be >= 0");

    SourceManifest corpus = read_source_manifest(sources_path);
    fs::create_directories(out_dir / "images");

    std::shared_ptr<ResponseCache> cache;
    if (!config.mock() && !config.get("cache_dir").empty()) {
        cache = std::make_shared<ResponseCache>(config.get("cache_dir"));
    }
    BackendSuite suite =
        suite_override ? *suite_override : make_suite(config, out_dir / "images", cache);
    PromptLibrary prompts = PromptLibrary::from_config(config);

    PipelineContext ctx;
    ctx.config = &config;
    ctx.suite = &suite;
    ctx.prompts = &prompts;
    ctx.source_dataset = corpus.source_dataset;
    ctx.source_root = corpus.root;
    ctx.out_dir = out_dir;

    BenchmarkBuild build;
    const size_t limit = std::min<size_t>(corpus.sources.size(), static_cast<size_t>(n_images));
    for (size_t i = 0; i < limit; ++i) {
        const SourcePair& source = corpus.sources[i];
        try {
            StageOutput stage = run_part23(ctx, source);
            const EditSample& s = stage.sample;
            const ReplacementRecord& rep = *s.replacement;
            BenchmarkEntry e;
            e.id = s.id;
            e.input_image = s.input_image;
            e.gt_edited_image = s.edited_image;
            e.input_caption = *s.input_caption;
            e.target_caption = derive_target_caption(*s.input_caption, rep.selected_category,
                                                     rep.target_category);
            e.direct_instruction = render_template(templates[i % templates.size()],
                                                   rep.selected_category, rep.target_category);
            e.reasoning_instruction = s.reasoning_instruction;
            e.selected_category = rep.selected_category;
            e.target_category = rep.target_category;
            if (auto err = e.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
            build.entries.push_back(std::move(e));
        } catch (const Error& err) {
            build.skipped.emplace_back(source.id, err.what());
        } catch (const std::exception& err) {
            build.skipped.emplace_back(source.id, std::string("unexpected: ") + err.what());
        }
    }
    return build;
}

void write_benchmark(const std::vector<BenchmarkEntry>& entries, const fs::path& path) {
    std::string out;
    ordered_json header;
    header["format"] = kBenchmarkFormat;
    out += header.dump();
    out += '\n';
    for (const auto& e : entries) {
        if (auto err = e.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
        out += entry_to_json(e).dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

std::vector<BenchmarkEntry> read_benchmark(const fs::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw_error(ErrorKind::Parse, "benchmark file is empty: " + path.string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(lines[0]);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Parse, "line 1 of " + path.string() + ": " + e.what());
    }
    if (header.value("format", "") != kBenchmarkFormat) {
        throw_error(ErrorKind::Parse, path.string() + ": not a benchmark file");
    }
    std::vector<BenchmarkEntry> entries;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        try {
            BenchmarkEntry e = entry_from_json(nlohmann::json::parse(lines[i]));
            if (auto err = e.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
            entries.push_back(std::move(e));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              path.string() + ": " + e.what());
        }
    }
    return entries;
}

L1L2 l1_l2(const PixelGrid& pred, const PixelGrid& gt) {
    if (!pred.same_shape(gt)) {
        throw_error(ErrorKind::Invalid, "metric grids differ in shape");
    }
    double sum_abs = 0.0;
    for (size_t i = 0; i < pred.values.size(); ++i) {
        sum_abs += std::abs(static_cast<double>(pred.values[i]) - gt.values[i]);
    }
    L1L2 out;
    out.l1 = pred.values.empty() ? 0.0 : sum_abs / static_cast<double>(pred.values.size());
    out.l2 = divergence(pred, gt);
    return out;
}

double embed_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw_error(ErrorKind::Invalid, "embedding dimensions differ (" +
                                            std::to_string(a.size()) + " vs " +
                                            std::to_string(b.size()) + ")");
    }
    if (a.empty()) throw_error(ErrorKind::Invalid, "empty embedding");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw_error(ErrorKind::Invalid, "zero vector has no direction");
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::string instruction_kind_name(InstructionKind k) {
    return k == InstructionKind::Direct ? "direct" : "reasoning";
}

MetricReport evaluate(const std::vector<BenchmarkEntry>& benchmark, const fs::path& benchmark_root,
                      ConditionedEditBackend& editor, const EmbedderPair& embedders,
                      InstructionKind kind, int canonical_size) {
    if (!embedders.clip_like || !embedders.dino_like) {
        throw_error(ErrorKind::Config, "evaluate needs both embedder slots");
    }
    MetricReport report;
    report.kind = kind;
    for (const auto& entry : benchmark) {
        try {
            ImageRef input = entry.input_image;
            input.path = (benchmark_root / entry.input_image.path).string();
            ImageRef gt = entry.gt_edited_image;
            gt.path = (benchmark_root / entry.gt_edited_image.path).string();
            const std::string& instruction = kind == InstructionKind::Direct
                                                 ? entry.direct_instruction
                                                 : entry.reasoning_instruction;
            ImageRef pred = editor.conditioned_edit(input, instruction);

            MetricRow row;
            row.id = entry.id;
            L1L2 d = l1_l2(load_canonical(pred.path, canonical_size),
                           load_canonical(gt.path, canonical_size));
            row.l1 = d.l1;
            row.l2 = d.l2;
            auto pred_clip = embedders.clip_like->embed_image(pred);
            auto gt_clip = embedders.clip_like->embed_image(gt);
            row.clip_i = embed_similarity(pred_clip, gt_clip);
            row.dino = embed_similarity(embedders.dino_like->embed_image(pred),
                                        embedders.dino_like->embed_image(gt));
            row.clip_t = embed_similarity(embedders.clip_like->embed_text(entry.target_caption),
                                          pred_clip);
            report.rows.push_back(row);
        } catch (const Error& e) {
            report.missing.emplace_back(entry.id, e.what());
        } catch (const std::exception& e) {
            report.missing.emplace_back(entry.id, std::string("unexpected: ") + e.what());
        }
    }
    std::sort(report.rows.begin(), report.rows.end(),
              [](const MetricRow& a, const MetricRow& b) { return a.id < b.id; });
    std::sort(report.missing.begin(), report.missing.end());
    if (!report.rows.empty()) {
        MetricAggregate agg;
        for (const auto& r : report.rows) {
            agg.l1 += r.l1;
            agg.l2 += r.l2;
            agg.clip_i += r.clip_i;
            agg.dino += r.dino;
            agg.clip_t += r.clip_t;
        }
        const double n = static_cast<double>(report.rows.size());
        agg.l1 /= n;
        agg.l2 /= n;
        agg.clip_i /= n;
        agg.dino /= n;
        agg.clip_t /= n;
        report.aggregate = agg;
    }
    return report;
}

namespace {

void append_local_row(std::string& out, const MetricReport& r) {
    char line[160];
    if (r.aggregate) {
        std::snprintf(line, sizeof(line), "  %-9s %5zu  %6.4f  %6.4f  %6.4f  %6.4f  %6.4f\n",
                      instruction_kind_name(r.kind).c_str(), r.rows.size(), r.aggregate->l1,
                      r.aggregate->l2, r.aggregate->clip_i, r.aggregate->dino,
                      r.aggregate->clip_t);
    } else {
        std::snprintf(line, sizeof(line), "  %-9s %5zu  %6s  %6s  %6s  %6s  %6s\n",
                      instruction_kind_name(r.kind).c_str(), r.rows.size(), "n/a", "n/a", "n/a",
                      "n/a", "n/a");
    }
    out += line;
}

}  // namespace

std::string render_metric_report(const MetricReport* direct, const MetricReport* reasoning) {
    std::string out;
    out += "Quantitative results (local run)\n";
    out += "  kind          n      L1      L2  CLIP-I    DINO  CLIP-T\n";
    if (direct) append_local_row(out, *direct);
    if (reasoning) append_local_row(out, *reasoning);
    char line[160];
    size_t d_missing = direct ? direct->missing.size() : 0;
    size_t r_missing = reasoning ? reasoning->missing.size() : 0;
    std::snprintf(line, sizeof(line), "  excluded rows: direct %zu, reasoning %zu\n", d_missing,
                  r_missing);
    out += line;
    out += "\nReference (reported results)\n";
    out += "  method             kind           L1      L2  CLIP-I    DINO  CLIP-T\n";
    for (const auto& row : kReferenceRows) {
        std::snprintf(line, sizeof(line), "  %-18s %-9s  %6.4f  %6.4f  %6.4f  %6.4f  %6.4f\n",
                      row.method, row.kind, row.l1, row.l2, row.clip_i, row.dino, row.clip_t);
        out += line;
    }
    return out;
}

std::string metric_report_json(const MetricReport* direct, const MetricReport* reasoning) {
    ordered_json j;
    j["format"] = "reasonforge-metric-report/1";
    auto report_json = [](const MetricReport& r) {
        ordered_json jr;
        jr["n"] = static_cast<int64_t>(r.rows.size());
        if (r.aggregate) {
            ordered_json agg;
            agg["l1"] = r.aggregate->l1;
            agg["l2"] = r.aggregate->l2;
            agg["clip_i"] = r.aggregate->clip_i;
            agg["dino"] = r.aggregate->dino;
            agg["clip_t"] = r.aggregate->clip_t;
            jr["aggregate"] = agg;
        } else {
            jr["aggregate"] = nullptr;
        }
        ordered_json rows = ordered_json::array();
        for (const auto& row : r.rows) {
            ordered_json jrow;
            jrow["id"] = row.id;
            jrow["l1"] = row.l1;
            jrow["l2"] = row.l2;
            jrow["clip_i"] = row.clip_i;
            jrow["dino"] = row.dino;
            jrow["clip_t"] = row.clip_t;
            rows.push_back(jrow);
        }
        jr["rows"] = rows;
        ordered_json missing = ordered_json::array();
        for (const auto& [id, reason] : r.missing) {
            ordered_json jm;
            jm["id"] = id;
            jm["reason"] = reason;
            missing.push_back(jm);
        }
        jr["missing"] = missing;
        return jr;
    };
    j["local"] = ordered_json::object();
    if (direct) j["local"]["direct"] = report_json(*direct);
    if (reasoning) j["local"]["reasoning"] = report_json(*reasoning);
    ordered_json refs = ordered_json::array();
    for (const auto& row : kReferenceRows) {
        ordered_json jr;
        jr["method"] = row.method;
        jr["kind"] = row.kind;
        jr["l1"] = row.l1;
        jr["l2"] = row.l2;
        jr["clip_i"] = row.clip_i;
        jr["dino"] = row.dino;
        jr["clip_t"] = row.clip_t;
        refs.push_back(jr);
    }
    j["reference"] = refs;
    return j.dump(2) + "\n";
}

std::vector<std::string> default_user_study_methods() {
    return {"InstructPix2Pix", "MagicBrush", "InstructDiffusion", "ReasonPix2Pix"};
}

UserStudyTable tabulate_user_study(const fs::path& votes_csv,
                                   const std::vector<std::string>& methods) {
    if (methods.empty()) throw_error(ErrorKind::Config, "user study needs a method list");
    UserStudyTable table;
    table.methods = methods;
    for (const auto& m : methods) table.counts[m] = 0;

    auto lines = read_lines(votes_csv);
    if (lines.empty()) throw_error(ErrorKind::Parse, "votes file is empty: " + votes_csv.string());
    if (trim(lines[0]) != "rater_id,sample_id,method") {
        throw_error(ErrorKind::Parse, votes_csv.string() +
                                          ": expected header 'rater_id,sample_id,method'");
    }
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto fields = split(lines[i], ',');
        if (fields.size() != 3) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              votes_csv.string() + ": expected 3 fields");
        }
        const std::string method = trim(fields[2]);
        auto it = table.counts.find(method);
        if (it == table.counts.end()) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              votes_csv.string() + ": unknown method '" + method +
                                              "'");
        }
        ++it->second;
        ++table.total;
    }
    return table;
}

std::string render_user_study(const UserStudyTable& table) {
    std::string out;
    out += "User study (local votes)\n";
    out += "  method              votes\n";
    char line[128];
    for (const auto& m : table.methods) {
        std::snprintf(line, sizeof(line), "  %-18s %6lld\n", m.c_str(),
                      static_cast<long long>(table.counts.at(m)));
        out += line;
    }
    std::snprintf(line, sizeof(line), "  %-18s %6lld\n", "total", static_cast<long long>(table.total));
    out += line;
    out += "\nReference (reported votes)\n";
    out += "  method              direct  reasoning\n";
    for (const auto& row : kUserStudyReference) {
        std::snprintf(line, sizeof(line), "  %-18s %6d %10d\n", row.method, row.direct,
                      row.reasoning);
        out += line;
    }
    return out;
}

}  // namespace rf
