// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_map>

#include "imaging.hpp"
#include "json.hpp"

namespace rf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Source manifests
// ---------------------------------------------------------------------------

namespace {

constexpr const char* kSourcesFormat = "reasonforge-sources/1";
constexpr const char* kJournalFormat = "reasonforge-journal/1";
constexpr const char* kManifestFormat = "reasonforge-manifest/1";

ordered_json image_ref_json(const ImageRef& ref) {
    ordered_json j;
    j["path"] = ref.path;
    j["width"] = ref.width;
    j["height"] = ref.height;
    j["content_hash"] = ref.content_hash;
    return j;
}

ImageRef image_ref_from(const nlohmann::json& j) {
    ImageRef ref;
    ref.path = j.at("path").get<std::string>();
    ref.width = j.at("width").get<int>();
    ref.height = j.at("height").get<int>();
    ref.content_hash = j.value("content_hash", std::string());
    return ref;
}

void put_optional(ordered_json& j, const char* key, const std::optional<std::string>& v) {
    if (v.has_value()) {
        j[key] = *v;
    } else {
        j[key] = nullptr;
    }
}

std::optional<std::string> get_optional(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

}  // namespace

std::string SourcePair::validate_for_part1() const {
    if (trim(id).empty()) return "source has an empty id";
    if (input_image.path.empty()) return "source " + id + " has no input image";
    if (!edited_image.has_value() || edited_image->path.empty()) {
        return "source " + id + " has no edited image (required for the paired stage)";
    }
    if (!input_caption || trim(*input_caption).empty()) {
        return "source " + id + " has no input caption";
    }
    if (!edited_caption || trim(*edited_caption).empty()) {
        return "source " + id + " has no edited caption";
    }
    if (!original_instruction || trim(*original_instruction).empty()) {
        return "source " + id + " has no original instruction";
    }
    return {};
}

std::string SourcePair::validate_minimal() const {
    if (trim(id).empty()) return "source has an empty id";
    if (input_image.path.empty()) return "source " + id + " has no input image";
    return {};
}

const SourcePair* SourceManifest::find(const std::string& id) const {
    for (const auto& s : sources) {
        if (s.id == id) return &s;
    }
    return nullptr;
}

SourceManifest read_source_manifest(const fs::path& path) {
    auto lines = read_lines(path);
    if (lines.empty()) throw_error(ErrorKind::Parse, "source manifest is empty: " + path.string());

    SourceManifest manifest;
    manifest.root = path.has_parent_path() ? path.parent_path() : fs::path(".");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(lines[0]);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Parse,
                    "line 1 of " + path.string() + ": bad header: " + e.what());
    }
    if (header.value("format", "") != kSourcesFormat) {
        throw_error(ErrorKind::Parse, path.string() + ": not a source manifest (format '" +
                                          header.value("format", "") + "')");
    }
    auto ds = source_dataset_from_name(header.value("source_dataset", ""));
    if (!ds) {
        throw_error(ErrorKind::Parse,
                    path.string() + ": unknown source_dataset in header");
    }
    manifest.source_dataset = *ds;

    std::unordered_map<std::string, size_t> seen;
    for (size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              path.string() + ": " + e.what());
        }
        try {
            SourcePair s;
            s.id = j.at("id").get<std::string>();
            s.input_image = image_ref_from(j.at("input_image"));
            if (j.contains("edited_image") && !j.at("edited_image").is_null()) {
                s.edited_image = image_ref_from(j.at("edited_image"));
            }
            s.input_caption = get_optional(j, "input_caption");
            s.edited_caption = get_optional(j, "edited_caption");
            s.original_instruction = get_optional(j, "original_instruction");
            if (auto err = s.validate_minimal(); !err.empty()) {
                throw_error(ErrorKind::Invalid, err);
            }
            if (!seen.emplace(s.id, i).second) {
                throw_error(ErrorKind::Invalid, "duplicate source id '" + s.id + "'");
            }
            manifest.sources.push_back(std::move(s));
        } catch (const Error&) {
            throw;
        } catch (const nlohmann::json::exception& e) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              path.string() + ": " + e.what());
        }
    }
    return manifest;
}

void write_source_manifest(const SourceManifest& manifest, const fs::path& path) {
    // Readers resolve image paths against the manifest's own directory, so
    // rebase them from manifest.root before writing.
    const fs::path base =
        fs::absolute(path.has_parent_path() ? path.parent_path() : fs::path("."))
            .lexically_normal();
    auto rebase = [&](ImageRef ref) {
        fs::path p = ref.path;
        if (p.is_relative()) p = manifest.root / p;
        p = fs::absolute(p).lexically_normal();
        const fs::path rel = p.lexically_relative(base);
        ref.path = (rel.empty() ? p : rel).generic_string();
        return ref;
    };
    std::string out;
    ordered_json header;
    header["format"] = kSourcesFormat;
    header["source_dataset"] = source_dataset_name(manifest.source_dataset);
    out += header.dump();
    out += '\n';
    for (const auto& s : manifest.sources) {
        ordered_json j;
        j["id"] = s.id;
        j["input_image"] = image_ref_json(rebase(s.input_image));
        j["edited_image"] = s.edited_image ? image_ref_json(rebase(*s.edited_image)) : ordered_json(nullptr);
        put_optional(j, "input_caption", s.input_caption);
        put_optional(j, "edited_caption", s.edited_caption);
        put_optional(j, "original_instruction", s.original_instruction);
        out += j.dump();
        out += '\n';
    }
    write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Converters
// ---------------------------------------------------------------------------

namespace {

std::string zero_pad(size_t n, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, n);
    return buf;
}

}  // namespace

SourceManifest convert_ip2p_corpus(const fs::path& dir) {
    const fs::path meta = dir / "metadata.jsonl";
    if (!fs::exists(meta)) {
        throw_error(ErrorKind::Io, "corpus has no metadata.jsonl: " + dir.string());
    }
    SourceManifest manifest;
    manifest.source_dataset = SourceDataset::InstructPix2Pix;
    manifest.root = dir;
    auto lines = read_lines(meta);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::exception& e) {
            throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                              meta.string() + ": " + e.what());
        }
        SourcePair s;
        s.id = j.value("id", "ip2p-" + zero_pad(i + 1, 6));
        const std::string in_rel = j.at("input_image").get<std::string>();
        const std::string ed_rel = j.at("edited_image").get<std::string>();
        s.input_image = make_image_ref(dir / in_rel, in_rel);
        s.edited_image = make_image_ref(dir / ed_rel, ed_rel);
        s.input_caption = j.at("input_caption").get<std::string>();
        s.edited_caption = j.at("edited_caption").get<std::string>();
        s.original_instruction = j.at("instruction").get<std::string>();
        if (auto err = s.validate_for_part1(); !err.empty()) {
            throw_error(ErrorKind::Invalid, meta.string() + ": " + err);
        }
        manifest.sources.push_back(std::move(s));
    }
    return manifest;
}

SourceManifest convert_v3det_corpus(const fs::path& dir) {
    SourceManifest manifest;
    manifest.source_dataset = SourceDataset::V3Det;
    manifest.root = dir;
    const fs::path meta = dir / "metadata.jsonl";
    if (fs::exists(meta)) {
        auto lines = read_lines(meta);
        for (size_t i = 0; i < lines.size(); ++i) {
            if (trim(lines[i]).empty()) continue;
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(lines[i]);
            } catch (const nlohmann::json::exception& e) {
                throw_error(ErrorKind::Parse, "line " + std::to_string(i + 1) + " of " +
                                                  meta.string() + ": " + e.what());
            }
            SourcePair s;
            s.id = j.value("id", "v3det-" + zero_pad(i + 1, 6));
            const std::string rel = j.at("image").get<std::string>();
            s.input_image = make_image_ref(dir / rel, rel);
            s.input_caption = get_optional(j, "caption");
            manifest.sources.push_back(std::move(s));
        }
        return manifest;
    }
    // No metadata: every image in the directory, sorted by name.
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = to_lower(entry.path().extension().string());
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") {
            names.push_back(entry.path().filename().string());
        }
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) {
        throw_error(ErrorKind::Io, "no metadata.jsonl and no images in " + dir.string());
    }
    for (size_t i = 0; i < names.size(); ++i) {
        SourcePair s;
        s.id = "v3det-" + zero_pad(i + 1, 6);
        s.input_image = make_image_ref(dir / names[i], names[i]);
        manifest.sources.push_back(std::move(s));
    }
    return manifest;
}

// ---------------------------------------------------------------------------
// Statuses + manifest
// ---------------------------------------------------------------------------

std::string sample_status_name(SampleStatus s) {
    switch (s) {
        case SampleStatus::Pending: return "Pending";
        case SampleStatus::Done: return "Done";
        case SampleStatus::Failed: return "Failed";
        case SampleStatus::FilteredOut: return "FilteredOut";
    }
    return "Pending";
}

std::optional<SampleStatus> sample_status_from_name(std::string_view name) {
    if (name == "Pending") return SampleStatus::Pending;
    if (name == "Done") return SampleStatus::Done;
    if (name == "Failed") return SampleStatus::Failed;
    if (name == "FilteredOut") return SampleStatus::FilteredOut;
    return std::nullopt;
}

std::map<Part, int64_t> PipelineManifest::part_counts() const {
    std::map<Part, int64_t> counts;
    for (const auto& [id, e] : entries) {
        if (e.status == SampleStatus::Done && e.part) ++counts[*e.part];
    }
    return counts;
}

// Failures keyed by the pipeline's tagged reason (text before the first
// ':') so the histogram groups "no candidates", "grounding found
// nothing", "degenerate box", and untagged backend errors meaningfully.
std::map<std::string, int64_t> PipelineManifest::failure_histogram() const {
    std::map<std::string, int64_t> hist;
    for (const auto& [id, e] : entries) {
        if (e.status != SampleStatus::Failed) continue;
        std::string reason = e.error;
        size_t colon = reason.find(':');
        if (colon != std::string::npos && colon > 0 && colon <= 40) {
            reason = reason.substr(0, colon);
        } else {
            reason = "error";
        }
        ++hist[reason];
    }
    return hist;
}

int64_t PipelineManifest::count(SampleStatus s) const {
    int64_t n = 0;
    for (const auto& [id, e] : entries) {
        if (e.status == s) ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Stage machines
// ---------------------------------------------------------------------------

BoundingBox pad_box(const BoundingBox& box, double padding, int image_width, int image_height) {
    int dx = static_cast<int>(std::lround(padding * box.width()));
    int dy = static_cast<int>(std::lround(padding * box.height()));
    BoundingBox out;
    out.x_min = std::max(0, box.x_min - dx);
    out.y_min = std::max(0, box.y_min - dy);
    out.x_max = std::min(image_width, box.x_max + dx);
    out.y_max = std::min(image_height, box.y_max + dy);
    return out;
}

const Detection& pick_detection(const std::vector<Detection>& detections) {
    if (detections.empty()) {
        throw_error(ErrorKind::Invalid, "pick_detection called with no detections");
    }
    const Detection* best = &detections[0];
    for (const auto& d : detections) {
        if (d.score != best->score) {
            if (d.score > best->score) best = &d;
            continue;
        }
        if (d.box.area() != best->box.area()) {
            if (d.box.area() > best->box.area()) best = &d;
            continue;
        }
        if (d.box.y_min != best->box.y_min) {
            if (d.box.y_min < best->box.y_min) best = &d;
            continue;
        }
        if (d.box.x_min < best->box.x_min) best = &d;
    }
    return *best;
}

namespace {

std::string hash16(const std::string& full) { return full.substr(0, 16); }

std::string request_fingerprint(const ChatRequest& req) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.6g", req.temperature);
    return sha256_hex("chat\x1f" + req.system_text + "\x1f" + req.user_text + "\x1f" + temp +
                      "\x1f" + std::to_string(req.seed));
}

struct LoadedImage {
    std::string bytes;  // original file bytes (copied verbatim)
    RgbImage pixels;
    std::string hash;
    std::string extension;
};

LoadedImage load_source_image(const PipelineContext& ctx, const ImageRef& ref) {
    const fs::path abs = ctx.source_root / ref.path;
    LoadedImage li;
    li.bytes = read_file(abs);
    li.pixels = decode_image_bytes(std::span<const uint8_t>(
        reinterpret_cast<const uint8_t*>(li.bytes.data()), li.bytes.size()));
    li.hash = content_hash(li.pixels);
    if (!ref.content_hash.empty() && ref.content_hash != li.hash) {
        throw_error(ErrorKind::Io, "image changed on disk: " + abs.string() +
                                       " (expected " + hash16(ref.content_hash) + ", got " +
                                       hash16(li.hash) + ")");
    }
    std::string ext = to_lower(abs.extension().string());
    li.extension = (ext == ".jpg" || ext == ".jpeg") ? ext : std::string(".png");
    return li;
}

// Copy original bytes into out_dir/images, content-addressed; returns the
// record-relative ImageRef.
ImageRef store_copy(const PipelineContext& ctx, const LoadedImage& li) {
    const std::string rel = "images/src_" + hash16(li.hash) + li.extension;
    const fs::path dst = ctx.out_dir / rel;
    if (!fs::exists(dst)) write_file_atomic(dst, li.bytes);
    ImageRef ref;
    ref.path = rel;
    ref.width = li.pixels.width;
    ref.height = li.pixels.height;
    ref.content_hash = li.hash;
    return ref;
}

ImageRef rebase_generated(const PipelineContext& ctx, const ImageRef& generated) {
    ImageRef ref = generated;
    ref.path = (fs::path("images") / fs::path(generated.path).filename()).string();
    return ref;
}

std::map<std::string, std::string> provenance_versions(const PipelineContext& ctx) {
    auto versions = ctx.suite->versions();
    versions["prompts"] = "templates/" + hash16(ctx.prompts->template_hash());
    return versions;
}

}  // namespace

StageOutput run_part1(const PipelineContext& ctx, const SourcePair& source) {
    if (auto err = source.validate_for_part1(); !err.empty()) {
        throw_error(ErrorKind::Invalid, err);
    }
    const RunConfig& cfg = *ctx.config;
    StageOutput out;
    const uint64_t sample_seed = derive_seed(cfg.seed(), "sample:" + source.id);
    const double temp_gen = cfg.get_double("temperature_gen", 0.7);
    const double temp_select = cfg.get_double("temperature_select", 0.0);

    GenPromptInput input{*source.input_caption, *source.edited_caption,
                         *source.original_instruction};
    const uint64_t gen_base = derive_seed(sample_seed, "gen");
    auto candidates = generate_candidates(*ctx.suite->llm, *ctx.prompts, input,
                                          cfg.n_candidates(), gen_base, temp_gen,
                                          cfg.retry_budget());
    const uint64_t select_seed = derive_seed(sample_seed, "select");
    SelectResult sel = select_best(*ctx.suite->llm, *ctx.prompts, input, candidates, temp_select,
                                   select_seed, &out.warnings);

    for (int i = 0; i < cfg.n_candidates(); ++i) {
        uint64_t seed = derive_seed(gen_base, "gen:" + std::to_string(i));
        out.cache_keys.push_back(
            request_fingerprint(build_gen_prompt(*ctx.prompts, input, temp_gen, seed)));
    }
    out.cache_keys.push_back(request_fingerprint(
        build_select_prompt(*ctx.prompts, input, candidates, temp_select, select_seed)));

    LoadedImage in_img = load_source_image(ctx, source.input_image);
    LoadedImage ed_img = load_source_image(ctx, *source.edited_image);

    EditSample& s = out.sample;
    s.id = source.id;
    s.part = Part::I;
    s.input_image = store_copy(ctx, in_img);
    s.edited_image = store_copy(ctx, ed_img);
    s.input_caption = source.input_caption;
    s.edited_caption = source.edited_caption;
    s.direct_instruction = source.original_instruction;
    s.reasoning_instruction = sel.instruction;
    s.provenance.source_dataset = ctx.source_dataset;
    s.provenance.source_id = source.id;
    s.provenance.generator_versions = provenance_versions(ctx);
    s.provenance.seed = static_cast<int64_t>(sample_seed);
    if (auto err = s.validate(); !err.empty()) {
        throw_error(ErrorKind::Invalid, "sample " + s.id + ": " + err);
    }
    return out;
}

StageOutput run_part23(const PipelineContext& ctx, const SourcePair& source) {
    if (auto err = source.validate_minimal(); !err.empty()) {
        throw_error(ErrorKind::Invalid, err);
    }
    const RunConfig& cfg = *ctx.config;
    StageOutput out;
    const uint64_t sample_seed = derive_seed(cfg.seed(), "sample:" + source.id);
    const double temp_gen = cfg.get_double("temperature_gen", 0.7);

    LoadedImage in_img = load_source_image(ctx, source.input_image);
    ImageRef work_ref;
    work_ref.path = (ctx.source_root / source.input_image.path).string();
    work_ref.width = in_img.pixels.width;
    work_ref.height = in_img.pixels.height;
    work_ref.content_hash = in_img.hash;

    // Caption: source-provided for Part II corpora, generated for Part III.
    Part part;
    std::string caption;
    if (source.input_caption && !trim(*source.input_caption).empty()) {
        part = Part::II;
        caption = *source.input_caption;
    } else {
        part = Part::III;
        CaptionResult cr = ctx.suite->captioner->caption(work_ref);
        caption = cr.caption;
        if (cr.used_fallback) {
            out.warnings.push_back("caption fallback used (image not in fixtures)");
        }
    }

    auto categories = ctx.suite->extractor->extract_entities(caption);
    if (categories.empty()) {
        throw_error(ErrorKind::Invalid,
                    "no candidates: caption \"" + caption + "\" yields no categories");
    }

    auto attempt = [&](const std::vector<std::string>& cats, const std::string& seed_tag)
        -> std::pair<ReplaceDecision, std::vector<Detection>> {
        ChatRequest req = build_replace_prompt(*ctx.prompts, caption, cats, temp_gen,
                                               derive_seed(sample_seed, seed_tag));
        out.cache_keys.push_back(request_fingerprint(req));
        std::string reply = ctx.suite->llm->chat(req);
        ReplaceDecision decision = parse_replace_reply(reply, cats);
        auto detections =
            ctx.suite->detector->ground(work_ref, decision.selected_category, &out.warnings);
        return {std::move(decision), std::move(detections)};
    };

    auto [decision, detections] = attempt(categories, "replace");
    std::vector<std::string> used_categories = categories;
    if (detections.empty()) {
        out.warnings.push_back("no detections for '" + decision.selected_category +
                               "'; retrying with it excluded");
        std::vector<std::string> rest;
        for (const auto& c : categories) {
            if (to_lower(c) != to_lower(decision.selected_category)) rest.push_back(c);
        }
        if (rest.empty()) {
            throw_error(ErrorKind::Invalid,
                        "grounding found nothing: no alternative candidates after '" +
                            decision.selected_category + "'");
        }
        auto [second, second_dets] = attempt(rest, "replace-retry");
        if (second_dets.empty()) {
            throw_error(ErrorKind::Invalid, "grounding found nothing: no boxes for '" +
                                                decision.selected_category + "' or '" +
                                                second.selected_category + "'");
        }
        decision = std::move(second);
        detections = std::move(second_dets);
        used_categories = std::move(rest);
    }

    const Detection& best = pick_detection(detections);
    const double padding = cfg.get_double("box_padding", 0.05);
    BoundingBox padded = pad_box(best.box, padding, work_ref.width, work_ref.height);
    const long long min_area = cfg.get_int("min_box_area", 1024);
    if (padded.area() < min_area) {
        throw_error(ErrorKind::Invalid, "degenerate box: padded area " +
                                            std::to_string(padded.area()) +
                                            " is below the minimum " + std::to_string(min_area));
    }

    ImageRef edited = ctx.suite->inpainter->inpaint_replace(work_ref, decision.selected_category,
                                                            padded, decision.target_category);

    EditSample& s = out.sample;
    s.id = source.id;
    s.part = part;
    s.input_image = store_copy(ctx, in_img);
    s.edited_image = rebase_generated(ctx, edited);
    s.input_caption = caption;
    s.edited_caption = std::nullopt;   // unknown after replacement
    s.direct_instruction = std::nullopt;
    s.reasoning_instruction = decision.instruction;
    ReplacementRecord rec;
    rec.selected_category = decision.selected_category;
    rec.target_category = decision.target_category;
    rec.selected_box = padded;
    rec.candidate_categories = used_categories;
    s.replacement = rec;
    s.provenance.source_dataset = ctx.source_dataset;
    s.provenance.source_id = source.id;
    s.provenance.generator_versions = provenance_versions(ctx);
    s.provenance.generator_versions["box_padding"] = cfg.get("box_padding", "0.05");
    s.provenance.seed = static_cast<int64_t>(sample_seed);
    if (auto err = s.validate(); !err.empty()) {
        throw_error(ErrorKind::Invalid, "sample " + s.id + ": " + err);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Orchestrator
// ---------------------------------------------------------------------------

namespace {

std::string run_mode_name(RunMode m) { return m == RunMode::Part1 ? "part1" : "part23"; }

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string make_run_id() {
    std::random_device rd;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%08x%08x", rd(), rd());
    return buf;
}

ordered_json entry_to_json(const std::string& id, const ManifestEntry& e, bool with_sample) {
    ordered_json j;
    j["id"] = id;
    j["status"] = sample_status_name(e.status);
    j["part"] = e.part ? ordered_json(part_name(*e.part)) : ordered_json(nullptr);
    j["divergence"] = e.divergence ? ordered_json(*e.divergence) : ordered_json(nullptr);
    j["warnings"] = e.warnings;
    j["cache_keys"] = e.cache_keys;
    j["error"] = e.error.empty() ? ordered_json(nullptr) : ordered_json(e.error);
    if (with_sample) {
        j["sample"] = e.sample ? ordered_json::parse(sample_to_json_line(*e.sample))
                               : ordered_json(nullptr);
    }
    return j;
}

ManifestEntry entry_from_json(const nlohmann::json& j) {
    ManifestEntry e;
    auto status = sample_status_from_name(j.at("status").get<std::string>());
    if (!status) throw_error(ErrorKind::Parse, "journal entry has unknown status");
    e.status = *status;
    if (!j.at("part").is_null()) {
        auto p = part_from_name(j.at("part").get<std::string>());
        if (!p) throw_error(ErrorKind::Parse, "journal entry has unknown part");
        e.part = *p;
    }
    if (!j.at("divergence").is_null()) e.divergence = j.at("divergence").get<double>();
    e.warnings = j.at("warnings").get<std::vector<std::string>>();
    e.cache_keys = j.at("cache_keys").get<std::vector<std::string>>();
    if (!j.at("error").is_null()) e.error = j.at("error").get<std::string>();
    if (j.contains("sample") && !j.at("sample").is_null()) {
        e.sample = sample_from_json_line(j.at("sample").dump());
    }
    return e;
}

// Single-writer journal: header line + one JSON line per terminal sample,
// flushed per entry so a killed run resumes from the last completed one.
class Journal {
public:
    Journal(const fs::path& path, const std::string& config_hash, const std::string& mode,
            const std::string& sources_hash)
        : path_(path) {
        bool fresh = true;
        if (fs::exists(path_) && fs::file_size(path_) > 0) {
            auto lines = read_lines(path_);
            nlohmann::json header;
            try {
                header = nlohmann::json::parse(lines.at(0));
            } catch (const std::exception& e) {
                throw_error(ErrorKind::Parse, "corrupt journal header in " + path_.string() +
                                                  ": " + e.what());
            }
            if (header.value("format", "") != kJournalFormat) {
                throw_error(ErrorKind::Parse, path_.string() + ": not a journal file");
            }
            if (header.value("config_hash", "") != config_hash) {
                throw_error(ErrorKind::Config,
                            "refusing to resume: config hash mismatch (journal " +
                                header.value("config_hash", "").substr(0, 12) + "…, current " +
                                config_hash.substr(0, 12) + "…); use a fresh output directory");
            }
            if (header.value("mode", "") != mode) {
                throw_error(ErrorKind::Config, "refusing to resume: journal was written by '" +
                                                   header.value("mode", "") +
                                                   "', this run is '" + mode + "'");
            }
            if (header.value("sources_hash", "") != sources_hash) {
                throw_error(ErrorKind::Config,
                            "refusing to resume: source manifest changed since the journal "
                            "was written");
            }
            for (size_t i = 1; i < lines.size(); ++i) {
                if (trim(lines[i]).empty()) continue;
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(lines[i]);
                } catch (const std::exception&) {
                    // Torn tail from a crash mid-write: ignore the line.
                    continue;
                }
                replayed_[j.at("id").get<std::string>()] = entry_from_json(j);
            }
            fresh = false;
        }
        stream_.open(path_, std::ios::binary | std::ios::app);
        if (!stream_) throw_error(ErrorKind::Io, "cannot open journal: " + path_.string());
        if (fresh) {
            ordered_json header;
            header["format"] = kJournalFormat;
            header["config_hash"] = config_hash;
            header["mode"] = mode;
            header["sources_hash"] = sources_hash;
            stream_ << header.dump() << '\n' << std::flush;
        }
    }

    const std::map<std::string, ManifestEntry>& replayed() const { return replayed_; }

    void append(const std::string& id, const ManifestEntry& e) {
        stream_ << entry_to_json(id, e, /*with_sample=*/true).dump() << '\n' << std::flush;
    }

private:
    fs::path path_;
    std::ofstream stream_;
    std::map<std::string, ManifestEntry> replayed_;
};

std::string format_thousands(int64_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    int count = 0;
    for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
        if (count > 0 && count % 3 == 0) out.push_back(',');
        out.push_back(*it);
        ++count;
    }
    std::reverse(out.begin(), out.end());
    return out;
}

ordered_json manifest_to_json(const PipelineManifest& pm, const RunConfig& config,
                              const std::string& sources_path, const std::string& out_dir,
                              const std::string& started_at, const std::string& finished_at) {
    ordered_json j;
    j["format"] = kManifestFormat;
    ordered_json run;
    run["run_id"] = pm.run_id;
    run["started_at"] = started_at;
    run["finished_at"] = finished_at;
    run["parallelism"] = config.parallelism();
    run["sources"] = sources_path;
    run["out_dir"] = out_dir;
    j["run"] = run;
    j["config_hash"] = pm.config_hash;
    ordered_json totals;
    totals["sources"] = static_cast<int64_t>(pm.entries.size());
    totals["done"] = pm.count(SampleStatus::Done);
    totals["failed"] = pm.count(SampleStatus::Failed);
    totals["filtered_out"] = pm.count(SampleStatus::FilteredOut);
    j["totals"] = totals;
    ordered_json parts;
    auto counts = pm.part_counts();
    for (Part p : {Part::I, Part::II, Part::III}) {
        auto it = counts.find(p);
        parts[part_name(p)] = it == counts.end() ? 0 : it->second;
    }
    j["part_counts"] = parts;
    j["failure_histogram"] = pm.failure_histogram();
    ordered_json entries;
    for (const auto& [id, e] : pm.entries) {
        ordered_json je = entry_to_json(id, e, /*with_sample=*/false);
        je.erase("id");
        entries[id] = je;
    }
    j["entries"] = entries;
    return j;
}

std::string render_stats(const nlohmann::json& manifest) {
    const auto& totals = manifest.at("totals");
    const auto& parts = manifest.at("part_counts");
    std::string out;
    out += "Pipeline statistics\n";
    char line[128];
    std::snprintf(line, sizeof(line), "  %-13s %8lld\n", "sources:",
                  static_cast<long long>(totals.at("sources").get<int64_t>()));
    out += line;
    std::snprintf(line, sizeof(line), "  %-13s %8lld\n", "done:",
                  static_cast<long long>(totals.at("done").get<int64_t>()));
    out += line;
    std::snprintf(line, sizeof(line), "  %-13s %8lld\n", "failed:",
                  static_cast<long long>(totals.at("failed").get<int64_t>()));
    out += line;
    std::snprintf(line, sizeof(line), "  %-13s %8lld\n", "filtered out:",
                  static_cast<long long>(totals.at("filtered_out").get<int64_t>()));
    out += line;
    out += "\nDone samples by part (local vs reported full-scale run)\n";
    out += "  part      local  reference\n";
    const int64_t ref_counts[3] = {8013, 4141, 28058};
    const char* names[3] = {"PartI", "PartII", "PartIII"};
    for (int i = 0; i < 3; ++i) {
        std::snprintf(line, sizeof(line), "  %-8s %6lld %10s\n", names[i],
                      static_cast<long long>(parts.at(names[i]).get<int64_t>()),
                      format_thousands(ref_counts[i]).c_str());
        out += line;
    }
    out += "  reference row: 8,013 / 4,141 / 28,058\n";
    out += "\nFailures\n";
    const auto& hist = manifest.at("failure_histogram");
    if (hist.empty()) {
        out += "  (none)\n";
    } else {
        for (const auto& [reason, n] : hist.items()) {
            std::snprintf(line, sizeof(line), "  %s: %lld\n", reason.c_str(),
                          static_cast<long long>(n.get<int64_t>()));
            out += line;
        }
    }
    return out;
}

// Divergences for every pair-carrying source, at canonical size.
std::map<std::string, double> corpus_divergences(const SourceManifest& manifest, int canonical) {
    std::map<std::string, double> out;
    for (const auto& s : manifest.sources) {
        if (!s.has_pair()) continue;
        PixelGrid a = load_canonical(manifest.root / s.input_image.path, canonical);
        PixelGrid b = load_canonical(manifest.root / s.edited_image->path, canonical);
        out[s.id] = divergence(a, b);
    }
    return out;
}

}  // namespace

PipelineManifest orchestrate(const RunConfig& config, RunMode mode, const fs::path& sources_path,
                             const fs::path& out_dir, const ProgressFn& progress,
                             const BackendSuite* suite_override) {
    if (auto err = config.validate(); !err.empty()) throw_error(ErrorKind::Config, err);
    const std::string started_at = utc_now();

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

    PipelineManifest pm;
    pm.run_id = make_run_id();
    pm.config_hash = config.config_hash();

    // Resolved config + versions land on disk before any processing.
    {
        ordered_json rc;
        rc["format"] = "reasonforge-run-config/1";
        rc["config_hash"] = pm.config_hash;
        rc["mode"] = run_mode_name(mode);
        ordered_json cfg_json;
        for (const auto& [key, value] : config.entries()) {
            // Keys never land on disk.
            bool secret = key.size() >= 4 && key.compare(key.size() - 4, 4, "_key") == 0;
            cfg_json[key] = secret && !value.empty() ? "<redacted>" : value;
        }
        rc["config"] = cfg_json;
        rc["backend_versions"] = suite.versions();
        rc["template_hash"] = prompts.template_hash();
        write_file_atomic(out_dir / "run_config.json", rc.dump(2) + "\n");
    }

    const std::string sources_hash = sha256_hex(read_file(sources_path));
    Journal journal(out_dir / "manifest.journal", pm.config_hash, run_mode_name(mode),
                    sources_hash);

    for (const auto& s : corpus.sources) {
        auto it = journal.replayed().find(s.id);
        pm.entries[s.id] = it != journal.replayed().end() ? it->second : ManifestEntry{};
    }

    // Divergence filter pre-pass. Deterministic over the whole corpus, so
    // rank mode partitions identically on every (re)run.
    const bool filtering =
        mode == RunMode::Part1 || (mode == RunMode::Part23 && config.get_bool("filter_part2", true));
    if (filtering) {
        auto divergences = corpus_divergences(corpus, config.canonical_size());
        std::vector<std::pair<std::string, double>> pairs(divergences.begin(), divergences.end());
        if (!pairs.empty()) {
            FilterResult result = apply_filter(pairs, config.filter_config());
            size_t terminal_now = 0;
            for (auto& [id, entry] : pm.entries) {
                auto dv = divergences.find(id);
                if (dv != divergences.end() && !entry.divergence) entry.divergence = dv->second;
                if (entry.status != SampleStatus::Pending) ++terminal_now;
            }
            for (const auto& id : result.abandoned) {
                ManifestEntry& entry = pm.entries.at(id);
                if (entry.status != SampleStatus::Pending) continue;
                entry.status = SampleStatus::FilteredOut;
                journal.append(id, entry);
                ++terminal_now;
                if (progress &&
                    !progress(id, SampleStatus::FilteredOut, terminal_now, pm.entries.size())) {
                    throw_error(ErrorKind::Io,
                                "run aborted by progress callback; journal retained for resume");
                }
            }
        }
    }
    std::vector<const SourcePair*> todo;
    for (const auto& s : corpus.sources) {
        if (pm.entries.at(s.id).status == SampleStatus::Pending) todo.push_back(&s);
    }

    std::mutex mutex;  // guards journal, pm.entries, progress, terminal count
    std::atomic<size_t> next{0};
    std::atomic<bool> abort{false};
    size_t terminal = 0;
    for (const auto& [id, e] : pm.entries) {
        if (e.status != SampleStatus::Pending) ++terminal;
    }

    auto worker = [&]() {
        for (;;) {
            if (abort.load()) return;
            size_t i = next.fetch_add(1);
            if (i >= todo.size()) return;
            const SourcePair& source = *todo[i];
            ManifestEntry result;
            try {
                StageOutput stage =
                    mode == RunMode::Part1 ? run_part1(ctx, source) : run_part23(ctx, source);
                result.status = SampleStatus::Done;
                result.part = stage.sample.part;
                result.warnings = std::move(stage.warnings);
                result.cache_keys = std::move(stage.cache_keys);
                result.sample = std::move(stage.sample);
            } catch (const Error& e) {
                result.status = SampleStatus::Failed;
                result.error = e.what();
            } catch (const std::exception& e) {
                result.status = SampleStatus::Failed;
                result.error = std::string("unexpected: ") + e.what();
            }
            std::lock_guard<std::mutex> lock(mutex);
            ManifestEntry& entry = pm.entries.at(source.id);
            result.divergence = entry.divergence;  // from the filter pre-pass
            entry = result;
            journal.append(source.id, entry);
            ++terminal;
            if (progress && !progress(source.id, entry.status, terminal, pm.entries.size())) {
                abort.store(true);
            }
        }
    };

    const int n_threads = std::max(1, std::min<int>(config.parallelism(),
                                                    static_cast<int>(todo.size())));
    if (todo.size() <= 1 || n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }
    if (abort.load()) {
        throw_error(ErrorKind::Io, "run aborted by progress callback; journal retained for resume");
    }

    // Final outputs: sorted shards, manifest, stats.
    std::vector<EditSample> done;
    for (const auto& [id, e] : pm.entries) {
        if (e.status == SampleStatus::Done && e.sample) done.push_back(*e.sample);
    }
    const int64_t shard_size = std::max<int64_t>(1, config.get_int("shard_size", 1000));
    for (size_t offset = 0, shard = 0; offset < done.size();
         offset += static_cast<size_t>(shard_size), ++shard) {
        size_t end = std::min(done.size(), offset + static_cast<size_t>(shard_size));
        std::vector<EditSample> chunk(done.begin() + static_cast<ptrdiff_t>(offset),
                                      done.begin() + static_cast<ptrdiff_t>(end));
        char name[32];
        std::snprintf(name, sizeof(name), "shard-%05zu.jsonl", shard);
        write_shard(chunk, out_dir / name);
    }

    ordered_json manifest_json = manifest_to_json(pm, config, sources_path.string(),
                                                  out_dir.string(), started_at, utc_now());
    write_file_atomic(out_dir / "manifest.json", manifest_json.dump(2) + "\n");
    write_file_atomic(out_dir / "stats.txt", render_stats(manifest_json));
    return pm;
}

std::string stats_text(const fs::path& manifest_json) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_file(manifest_json));
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Parse, manifest_json.string() + ": " + e.what());
    }
    if (manifest.value("format", "") != kManifestFormat) {
        throw_error(ErrorKind::Parse, manifest_json.string() + ": not a pipeline manifest");
    }
    return render_stats(manifest);
}

std::string filter_report_json(const RunConfig& config, const fs::path& sources_path) {
    SourceManifest corpus = read_source_manifest(sources_path);
    FilterConfig fc = config.filter_config();
    auto divergences = corpus_divergences(corpus, fc.canonical_size);
    std::vector<std::pair<std::string, double>> pairs(divergences.begin(), divergences.end());
    FilterResult result = apply_filter(pairs, fc);

    ordered_json j;
    j["format"] = "reasonforge-filter-report/1";
    j["mode"] = fc.mode == FilterConfig::Mode::Absolute ? "absolute" : "rank";
    j["tau"] = fc.mode == FilterConfig::Mode::Absolute ? ordered_json(fc.tau)
                                                       : ordered_json(nullptr);
    j["fraction"] = fc.mode == FilterConfig::Mode::RankFraction ? ordered_json(fc.fraction)
                                                                : ordered_json(nullptr);
    j["canonical_size"] = fc.canonical_size;
    j["total_pairs"] = static_cast<int64_t>(pairs.size());
    j["kept"] = result.kept;
    j["abandoned"] = result.abandoned;
    ordered_json dv;
    for (const auto& [id, d] : divergences) dv[id] = d;
    j["divergences"] = dv;
    return j.dump(2) + "\n";
}

}  // namespace rf
