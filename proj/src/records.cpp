// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "records.hpp"

#include "json.hpp"

#include <fstream>

namespace rf {

using ordered_json = nlohmann::ordered_json;

std::string BoundingBox::validate(int image_width, int image_height) const {
    if (!(0 <= x_min && x_min < x_max && x_max <= image_width) ||
        !(0 <= y_min && y_min < y_max && y_max <= image_height)) {
        return "BoundingBox invariant violated: require 0 <= min < max <= image dimension, got [" +
               std::to_string(x_min) + "," + std::to_string(y_min) + "," +
               std::to_string(x_max) + "," + std::to_string(y_max) + "] for " +
               std::to_string(image_width) + "x" + std::to_string(image_height);
    }
    return {};
}

std::string ImageRef::validate() const {
    if (path.empty()) return "ImageRef.path is empty";
    if (width < 1 || height < 1) return "ImageRef dimensions must be >= 1";
    if (content_hash.empty()) return "ImageRef.content_hash is empty";
    return {};
}

std::string part_name(Part p) {
    switch (p) {
        case Part::I: return "PartI";
        case Part::II: return "PartII";
        case Part::III: return "PartIII";
    }
    return "PartI";
}

std::optional<Part> part_from_name(std::string_view name) {
    if (name == "PartI") return Part::I;
    if (name == "PartII") return Part::II;
    if (name == "PartIII") return Part::III;
    return std::nullopt;
}

std::string ReplacementRecord::validate() const {
    if (selected_category.empty()) return "ReplacementRecord.selected_category is empty";
    if (target_category.empty()) return "ReplacementRecord.target_category is empty";
    if (target_category == selected_category) {
        return "ReplacementRecord: target_category equals selected_category";
    }
    bool found = false;
    for (const auto& c : candidate_categories) {
        if (c == selected_category) { found = true; break; }
    }
    if (!found) return "ReplacementRecord: selected_category not in candidate_categories";
    return {};
}

std::string source_dataset_name(SourceDataset d) {
    switch (d) {
        case SourceDataset::InstructPix2Pix: return "InstructPix2Pix";
        case SourceDataset::V3Det: return "V3Det";
        case SourceDataset::Fixture: return "Fixture";
    }
    return "Fixture";
}

std::optional<SourceDataset> source_dataset_from_name(std::string_view name) {
    if (name == "InstructPix2Pix") return SourceDataset::InstructPix2Pix;
    if (name == "V3Det") return SourceDataset::V3Det;
    if (name == "Fixture") return SourceDataset::Fixture;
    return std::nullopt;
}

std::string EditSample::validate() const {
    if (id.empty()) return "EditSample.id is empty";
    if (auto err = input_image.validate(); !err.empty()) return "input_image: " + err;
    if (auto err = edited_image.validate(); !err.empty()) return "edited_image: " + err;
    if (trim(reasoning_instruction).empty()) return "reasoning_instruction is empty";
    if (part == Part::II || part == Part::III) {
        if (!replacement.has_value()) {
            return part_name(part) + " sample is missing its ReplacementRecord";
        }
    }
    if (replacement.has_value()) {
        if (auto err = replacement->validate(); !err.empty()) return err;
        if (auto err = replacement->selected_box.validate(input_image.width, input_image.height);
            !err.empty()) {
            return err;
        }
    }
    return {};
}

namespace {

ordered_json image_ref_to_json(const ImageRef& ref) {
    ordered_json j;
    j["path"] = ref.path;
    j["width"] = ref.width;
    j["height"] = ref.height;
    j["content_hash"] = ref.content_hash;
    return j;
}

ImageRef image_ref_from_json(const ordered_json& j) {
    ImageRef ref;
    ref.path = j.at("path").get<std::string>();
    ref.width = j.at("width").get<int>();
    ref.height = j.at("height").get<int>();
    ref.content_hash = j.at("content_hash").get<std::string>();
    return ref;
}

ordered_json optional_text(const std::optional<std::string>& value) {
    if (value.has_value()) return *value;
    return nullptr;
}

std::optional<std::string> text_or_null(const ordered_json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::string>();
}

}  // namespace

std::string sample_to_json_line(const EditSample& sample) {
    ordered_json j;
    j["id"] = sample.id;
    j["part"] = part_name(sample.part);
    j["input_image"] = image_ref_to_json(sample.input_image);
    j["edited_image"] = image_ref_to_json(sample.edited_image);
    j["input_caption"] = optional_text(sample.input_caption);
    j["edited_caption"] = optional_text(sample.edited_caption);
    j["direct_instruction"] = optional_text(sample.direct_instruction);
    j["reasoning_instruction"] = sample.reasoning_instruction;
    if (sample.replacement.has_value()) {
        const auto& r = *sample.replacement;
        ordered_json rj;
        rj["selected_category"] = r.selected_category;
        rj["target_category"] = r.target_category;
        rj["selected_box"] = {r.selected_box.x_min, r.selected_box.y_min,
                              r.selected_box.x_max, r.selected_box.y_max};
        rj["candidate_categories"] = r.candidate_categories;
        j["replacement"] = rj;
    } else {
        j["replacement"] = nullptr;
    }
    {
        const auto& p = sample.provenance;
        ordered_json pj;
        pj["source_dataset"] = source_dataset_name(p.source_dataset);
        pj["source_id"] = p.source_id;
        ordered_json versions;  // std::map iterates sorted: deterministic
        for (const auto& [name, ver] : p.generator_versions) versions[name] = ver;
        pj["generator_versions"] = versions;
        pj["seed"] = p.seed;
        j["provenance"] = pj;
    }
    return j.dump();
}

EditSample sample_from_json_line(const std::string& line) {
    ordered_json j = ordered_json::parse(line);
    EditSample s;
    s.id = j.at("id").get<std::string>();
    auto part = part_from_name(j.at("part").get<std::string>());
    if (!part) throw_error(ErrorKind::Parse, "unknown part tag: " + j.at("part").dump());
    s.part = *part;
    s.input_image = image_ref_from_json(j.at("input_image"));
    s.edited_image = image_ref_from_json(j.at("edited_image"));
    s.input_caption = text_or_null(j.at("input_caption"));
    s.edited_caption = text_or_null(j.at("edited_caption"));
    s.direct_instruction = text_or_null(j.at("direct_instruction"));
    s.reasoning_instruction = j.at("reasoning_instruction").get<std::string>();
    if (!j.at("replacement").is_null()) {
        const auto& rj = j.at("replacement");
        ReplacementRecord r;
        r.selected_category = rj.at("selected_category").get<std::string>();
        r.target_category = rj.at("target_category").get<std::string>();
        const auto& box = rj.at("selected_box");
        if (!box.is_array() || box.size() != 4) {
            throw_error(ErrorKind::Parse, "selected_box must be [x_min, y_min, x_max, y_max]");
        }
        r.selected_box = BoundingBox{box[0].get<int>(), box[1].get<int>(),
                                     box[2].get<int>(), box[3].get<int>()};
        r.candidate_categories = rj.at("candidate_categories").get<std::vector<std::string>>();
        s.replacement = std::move(r);
    }
    {
        const auto& pj = j.at("provenance");
        auto ds = source_dataset_from_name(pj.at("source_dataset").get<std::string>());
        if (!ds) throw_error(ErrorKind::Parse, "unknown source_dataset: " + pj.at("source_dataset").dump());
        s.provenance.source_dataset = *ds;
        s.provenance.source_id = pj.at("source_id").get<std::string>();
        for (const auto& [name, ver] : pj.at("generator_versions").items()) {
            s.provenance.generator_versions[name] = ver.get<std::string>();
        }
        s.provenance.seed = pj.at("seed").get<int64_t>();
    }
    return s;
}

namespace {

ShardSummary summarize(const std::vector<EditSample>& samples) {
    ShardSummary summary;
    summary.total = static_cast<int64_t>(samples.size());
    summary.part_counts = {{Part::I, 0}, {Part::II, 0}, {Part::III, 0}};
    for (const auto& s : samples) summary.part_counts[s.part] += 1;
    return summary;
}

std::filesystem::path summary_path_for(const std::filesystem::path& shard_path) {
    std::filesystem::path p = shard_path;
    p.replace_extension();  // part1.jsonl -> part1
    p += ".summary.json";
    return p;
}

}  // namespace

ShardSummary write_shard(const std::vector<EditSample>& samples,
                         const std::filesystem::path& shard_path) {
    for (const auto& s : samples) {
        if (auto err = s.validate(); !err.empty()) {
            throw_error(ErrorKind::Invalid, "sample '" + s.id + "': " + err);
        }
    }
    std::string body;
    for (const auto& s : samples) {
        body += sample_to_json_line(s);
        body += '\n';
    }
    write_file_atomic(shard_path, body);

    ShardSummary summary = summarize(samples);
    ordered_json j;
    j["shard"] = shard_path.filename().string();
    j["total"] = summary.total;
    ordered_json counts;
    counts["PartI"] = summary.count(Part::I);
    counts["PartII"] = summary.count(Part::II);
    counts["PartIII"] = summary.count(Part::III);
    j["part_counts"] = counts;
    write_file_atomic(summary_path_for(shard_path), j.dump(2) + "\n");
    return summary;
}

std::vector<EditSample> read_shard(const std::filesystem::path& shard_path) {
    if (!std::filesystem::exists(shard_path)) {
        throw_error(ErrorKind::Io, "shard does not exist: " + shard_path.string());
    }
    std::vector<EditSample> samples;
    auto lines = read_lines(shard_path);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        EditSample s;
        try {
            s = sample_from_json_line(lines[i]);
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(i + 1) + " of " +
                                      shard_path.string() + ": " + e.what());
        } catch (const std::exception& e) {
            throw_error(ErrorKind::Parse,
                        "malformed record at line " + std::to_string(i + 1) + " of " +
                            shard_path.string() + ": " + e.what());
        }
        if (auto err = s.validate(); !err.empty()) {
            throw_error(ErrorKind::Invalid,
                        "invalid record at line " + std::to_string(i + 1) + " (sample '" +
                            s.id + "'): " + err);
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace rf
