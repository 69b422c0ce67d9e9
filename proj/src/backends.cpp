// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "backends.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace rf {

std::map<std::string, std::string> BackendSuite::versions() const {
    std::map<std::string, std::string> out;
    if (llm) out["chat"] = llm->version();
    if (captioner) out["caption"] = captioner->version();
    if (extractor) out["entities"] = extractor->version();
    if (detector) out["grounding"] = detector->version();
    if (inpainter) out["inpaint"] = inpainter->version();
    if (editor) out["edit"] = editor->version();
    return out;
}

std::vector<Detection> clamp_detections(std::vector<Detection> detections, int image_width,
                                        int image_height, std::vector<std::string>* warnings) {
    std::vector<Detection> out;
    out.reserve(detections.size());
    for (Detection det : detections) {
        BoundingBox original = det.box;
        det.box.x_min = std::max(0, det.box.x_min);
        det.box.y_min = std::max(0, det.box.y_min);
        det.box.x_max = std::min(image_width, det.box.x_max);
        det.box.y_max = std::min(image_height, det.box.y_max);
        if (det.box.x_min >= det.box.x_max || det.box.y_min >= det.box.y_max) {
            if (warnings) {
                warnings->push_back("dropped out-of-bounds detection for '" + det.category + "'");
            }
            continue;
        }
        if (det.box != original && warnings) {
            warnings->push_back("clamped detection box for '" + det.category + "' to image bounds");
        }
        out.push_back(std::move(det));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return out;
}

namespace {

const std::unordered_set<std::string>& stopwords() {
    static const std::unordered_set<std::string> kWords = {
        // function words
        "a", "an", "the", "of", "in", "on", "at", "with", "and", "or", "to", "is", "are",
        "was", "were", "be", "been", "being", "this", "that", "these", "those", "it", "its",
        "his", "her", "their", "there", "here", "very", "some", "two", "three", "four",
        "five", "several", "many", "few", "over", "under", "near", "by", "from", "for",
        "as", "into", "onto", "up", "down", "out", "off", "behind", "beside", "between",
        "against", "across", "about", "around", "above", "below", "during", "without",
        "within", "while", "where", "when", "which", "who", "whom", "whose", "what", "why",
        "how", "not", "no", "nor", "but", "if", "then", "than", "too", "also", "just",
        "only", "own", "same", "so", "such", "can", "could", "will", "would", "may",
        "might", "must", "now", "he", "she", "they", "we", "you", "him", "them", "us",
        "me", "my", "your", "our", "one", "each", "other", "another", "both", "all",
        "any", "more", "most", "less", "least", "much",
        // caption boilerplate
        "photo", "photograph", "picture", "image", "view", "close", "closeup", "shot",
        "scene", "top", "bottom", "middle", "side", "front", "next", "couple", "pair",
        "group", "lot", "bunch", "background", "foreground",
        // caption verbs
        "sitting", "standing", "flying", "wearing", "holding", "looking", "riding",
        "eating", "walking", "running", "playing", "laying", "lying", "resting",
        "perched", "parked", "filled", "covered", "surrounded", "hanging", "floating",
        "swimming", "jumping", "placed", "sits", "stands", "rests", "hangs", "shown",
        "seen",
    };
    return kWords;
}

// Lowercased alphabetic tokens, stopword-filtered, deduplicated in order
// of first appearance. A crude part-of-speech stand-in: the contract is
// determinism and ordering, not linguistic accuracy.
class BuiltinEntityExtractor final : public EntityBackend {
public:
    std::vector<std::string> extract_entities(const std::string& caption) override {
        if (trim(caption).empty()) {
            throw_error(ErrorKind::Invalid, "entity extraction needs a non-empty caption");
        }
        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        std::string token;
        auto flush = [&]() {
            if (token.size() >= 3 && !stopwords().count(token) && seen.insert(token).second) {
                out.push_back(token);
            }
            token.clear();
        };
        for (char ch : caption) {
            if (std::isalpha(static_cast<unsigned char>(ch))) {
                token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
            } else {
                flush();
            }
        }
        flush();
        return out;
    }

    std::string version() const override { return "builtin-entities/1"; }
};

}  // namespace

std::shared_ptr<EntityBackend> make_builtin_entity_extractor() {
    return std::make_shared<BuiltinEntityExtractor>();
}

BackendSuite make_suite(const RunConfig& config, const std::filesystem::path& images_out,
                        std::shared_ptr<ResponseCache> cache) {
    return config.mock() ? make_mock_suite(config, images_out)
                         : make_remote_suite(config, images_out, std::move(cache));
}

EmbedderPair make_embedders(const RunConfig& config, std::shared_ptr<ResponseCache> cache) {
    return config.mock() ? make_mock_embedders(config) : make_remote_embedders(config, std::move(cache));
}

}  // namespace rf
