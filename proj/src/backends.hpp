// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cache.hpp"
#include "config.hpp"
#include "records.hpp"

namespace rf {

// ImageRef.path entering a backend must resolve from the process working
// directory; callers rebase record-relative paths before the call.

struct ChatRequest {
    std::string system_text;
    std::string user_text;   // non-empty
    double temperature = 0.0;
    uint64_t seed = 0;       // honored by the mock, advisory for remote

    std::string validate() const {
        if (trim(user_text).empty()) return "ChatRequest.user_text is empty";
        if (temperature < 0.0) return "ChatRequest.temperature must be >= 0";
        return {};
    }
};

struct Detection {
    std::string category;
    BoundingBox box;
    double score = 0.0;  // in [0,1], sorted descending by callers
};

struct CaptionResult {
    std::string caption;
    bool used_fallback = false;  // mock fixture miss
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string chat(const ChatRequest& request) = 0;
    virtual std::string version() const = 0;
};

class CaptionBackend {
public:
    virtual ~CaptionBackend() = default;
    virtual CaptionResult caption(const ImageRef& image) = 0;
    virtual std::string version() const = 0;
};

class EntityBackend {
public:
    virtual ~EntityBackend() = default;
    // Ordered, deduplicated categories in order of first appearance.
    // Empty caption is a precondition violation; an empty result is valid.
    virtual std::vector<std::string> extract_entities(const std::string& caption) = 0;
    virtual std::string version() const = 0;
};

class GroundingBackend {
public:
    virtual ~GroundingBackend() = default;
    // Detections sorted by descending score. Boxes exceeding image bounds
    // are clamped and a note is appended to `warnings` when provided.
    virtual std::vector<Detection> ground(const ImageRef& image, const std::string& category,
                                          std::vector<std::string>* warnings = nullptr) = 0;
    virtual std::string version() const = 0;
};

class InpaintBackend {
public:
    virtual ~InpaintBackend() = default;
    // Replaces the boxed region; output image has identical dimensions and
    // (for the mock) bit-identical pixels outside the box. Errors on a box
    // whose area is below min_box_area.
    virtual ImageRef inpaint_replace(const ImageRef& image, const std::string& selected,
                                     const BoundingBox& box, const std::string& target) = 0;
    virtual std::string version() const = 0;
};

class ConditionedEditBackend {
public:
    virtual ~ConditionedEditBackend() = default;
    virtual ImageRef conditioned_edit(const ImageRef& image, const std::string& instruction) = 0;
    virtual std::string version() const = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::vector<double> embed_image(const ImageRef& image) = 0;
    virtual std::vector<double> embed_text(const std::string& text) = 0;
    virtual std::string version() const = 0;
};

// The five generation-time services plus the evaluation-time editor.
struct BackendSuite {
    std::shared_ptr<ChatBackend> llm;
    std::shared_ptr<CaptionBackend> captioner;
    std::shared_ptr<EntityBackend> extractor;
    std::shared_ptr<GroundingBackend> detector;
    std::shared_ptr<InpaintBackend> inpainter;
    std::shared_ptr<ConditionedEditBackend> editor;  // evaluation only

    // backend name -> version string, for provenance
    std::map<std::string, std::string> versions() const;
};

struct EmbedderPair {
    std::shared_ptr<EmbedBackend> clip_like;
    std::shared_ptr<EmbedBackend> dino_like;
};

// Clamp boxes to image bounds (dropping ones fully outside, with a
// warning) and sort by descending score. Shared by every grounding
// implementation.
std::vector<Detection> clamp_detections(std::vector<Detection> detections, int image_width,
                                        int image_height, std::vector<std::string>* warnings);

// Deterministic stopword-filtered noun extractor; the shippable offline
// implementation of the entity interface (also used by the mock suite).
std::shared_ptr<EntityBackend> make_builtin_entity_extractor();

// Seeded mock suite. `images_out` is where generated images land;
// `fixtures` (optional JSON file) pins captions and grounding for
// specific content hashes.
BackendSuite make_mock_suite(const RunConfig& config, const std::filesystem::path& images_out);
EmbedderPair make_mock_embedders(const RunConfig& config);

// Remote suite speaking the JSON-over-HTTP contracts. Endpoints/keys come
// from config (chat_url, caption_url, entities_url, ground_url,
// inpaint_url, edit_url + *_key); entity extraction falls back to the
// builtin extractor when entities_url is unset.
BackendSuite make_remote_suite(const RunConfig& config, const std::filesystem::path& images_out,
                               std::shared_ptr<ResponseCache> cache);
EmbedderPair make_remote_embedders(const RunConfig& config, std::shared_ptr<ResponseCache> cache);

BackendSuite make_suite(const RunConfig& config, const std::filesystem::path& images_out,
                        std::shared_ptr<ResponseCache> cache);
EmbedderPair make_embedders(const RunConfig& config, std::shared_ptr<ResponseCache> cache);

// Mock call counters, exposed for tests and cache accounting.
struct MockCounters {
    int64_t chat = 0;
    int64_t caption = 0;
    int64_t entities = 0;
    int64_t ground = 0;
    int64_t inpaint = 0;
    int64_t edit = 0;
};
MockCounters mock_counters(const BackendSuite& suite);

}  // namespace rf
