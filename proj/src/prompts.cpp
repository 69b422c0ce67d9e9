// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#include "prompts.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace rf {

namespace {

// Builtin templates. The mock chat backend keys on the structural markers
// ("Original edit request:", "Reply with the number", "Candidate
// categories:"); custom templates that drop them still work against real
// services but get filler replies from the mock.

constexpr const char* kGenSystem =
    "You rewrite image-editing requests so they require reasoning to carry out.\n";

constexpr const char* kGenUser =
    "Input caption: {input_caption}\n"
    "Edited caption: {edited_caption}\n"
    "Original edit request: {instruction}\n"
    "\n"
    "Rewrite the request so that it is 1) indirect, and 2) in a similar effect to the\n"
    "original. Reply with the rewritten request only, on a single line.\n";

constexpr const char* kSelectSystem =
    "You judge rewritten image-editing requests and pick the single best one from a\n"
    "numbered list.\n";

constexpr const char* kSelectUser =
    "Input caption: {input_caption}\n"
    "Edited caption: {edited_caption}\n"
    "Original edit request: {instruction}\n"
    "\n"
    "Rewrites:\n"
    "{candidates}\n"
    "\n"
    "Pick the rewrite that stays indirect but keeps the effect of the original\n"
    "request. Reply with the number of the best rewrite and nothing else.\n";

constexpr const char* kReplaceSystem =
    "You plan object replacements for image editing.\n";

constexpr const char* kReplaceUser =
    "Caption: {caption}\n"
    "\n"
    "Candidate categories:\n"
    "{categories}\n"
    "\n"
    "Choose exactly one category from the list to replace, invent a different\n"
    "replacement category, and write one indirect edit request that implies the\n"
    "replacement without naming it outright. Reply with a JSON object with exactly\n"
    "the keys \"selected\", \"target\", and \"instruction\", and nothing else.\n";

std::string render(std::string text, const std::vector<std::pair<std::string, std::string>>& vars) {
    for (const auto& [name, value] : vars) {
        const std::string token = "{" + name + "}";
        size_t pos = 0;
        while ((pos = text.find(token, pos)) != std::string::npos) {
            text.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return text;
}

std::string numbered(const std::vector<std::string>& items) {
    std::vector<std::string> lines;
    lines.reserve(items.size());
    for (size_t i = 0; i < items.size(); ++i) {
        lines.push_back(std::to_string(i + 1) + ". " + items[i]);
    }
    return join(lines, "\n");
}

void maybe_load(const std::filesystem::path& file, std::string& slot) {
    if (std::filesystem::exists(file)) slot = read_file(file);
}

}  // namespace

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    lib.gen_system_ = kGenSystem;
    lib.gen_user_ = kGenUser;
    lib.select_system_ = kSelectSystem;
    lib.select_user_ = kSelectUser;
    lib.replace_system_ = kReplaceSystem;
    lib.replace_user_ = kReplaceUser;
    return lib;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw_error(ErrorKind::Config, "prompt directory does not exist: " + dir.string());
    }
    PromptLibrary lib = builtin();
    maybe_load(dir / "gen_system.txt", lib.gen_system_);
    maybe_load(dir / "gen_user.txt", lib.gen_user_);
    maybe_load(dir / "select_system.txt", lib.select_system_);
    maybe_load(dir / "select_user.txt", lib.select_user_);
    maybe_load(dir / "replace_system.txt", lib.replace_system_);
    maybe_load(dir / "replace_user.txt", lib.replace_user_);
    return lib;
}

PromptLibrary PromptLibrary::from_config(const RunConfig& config) {
    std::string dir = config.get("prompt_dir");
    return dir.empty() ? builtin() : load(dir);
}

std::string PromptLibrary::template_hash() const {
    return sha256_hex(gen_system_ + "\x1f" + gen_user_ + "\x1f" + select_system_ + "\x1f" +
                      select_user_ + "\x1f" + replace_system_ + "\x1f" + replace_user_);
}

std::string GenPromptInput::validate() const {
    if (trim(input_caption).empty()) return "gen prompt needs a non-empty input caption";
    if (trim(edited_caption).empty()) return "gen prompt needs a non-empty edited caption";
    if (trim(instruction).empty()) return "gen prompt needs a non-empty edit request";
    return {};
}

uint64_t derive_seed(uint64_t base, const std::string& tag) { return fnv1a64(tag, base); }

ChatRequest build_gen_prompt(const PromptLibrary& lib, const GenPromptInput& input,
                             double temperature, uint64_t seed) {
    if (auto err = input.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
    ChatRequest req;
    req.system_text = lib.gen_system();
    req.user_text = render(lib.gen_user(), {{"input_caption", input.input_caption},
                                            {"edited_caption", input.edited_caption},
                                            {"instruction", input.instruction}});
    req.temperature = temperature;
    req.seed = seed;
    return req;
}

std::vector<std::string> generate_candidates(ChatBackend& llm, const PromptLibrary& lib,
                                             const GenPromptInput& input, int n,
                                             uint64_t base_seed, double temperature,
                                             int retry_budget) {
    if (n < 1) throw_error(ErrorKind::Invalid, "candidate count must be >= 1");
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        uint64_t seed = derive_seed(base_seed, "gen:" + std::to_string(i));
        std::string text;
        for (int attempt = 0;; ++attempt) {
            ChatRequest req = build_gen_prompt(lib, input, temperature, seed);
            try {
                text = trim(llm.chat(req));
            } catch (const Error& e) {
                // Empty completions are worth another roll with a new
                // seed; anything else is a real failure.
                if (e.kind() != ErrorKind::Backend ||
                    std::string(e.what()).find("empty completion") == std::string::npos) {
                    throw;
                }
                text.clear();
            }
            if (!text.empty()) break;
            if (attempt + 1 >= retry_budget) {
                throw_error(ErrorKind::Backend, "candidate " + std::to_string(i + 1) +
                                                    ": empty completion after " +
                                                    std::to_string(retry_budget) + " attempts");
            }
            seed = derive_seed(seed, "retry:" + std::to_string(attempt + 1));
        }
        out.push_back(text);
    }
    return out;
}

ChatRequest build_select_prompt(const PromptLibrary& lib, const GenPromptInput& input,
                                const std::vector<std::string>& candidates, double temperature,
                                uint64_t seed) {
    if (auto err = input.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
    if (candidates.empty()) throw_error(ErrorKind::Invalid, "select needs at least one candidate");
    ChatRequest req;
    req.system_text = lib.select_system();
    req.user_text = render(lib.select_user(), {{"input_caption", input.input_caption},
                                               {"edited_caption", input.edited_caption},
                                               {"instruction", input.instruction},
                                               {"candidates", numbered(candidates)}});
    req.temperature = temperature;
    req.seed = seed;
    return req;
}

SelectResult select_best(ChatBackend& llm, const PromptLibrary& lib, const GenPromptInput& input,
                         const std::vector<std::string>& candidates, double temperature,
                         uint64_t seed, std::vector<std::string>* warnings) {
    ChatRequest req = build_select_prompt(lib, input, candidates, temperature, seed);
    std::string reply;
    try {
        reply = llm.chat(req);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Backend ||
            std::string(e.what()).find("empty completion") == std::string::npos) {
            throw;
        }
        // fall through to the fallback path with an empty reply
    }

    // First integer anywhere in the reply, 1-based.
    std::optional<long> parsed;
    for (size_t i = 0; i < reply.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(reply[i]))) {
            size_t j = i;
            long value = 0;
            while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j])) &&
                   value < 1000000) {
                value = value * 10 + (reply[j] - '0');
                ++j;
            }
            parsed = value;
            break;
        }
    }

    SelectResult result;
    if (parsed && *parsed >= 1 && static_cast<size_t>(*parsed) <= candidates.size()) {
        result.index = static_cast<size_t>(*parsed - 1);
    } else {
        result.index = 0;
        result.used_fallback = true;
        if (warnings) {
            warnings->push_back("select reply not a valid 1-based index (\"" +
                                trim(reply).substr(0, 60) + "\"); falling back to candidate 1");
        }
    }
    result.instruction = candidates[result.index];
    return result;
}

ChatRequest build_replace_prompt(const PromptLibrary& lib, const std::string& caption,
                                 const std::vector<std::string>& categories, double temperature,
                                 uint64_t seed) {
    if (trim(caption).empty()) throw_error(ErrorKind::Invalid, "replace prompt needs a caption");
    if (categories.empty()) {
        throw_error(ErrorKind::Invalid, "replace prompt needs at least one candidate category");
    }
    ChatRequest req;
    req.system_text = lib.replace_system();
    req.user_text = render(lib.replace_user(),
                           {{"caption", caption}, {"categories", numbered(categories)}});
    req.temperature = temperature;
    req.seed = seed;
    return req;
}

namespace {

// Strips a ```...``` fence (with optional language tag) around the payload.
std::string strip_fences(const std::string& reply) {
    std::string text = trim(reply);
    if (text.rfind("```", 0) != 0) return text;
    size_t start = text.find('\n');
    if (start == std::string::npos) return text;
    size_t end = text.rfind("```");
    if (end <= start) return text;
    return trim(text.substr(start + 1, end - start - 1));
}

}  // namespace

ReplaceDecision parse_replace_reply(const std::string& reply,
                                    const std::vector<std::string>& categories) {
    const std::string payload = strip_fences(reply);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Parse, std::string("replacement reply is not JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.size() != 3 || !doc.contains("selected") ||
        !doc.contains("target") || !doc.contains("instruction")) {
        throw_error(ErrorKind::Parse,
                    "replacement reply must be an object with exactly the keys "
                    "selected/target/instruction");
    }
    for (const char* key : {"selected", "target", "instruction"}) {
        if (!doc.at(key).is_string()) {
            throw_error(ErrorKind::Parse, std::string("replacement reply key '") + key +
                                              "' must be a string");
        }
    }

    ReplaceDecision out;
    const std::string selected = trim(doc.at("selected").get<std::string>());
    out.target_category = trim(doc.at("target").get<std::string>());
    out.instruction = trim(doc.at("instruction").get<std::string>());

    auto match = std::find_if(categories.begin(), categories.end(), [&](const std::string& c) {
        return to_lower(c) == to_lower(selected);
    });
    if (match == categories.end()) {
        throw_error(ErrorKind::Parse,
                    "replacement reply selected '" + selected + "' which is not a candidate");
    }
    out.selected_category = *match;
    if (out.target_category.empty()) {
        throw_error(ErrorKind::Parse, "replacement reply has an empty target");
    }
    if (to_lower(out.target_category) == to_lower(out.selected_category)) {
        throw_error(ErrorKind::Parse, "replacement target must differ from the selected category");
    }
    if (out.instruction.empty()) {
        throw_error(ErrorKind::Parse, "replacement reply has an empty instruction");
    }
    return out;
}

}  // namespace rf
