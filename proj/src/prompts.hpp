// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "backends.hpp"

namespace rf {

// The three chat prompt templates (system + user each). Placeholders are
// written {name} and replaced verbatim; the shipped defaults live both in
// the binary and as files under prompts/ (kept byte-identical by tests).
class PromptLibrary {
public:
    static PromptLibrary builtin();
    // Loads any of the six template files present in `dir`
    // (gen_system.txt, gen_user.txt, select_system.txt, select_user.txt,
    // replace_system.txt, replace_user.txt); missing files keep the
    // builtin text.
    static PromptLibrary load(const std::filesystem::path& dir);
    static PromptLibrary from_config(const RunConfig& config);  // honors prompt_dir

    const std::string& gen_system() const { return gen_system_; }
    const std::string& gen_user() const { return gen_user_; }
    const std::string& select_system() const { return select_system_; }
    const std::string& select_user() const { return select_user_; }
    const std::string& replace_system() const { return replace_system_; }
    const std::string& replace_user() const { return replace_user_; }

    // sha256 over all six templates; recorded for provenance.
    std::string template_hash() const;

private:
    std::string gen_system_, gen_user_;
    std::string select_system_, select_user_;
    std::string replace_system_, replace_user_;
};

struct GenPromptInput {
    std::string input_caption;
    std::string edited_caption;
    std::string instruction;  // the direct edit request

    std::string validate() const;
};

// Renders the rewrite prompt; embeds all three fields and the two
// requirements ("1) indirect" / "2) in a similar effect") verbatim.
ChatRequest build_gen_prompt(const PromptLibrary& lib, const GenPromptInput& input,
                             double temperature, uint64_t seed);

// n candidates, seeded per index from base_seed. Blank completions are
// retried with a bumped seed up to retry_budget times, then error.
std::vector<std::string> generate_candidates(ChatBackend& llm, const PromptLibrary& lib,
                                             const GenPromptInput& input, int n,
                                             uint64_t base_seed, double temperature,
                                             int retry_budget);

struct SelectResult {
    size_t index = 0;  // 0-based into the candidate list
    std::string instruction;
    bool used_fallback = false;
};

ChatRequest build_select_prompt(const PromptLibrary& lib, const GenPromptInput& input,
                                const std::vector<std::string>& candidates, double temperature,
                                uint64_t seed);

// Asks the judge for a 1-based index. An unparseable or out-of-range
// reply falls back to the first candidate with a warning.
SelectResult select_best(ChatBackend& llm, const PromptLibrary& lib, const GenPromptInput& input,
                         const std::vector<std::string>& candidates, double temperature,
                         uint64_t seed, std::vector<std::string>* warnings);

ChatRequest build_replace_prompt(const PromptLibrary& lib, const std::string& caption,
                                 const std::vector<std::string>& categories, double temperature,
                                 uint64_t seed);

struct ReplaceDecision {
    std::string selected_category;  // canonicalized to the matching candidate
    std::string target_category;
    std::string instruction;
};

// Strict parse of the replacement reply: one JSON object with exactly the
// string keys selected/target/instruction (markdown fences tolerated).
// selected must match a candidate (case-insensitively), target must
// differ from selected, instruction must be non-empty.
ReplaceDecision parse_replace_reply(const std::string& reply,
                                    const std::vector<std::string>& categories);

// Seed derivation for per-op, per-index chat calls.
uint64_t derive_seed(uint64_t base, const std::string& tag);

}  // namespace rf
