// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded mock backends. Every reply is a pure function of the request
// (plus, for images, the referenced pixel content), so repeated runs and
// resumed runs produce identical bytes. The chat mock recognizes the
// structural markers of the shipped prompt templates; custom templates
// that drop those markers get a fixed filler reply.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "backends.hpp"
#include "imaging.hpp"
#include "json.hpp"

namespace rf {

namespace fs = std::filesystem;

namespace {

// --- prompt parsing helpers (shared with nothing else; the markers are a
// contract between the shipped templates and this mock) ---------------------

constexpr const char* kReplaceMarker = "Candidate categories:";
constexpr const char* kSelectMarker = "Reply with the number";
constexpr const char* kGenMarker = "Original edit request:";

std::string line_after(const std::string& text, const std::string& prefix) {
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.rfind(prefix, 0) == 0) return trim(line.substr(prefix.size()));
    }
    return {};
}

// Lines shaped like "3. some text" or "3) some text".
std::vector<std::string> numbered_items(const std::string& text) {
    std::vector<std::string> items;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        size_t i = 0;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == 0 || i >= line.size()) continue;
        if (line[i] != '.' && line[i] != ')') continue;
        std::string rest = trim(line.substr(i + 1));
        if (!rest.empty()) items.push_back(rest);
    }
    return items;
}

const std::vector<std::string>& rewrite_patterns() {
    static const std::vector<std::string> kPatterns = {
        "See that the picture ends up as if one had asked: %s",
        "I will not spell it out, but the result should match this request: %s",
        "Let the image drift toward whatever '%s' would produce.",
        "Steer the scene so the effect of '%s' comes through on its own.",
        "Suppose a visitor wished '%s'; grant the wish without announcing it.",
        "The outcome should feel like '%s' happened of its own accord.",
        "Arrange things so '%s' seems to have already taken place.",
        "Nudge the picture until the spirit of '%s' is unmistakable.",
    };
    return kPatterns;
}

const std::vector<std::string>& target_nouns() {
    static const std::vector<std::string> kNouns = {
        "bee",      "lantern",   "pumpkin",  "kite",      "violin",    "rooster",
        "cactus",   "teapot",    "canoe",    "falcon",    "snowman",   "windmill",
        "tractor",  "mailbox",   "hedgehog", "anchor",    "accordion", "lighthouse",
        "scarecrow", "dragonfly", "topiary",  "gramophone", "sundial",  "beagle",
    };
    return kNouns;
}

const std::vector<std::string>& replace_phrasings() {
    static const std::vector<std::string> kPhrasings = {
        "The %s has had its turn; let whatever belongs there next take the spot.",
        "Retire the %s and fill that space with its obvious stand-in.",
        "Where the %s sits now, I want its natural successor instead.",
        "Ease the %s out of the frame and let the replacement change the story.",
    };
    return kPhrasings;
}

std::string format_one(const std::string& pattern, const std::string& value) {
    size_t pos = pattern.find("%s");
    if (pos == std::string::npos) return pattern;
    return pattern.substr(0, pos) + value + pattern.substr(pos + 2);
}

// --- fixtures ---------------------------------------------------------------

struct MockFixtures {
    std::map<std::string, std::string> captions;                       // content_hash -> caption
    std::map<std::string, std::map<std::string, BoundingBox>> boxes;   // content_hash -> category -> box
};

MockFixtures load_fixtures(const fs::path& path) {
    MockFixtures fx;
    if (path.empty()) return fx;
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw_error(ErrorKind::Parse, "mock fixtures " + path.string() + ": " + e.what());
    }
    if (doc.contains("captions")) {
        for (const auto& [hash, caption] : doc.at("captions").items()) {
            fx.captions[hash] = caption.get<std::string>();
        }
    }
    if (doc.contains("grounding")) {
        for (const auto& [hash, per_category] : doc.at("grounding").items()) {
            for (const auto& [category, arr] : per_category.items()) {
                if (!arr.is_array() || arr.size() != 4) {
                    throw_error(ErrorKind::Parse, "mock fixtures " + path.string() +
                                                      ": grounding box for '" + category +
                                                      "' must be [x_min, y_min, x_max, y_max]");
                }
                BoundingBox box{arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(),
                                arr[3].get<int>()};
                fx.boxes[hash][category] = box;
            }
        }
    }
    return fx;
}

// --- the mocks --------------------------------------------------------------

class MockChat final : public ChatBackend {
public:
    std::string chat(const ChatRequest& request) override {
        if (auto err = request.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
        calls.fetch_add(1);
        const std::string& user = request.user_text;
        if (user.find(kReplaceMarker) != std::string::npos) return replace_reply(user);
        if (user.find(kSelectMarker) != std::string::npos) return select_reply(user);
        if (user.find(kGenMarker) != std::string::npos) return gen_reply(user, request.seed);
        return "I cannot infer a structured reply for this prompt.";
    }

    std::string version() const override { return "mock-chat/1"; }

    std::atomic<int64_t> calls{0};

private:
    static std::string gen_reply(const std::string& user, uint64_t seed) {
        std::string request = line_after(user, kGenMarker);
        if (request.empty()) request = "change the scene";
        const auto& patterns = rewrite_patterns();
        size_t index = static_cast<size_t>(Rng(seed ^ fnv1a64(request)).next_below(patterns.size()));
        return format_one(patterns[index], request);
    }

    static std::string select_reply(const std::string& user) {
        auto items = numbered_items(user);
        if (items.empty()) {
            throw_error(ErrorKind::Invalid, "mock select prompt has no numbered rewrites");
        }
        size_t best = 0;
        uint64_t best_hash = 0;
        for (size_t i = 0; i < items.size(); ++i) {
            uint64_t h = fnv1a64(items[i] + "|select");
            if (i == 0 || h > best_hash) {
                best = i;
                best_hash = h;
            }
        }
        return std::to_string(best + 1);
    }

    static std::string replace_reply(const std::string& user) {
        auto categories = numbered_items(user);
        if (categories.empty()) {
            throw_error(ErrorKind::Invalid, "mock replace prompt has no candidate categories");
        }
        std::string caption = line_after(user, "Caption:");
        uint64_t h = fnv1a64(caption + "|" + join(categories, ","));
        const std::string& selected = categories[h % categories.size()];
        const auto& nouns = target_nouns();
        size_t t = (h >> 8) % nouns.size();
        while (to_lower(nouns[t]) == to_lower(selected)) t = (t + 1) % nouns.size();
        const auto& phrasings = replace_phrasings();
        std::string instruction = format_one(phrasings[(h >> 16) % phrasings.size()], selected);
        nlohmann::ordered_json reply;
        reply["selected"] = selected;
        reply["target"] = nouns[t];
        reply["instruction"] = instruction;
        return reply.dump();
    }
};

class MockCaption final : public CaptionBackend {
public:
    explicit MockCaption(MockFixtures fixtures) : fixtures_(std::move(fixtures)) {}

    CaptionResult caption(const ImageRef& image) override {
        if (image.content_hash.empty()) {
            throw_error(ErrorKind::Invalid, "caption needs an ImageRef with a content hash");
        }
        calls.fetch_add(1);
        auto it = fixtures_.captions.find(image.content_hash);
        if (it != fixtures_.captions.end()) return {it->second, false};
        return {"an image", true};
    }

    std::string version() const override { return "mock-caption/1"; }

    std::atomic<int64_t> calls{0};

private:
    MockFixtures fixtures_;
};

class MockGrounding final : public GroundingBackend {
public:
    explicit MockGrounding(MockFixtures fixtures) : fixtures_(std::move(fixtures)) {}

    std::vector<Detection> ground(const ImageRef& image, const std::string& category,
                                  std::vector<std::string>* warnings) override {
        if (image.content_hash.empty() || image.width < 1 || image.height < 1) {
            throw_error(ErrorKind::Invalid, "grounding needs a resolved ImageRef");
        }
        if (trim(category).empty()) {
            throw_error(ErrorKind::Invalid, "grounding needs a non-empty category");
        }
        calls.fetch_add(1);
        std::vector<Detection> dets;
        auto per_image = fixtures_.boxes.find(image.content_hash);
        if (per_image != fixtures_.boxes.end()) {
            auto it = per_image->second.find(category);
            if (it != per_image->second.end()) {
                dets.push_back({category, it->second, 0.9});
            }
            // Image pinned in fixtures, category absent: a genuine miss.
        } else {
            dets.push_back(derived_box(image, category));
        }
        return clamp_detections(std::move(dets), image.width, image.height, warnings);
    }

    std::string version() const override { return "mock-grounding/1"; }

    std::atomic<int64_t> calls{0};

private:
    static Detection derived_box(const ImageRef& image, const std::string& category) {
        Rng rng(fnv1a64(image.content_hash + "|" + to_lower(category)));
        double fw = 0.35 + 0.30 * rng.next_double();
        double fh = 0.35 + 0.30 * rng.next_double();
        double fx = (1.0 - fw) * rng.next_double();
        double fy = (1.0 - fh) * rng.next_double();
        double score = 0.55 + 0.40 * rng.next_double();
        BoundingBox box;
        box.x_min = static_cast<int>(std::lround(fx * image.width));
        box.y_min = static_cast<int>(std::lround(fy * image.height));
        box.x_max = static_cast<int>(std::lround((fx + fw) * image.width));
        box.y_max = static_cast<int>(std::lround((fy + fh) * image.height));
        box.x_max = std::max(box.x_max, box.x_min + 1);
        box.y_max = std::max(box.y_max, box.y_min + 1);
        return {category, box, score};
    }

    MockFixtures fixtures_;
};

class MockInpaint final : public InpaintBackend {
public:
    MockInpaint(fs::path images_out, long long min_box_area)
        : images_out_(std::move(images_out)), min_box_area_(min_box_area) {
        fs::create_directories(images_out_);
    }

    ImageRef inpaint_replace(const ImageRef& image, const std::string& selected,
                             const BoundingBox& box, const std::string& target) override {
        RgbImage pixels = decode_image(image.path);
        if (auto err = box.validate(pixels.width, pixels.height); !err.empty()) {
            throw_error(ErrorKind::Invalid, "inpaint box: " + err);
        }
        if (box.area() < min_box_area_) {
            throw_error(ErrorKind::Invalid,
                        "inpaint box area " + std::to_string(box.area()) +
                            " is below the minimum " + std::to_string(min_box_area_));
        }
        if (trim(target).empty()) {
            throw_error(ErrorKind::Invalid, "inpaint needs a non-empty target category");
        }
        calls.fetch_add(1);

        Rng rng(fnv1a64("inpaint|" + to_lower(target)));
        uint8_t base[3] = {static_cast<uint8_t>(rng.next_below(256)),
                           static_cast<uint8_t>(rng.next_below(256)),
                           static_cast<uint8_t>(rng.next_below(256))};
        for (int y = box.y_min; y < box.y_max; ++y) {
            for (int x = box.x_min; x < box.x_max; ++x) {
                int texture = (x * 7 + y * 13) % 23 - 11;
                for (int c = 0; c < 3; ++c) {
                    int v = base[c] + texture;
                    pixels.pixels[pixels.index(x, y, c)] =
                        static_cast<uint8_t>(std::clamp(v, 0, 255));
                }
            }
        }

        char coords[80];
        std::snprintf(coords, sizeof(coords), "%d,%d,%d,%d", box.x_min, box.y_min, box.x_max,
                      box.y_max);
        std::string stem = "inp_" + sha256_hex(image.content_hash + "|" + coords + "|" + selected +
                                               "|" + target)
                                        .substr(0, 16);
        fs::path out = images_out_ / (stem + ".png");
        encode_png(pixels, out);
        return make_image_ref(out, out.string());
    }

    std::string version() const override { return "mock-inpaint/1"; }

    std::atomic<int64_t> calls{0};

private:
    fs::path images_out_;
    long long min_box_area_;
};

class MockEdit final : public ConditionedEditBackend {
public:
    explicit MockEdit(fs::path images_out) : images_out_(std::move(images_out)) {
        fs::create_directories(images_out_);
    }

    ImageRef conditioned_edit(const ImageRef& image, const std::string& instruction) override {
        if (trim(instruction).empty()) {
            throw_error(ErrorKind::Invalid, "conditioned edit needs a non-empty instruction");
        }
        RgbImage pixels = decode_image(image.path);
        calls.fetch_add(1);

        Rng rng(fnv1a64("edit|" + instruction));
        uint8_t lut[3][256];
        for (int c = 0; c < 3; ++c) {
            double gain = 0.55 + 0.90 * rng.next_double();
            double bias = -48.0 + 96.0 * rng.next_double();
            for (int v = 0; v < 256; ++v) {
                lut[c][v] = static_cast<uint8_t>(
                    std::clamp<long>(std::lround(v * gain + bias), 0, 255));
            }
        }
        for (size_t i = 0; i < pixels.pixels.size(); ++i) {
            pixels.pixels[i] = lut[i % 3][pixels.pixels[i]];
        }

        std::string stem =
            "edit_" + sha256_hex(image.content_hash + "|" + instruction).substr(0, 16);
        fs::path out = images_out_ / (stem + ".png");
        encode_png(pixels, out);
        return make_image_ref(out, out.string());
    }

    std::string version() const override { return "mock-edit/1"; }

    std::atomic<int64_t> calls{0};

private:
    fs::path images_out_;
};

class MockEmbed final : public EmbedBackend {
public:
    explicit MockEmbed(std::string family) : family_(std::move(family)) {}

    std::vector<double> embed_image(const ImageRef& image) override {
        if (image.content_hash.empty()) {
            throw_error(ErrorKind::Invalid, "embedding needs an ImageRef with a content hash");
        }
        return vector_for(family_ + "|img|" + image.content_hash);
    }

    std::vector<double> embed_text(const std::string& text) override {
        if (trim(text).empty()) {
            throw_error(ErrorKind::Invalid, "text embedding needs non-empty text");
        }
        return vector_for(family_ + "|txt|" + text);
    }

    std::string version() const override { return "mock-embed-" + family_ + "/1"; }

private:
    static std::vector<double> vector_for(const std::string& key) {
        Rng rng(fnv1a64(key));
        std::vector<double> v(64);
        for (double& x : v) x = 2.0 * rng.next_double() - 1.0;
        return v;
    }

    std::string family_;
};

}  // namespace

BackendSuite make_mock_suite(const RunConfig& config, const fs::path& images_out) {
    MockFixtures fixtures = load_fixtures(config.get("mock_fixtures"));
    BackendSuite suite;
    suite.llm = std::make_shared<MockChat>();
    suite.captioner = std::make_shared<MockCaption>(fixtures);
    suite.extractor = make_builtin_entity_extractor();
    suite.detector = std::make_shared<MockGrounding>(fixtures);
    suite.inpainter = std::make_shared<MockInpaint>(images_out, config.get_int("min_box_area", 1024));
    suite.editor = std::make_shared<MockEdit>(images_out);
    return suite;
}

EmbedderPair make_mock_embedders(const RunConfig&) {
    return {std::make_shared<MockEmbed>("clip"), std::make_shared<MockEmbed>("dino")};
}

MockCounters mock_counters(const BackendSuite& suite) {
    MockCounters c;
    if (auto* p = dynamic_cast<MockChat*>(suite.llm.get())) c.chat = p->calls.load();
    if (auto* p = dynamic_cast<MockCaption*>(suite.captioner.get())) c.caption = p->calls.load();
    if (auto* p = dynamic_cast<MockGrounding*>(suite.detector.get())) c.ground = p->calls.load();
    if (auto* p = dynamic_cast<MockInpaint*>(suite.inpainter.get())) c.inpaint = p->calls.load();
    if (auto* p = dynamic_cast<MockEdit*>(suite.editor.get())) c.edit = p->calls.load();
    return c;
}

}  // namespace rf
