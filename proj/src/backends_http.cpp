// Copyright (C) 2026 ReasonForge Authors
// SPDX-License-Identifier: Apache-2.0

// Remote backends speaking JSON over HTTP, with per-service rate limits,
// bounded concurrency, exponential-backoff retries, and a shared response
// cache keyed by semantic request content (content hashes, not payload
// bytes, so cache entries survive path changes).

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <functional>
#include <mutex>
#include <random>
#include <thread>

#include "backends.hpp"
#include "imaging.hpp"
#include "json.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

namespace rf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Simple token bucket; rate <= 0 means unlimited.
class TokenBucket {
public:
    explicit TokenBucket(double rate_per_sec)
        : rate_(rate_per_sec), tokens_(rate_per_sec > 0 ? rate_per_sec : 0),
          last_(std::chrono::steady_clock::now()) {}

    void acquire() {
        if (rate_ <= 0) return;
        std::unique_lock<std::mutex> lock(mutex_);
        for (;;) {
            auto now = std::chrono::steady_clock::now();
            double elapsed = std::chrono::duration<double>(now - last_).count();
            last_ = now;
            tokens_ = std::min(rate_, tokens_ + elapsed * rate_);
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            double wait_s = (1.0 - tokens_) / rate_;
            lock.unlock();
            std::this_thread::sleep_for(std::chrono::duration<double>(wait_s));
            lock.lock();
        }
    }

private:
    double rate_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
    std::mutex mutex_;
};

class Slots {
public:
    explicit Slots(int count) : available_(count) {}

    void acquire() {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait(lock, [&] { return available_ > 0; });
        --available_;
    }
    void release() {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            ++available_;
        }
        cv_.notify_one();
    }

private:
    int available_;
    std::mutex mutex_;
    std::condition_variable cv_;
};

struct SlotGuard {
    explicit SlotGuard(Slots& s) : slots(s) { slots.acquire(); }
    ~SlotGuard() { slots.release(); }
    Slots& slots;
};

// One remote service: base URL, auth, limits, retry policy.
class RestClient {
public:
    RestClient(std::string service, const RunConfig& config)
        : service_(std::move(service)),
          url_(config.get(service_ + "_url")),
          key_(config.get(service_ + "_key")),
          max_attempts_(static_cast<int>(config.get_int("retry_budget", 5))),
          base_ms_(static_cast<int>(config.get_int("retry_base_ms", 250))),
          timeout_ms_(static_cast<int>(config.get_int(service_ + "_timeout_ms", 30000))),
          bucket_(config.get_double(service_ + "_rps", 0.0)),
          slots_(static_cast<int>(config.get_int(service_ + "_concurrency", 4))) {}

    const std::string& url() const { return url_; }

    json post(const std::string& path, const json& body) {
        if (url_.empty()) {
            throw_error(ErrorKind::Config,
                        service_ + "_url is not configured (set REASONFORGE_" +
                            upper(service_) + "_URL or pass --set " + service_ + "_url=...)");
        }
        const std::string payload = body.dump();
        std::string last_failure;
        for (int attempt = 1; attempt <= max_attempts_; ++attempt) {
            if (attempt > 1) {
                retries_.fetch_add(1);
                backoff(attempt);
            }
            SlotGuard guard(slots_);
            bucket_.acquire();
            httplib::Client cli(url_);
            cli.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
            cli.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
            cli.set_write_timeout(std::chrono::milliseconds(timeout_ms_));
            if (!key_.empty()) cli.set_bearer_token_auth(key_);
            auto res = cli.Post(path, payload, "application/json");
            if (!res) {
                last_failure = "transport error: " + httplib::to_string(res.error());
                continue;  // retryable
            }
            if (res->status == 429 || res->status >= 500) {
                last_failure = "HTTP " + std::to_string(res->status);
                continue;  // retryable
            }
            if (res->status < 200 || res->status >= 300) {
                throw_error(ErrorKind::Backend, service_ + " " + path + ": HTTP " +
                                                    std::to_string(res->status) + ": " +
                                                    res->body.substr(0, 200));
            }
            try {
                return json::parse(res->body);
            } catch (const json::exception& e) {
                throw_error(ErrorKind::Parse,
                            service_ + " " + path + ": response is not JSON: " + e.what());
            }
        }
        throw_error(ErrorKind::Backend, service_ + " " + path + ": failed after " +
                                            std::to_string(max_attempts_) + " attempts (" +
                                            last_failure + ")");
    }

    int64_t retries() const { return retries_.load(); }

private:
    static std::string upper(const std::string& s) {
        std::string out = s;
        for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        return out;
    }

    void backoff(int attempt) {
        // Exponential with full jitter, capped at 10s.
        thread_local std::mt19937_64 jitter_rng(std::random_device{}());
        double exp_ms = base_ms_ * std::pow(2.0, attempt - 2);
        double jitter = std::uniform_real_distribution<double>(0.0, base_ms_)(jitter_rng);
        double delay = std::min(exp_ms + jitter, 10000.0);
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(delay));
    }

    std::string service_;
    std::string url_;
    std::string key_;
    int max_attempts_;
    int base_ms_;
    int timeout_ms_;
    TokenBucket bucket_;
    Slots slots_;
    std::atomic<int64_t> retries_{0};
};

std::string file_b64(const std::string& path) {
    std::string bytes = read_file(path);
    return base64_encode(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size()));
}

// Cache wrapper: returns the cached response body, or runs `fetch` and
// stores its result. Values are raw response JSON text.
json cached_post(const std::shared_ptr<ResponseCache>& cache, const std::string& backend,
                 const std::string& version, const std::string& canonical_request,
                 const std::function<json()>& fetch) {
    if (!cache) return fetch();
    const std::string key = ResponseCache::make_key(backend, version, canonical_request);
    if (auto hit = cache->get(key)) {
        try {
            return json::parse(*hit);
        } catch (const json::exception&) {
            // Corrupt entry: fall through and refetch.
        }
    }
    json fresh = fetch();
    cache->put(key, fresh.dump());
    return fresh;
}

class RemoteChat final : public ChatBackend {
public:
    RemoteChat(const RunConfig& config, std::shared_ptr<ResponseCache> cache)
        : client_("chat", config), cache_(std::move(cache)),
          model_(config.get("chat_model", "gpt-3.5-turbo")) {}

    std::string chat(const ChatRequest& request) override {
        if (auto err = request.validate(); !err.empty()) throw_error(ErrorKind::Invalid, err);
        json body = {
            {"model", model_},
            {"messages",
             json::array({{{"role", "system"}, {"content", request.system_text}},
                          {{"role", "user"}, {"content", request.user_text}}})},
            {"temperature", request.temperature},
            {"seed", request.seed},
        };
        json resp = cached_post(cache_, "chat", version(), body.dump(),
                                [&] { return client_.post("/v1/chat/completions", body); });
        std::string content;
        try {
            content = resp.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw_error(ErrorKind::Parse, std::string("chat: malformed completion: ") + e.what());
        }
        if (trim(content).empty()) {
            throw_error(ErrorKind::Backend, "chat: empty completion");
        }
        return content;
    }

    std::string version() const override { return "remote-chat/" + model_; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
    std::string model_;
};

class RemoteCaption final : public CaptionBackend {
public:
    RemoteCaption(const RunConfig& config, std::shared_ptr<ResponseCache> cache)
        : client_("caption", config), cache_(std::move(cache)) {}

    CaptionResult caption(const ImageRef& image) override {
        json resp = cached_post(cache_, "caption", version(), image.content_hash, [&] {
            json body = {{"image_b64", file_b64(image.path)}};
            return client_.post("/caption", body);
        });
        std::string text;
        try {
            text = resp.at("caption").get<std::string>();
        } catch (const json::exception& e) {
            throw_error(ErrorKind::Parse, std::string("caption: malformed response: ") + e.what());
        }
        if (trim(text).empty()) throw_error(ErrorKind::Backend, "caption: empty caption");
        return {text, false};
    }

    std::string version() const override { return "remote-caption/1"; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
};

class RemoteEntities final : public EntityBackend {
public:
    RemoteEntities(const RunConfig& config, std::shared_ptr<ResponseCache> cache)
        : client_("entities", config), cache_(std::move(cache)) {}

    std::vector<std::string> extract_entities(const std::string& caption) override {
        if (trim(caption).empty()) {
            throw_error(ErrorKind::Invalid, "entity extraction needs a non-empty caption");
        }
        json resp = cached_post(cache_, "entities", version(), caption, [&] {
            return client_.post("/entities", json{{"text", caption}});
        });
        std::vector<std::string> out;
        try {
            for (const auto& item : resp.at("entities")) {
                std::string entity = trim(item.get<std::string>());
                if (entity.empty()) continue;
                if (std::find(out.begin(), out.end(), entity) == out.end()) out.push_back(entity);
            }
        } catch (const json::exception& e) {
            throw_error(ErrorKind::Parse, std::string("entities: malformed response: ") + e.what());
        }
        return out;
    }

    std::string version() const override { return "remote-entities/1"; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
};

class RemoteGrounding final : public GroundingBackend {
public:
    RemoteGrounding(const RunConfig& config, std::shared_ptr<ResponseCache> cache)
        : client_("ground", config), cache_(std::move(cache)) {}

    std::vector<Detection> ground(const ImageRef& image, const std::string& category,
                                  std::vector<std::string>* warnings) override {
        if (trim(category).empty()) {
            throw_error(ErrorKind::Invalid, "grounding needs a non-empty category");
        }
        json resp = cached_post(cache_, "ground", version(),
                                image.content_hash + "|" + category, [&] {
                                    json body = {{"image_b64", file_b64(image.path)},
                                                 {"phrase", category}};
                                    return client_.post("/ground", body);
                                });
        std::vector<Detection> dets;
        try {
            for (const auto& d : resp.at("detections")) {
                const auto& b = d.at("box");
                if (!b.is_array() || b.size() != 4) {
                    throw_error(ErrorKind::Parse, "ground: box must be [x_min, y_min, x_max, y_max]");
                }
                Detection det;
                det.category = category;
                det.box.x_min = static_cast<int>(std::llround(b[0].get<double>()));
                det.box.y_min = static_cast<int>(std::llround(b[1].get<double>()));
                det.box.x_max = static_cast<int>(std::llround(b[2].get<double>()));
                det.box.y_max = static_cast<int>(std::llround(b[3].get<double>()));
                det.score = d.at("score").get<double>();
                dets.push_back(det);
            }
        } catch (const Error&) {
            throw;
        } catch (const json::exception& e) {
            throw_error(ErrorKind::Parse, std::string("ground: malformed response: ") + e.what());
        }
        return clamp_detections(std::move(dets), image.width, image.height, warnings);
    }

    std::string version() const override { return "remote-ground/1"; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
};

// Shared by inpaint and edit: pull image_b64 out of the response, decode,
// re-encode as canonical PNG under images_out with a deterministic name.
ImageRef store_image_response(const json& resp, const std::string& what, const fs::path& images_out,
                              const std::string& stem) {
    std::string b64;
    try {
        b64 = resp.at("image_b64").get<std::string>();
    } catch (const json::exception& e) {
        throw_error(ErrorKind::Parse, what + ": malformed response: " + e.what());
    }
    std::vector<uint8_t> bytes = base64_decode(b64);
    RgbImage img = decode_image_bytes(std::span<const uint8_t>(bytes.data(), bytes.size()));
    fs::path out = images_out / (stem + ".png");
    encode_png(img, out);
    return make_image_ref(out, out.string());
}

class RemoteInpaint final : public InpaintBackend {
public:
    RemoteInpaint(const RunConfig& config, std::shared_ptr<ResponseCache> cache,
                  fs::path images_out)
        : client_("inpaint", config), cache_(std::move(cache)),
          images_out_(std::move(images_out)),
          min_box_area_(config.get_int("min_box_area", 1024)) {
        fs::create_directories(images_out_);
    }

    ImageRef inpaint_replace(const ImageRef& image, const std::string& selected,
                             const BoundingBox& box, const std::string& target) override {
        if (auto err = box.validate(image.width, image.height); !err.empty()) {
            throw_error(ErrorKind::Invalid, "inpaint box: " + err);
        }
        if (box.area() < min_box_area_) {
            throw_error(ErrorKind::Invalid, "inpaint box area " + std::to_string(box.area()) +
                                                " is below the minimum " +
                                                std::to_string(min_box_area_));
        }
        char coords[80];
        std::snprintf(coords, sizeof(coords), "%d,%d,%d,%d", box.x_min, box.y_min, box.x_max,
                      box.y_max);
        std::string canonical =
            image.content_hash + "|" + coords + "|" + selected + "|" + target;
        json resp = cached_post(cache_, "inpaint", version(), canonical, [&] {
            json body = {{"image_b64", file_b64(image.path)},
                         {"box", {box.x_min, box.y_min, box.x_max, box.y_max}},
                         {"selected", selected},
                         {"target", target}};
            return client_.post("/inpaint", body);
        });
        std::string stem = "inp_" + sha256_hex(canonical).substr(0, 16);
        return store_image_response(resp, "inpaint", images_out_, stem);
    }

    std::string version() const override { return "remote-inpaint/1"; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
    fs::path images_out_;
    long long min_box_area_;
};

class RemoteEdit final : public ConditionedEditBackend {
public:
    RemoteEdit(const RunConfig& config, std::shared_ptr<ResponseCache> cache, fs::path images_out)
        : client_("edit", config), cache_(std::move(cache)), images_out_(std::move(images_out)) {
        fs::create_directories(images_out_);
    }

    ImageRef conditioned_edit(const ImageRef& image, const std::string& instruction) override {
        if (trim(instruction).empty()) {
            throw_error(ErrorKind::Invalid, "conditioned edit needs a non-empty instruction");
        }
        std::string canonical = image.content_hash + "|" + instruction;
        json resp = cached_post(cache_, "edit", version(), canonical, [&] {
            json body = {{"image_b64", file_b64(image.path)}, {"instruction", instruction}};
            return client_.post("/edit", body);
        });
        std::string stem = "edit_" + sha256_hex(canonical).substr(0, 16);
        return store_image_response(resp, "edit", images_out_, stem);
    }

    std::string version() const override { return "remote-edit/1"; }

private:
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
    fs::path images_out_;
};

class RemoteEmbed final : public EmbedBackend {
public:
    RemoteEmbed(const std::string& service, const RunConfig& config,
                std::shared_ptr<ResponseCache> cache)
        : service_(service), client_(service, config), cache_(std::move(cache)) {}

    std::vector<double> embed_image(const ImageRef& image) override {
        json resp = cached_post(cache_, service_, version(), "img|" + image.content_hash, [&] {
            return client_.post("/embed_image", json{{"image_b64", file_b64(image.path)}});
        });
        return parse_embedding(resp);
    }

    std::vector<double> embed_text(const std::string& text) override {
        if (trim(text).empty()) {
            throw_error(ErrorKind::Invalid, "text embedding needs non-empty text");
        }
        json resp = cached_post(cache_, service_, version(), "txt|" + text, [&] {
            return client_.post("/embed_text", json{{"text", text}});
        });
        return parse_embedding(resp);
    }

    std::string version() const override { return "remote-" + service_ + "/1"; }

private:
    std::vector<double> parse_embedding(const json& resp) const {
        std::vector<double> out;
        try {
            for (const auto& v : resp.at("embedding")) out.push_back(v.get<double>());
        } catch (const json::exception& e) {
            throw_error(ErrorKind::Parse, service_ + ": malformed embedding: " + e.what());
        }
        if (out.empty()) throw_error(ErrorKind::Backend, service_ + ": empty embedding");
        return out;
    }

    std::string service_;
    RestClient client_;
    std::shared_ptr<ResponseCache> cache_;
};

}  // namespace

BackendSuite make_remote_suite(const RunConfig& config, const fs::path& images_out,
                               std::shared_ptr<ResponseCache> cache) {
    BackendSuite suite;
    suite.llm = std::make_shared<RemoteChat>(config, cache);
    suite.captioner = std::make_shared<RemoteCaption>(config, cache);
    // NER runs in-process unless a remote service is configured.
    if (config.get("entities_url").empty()) {
        suite.extractor = make_builtin_entity_extractor();
    } else {
        suite.extractor = std::make_shared<RemoteEntities>(config, cache);
    }
    suite.detector = std::make_shared<RemoteGrounding>(config, cache);
    suite.inpainter = std::make_shared<RemoteInpaint>(config, cache, images_out);
    suite.editor = std::make_shared<RemoteEdit>(config, cache, images_out);
    return suite;
}

EmbedderPair make_remote_embedders(const RunConfig& config, std::shared_ptr<ResponseCache> cache) {
    return {std::make_shared<RemoteEmbed>("clip_embed", config, cache),
            std::make_shared<RemoteEmbed>("dino_embed", config, cache)};
}

}  // namespace rf
