// SPDX-License-Identifier: Apache-2.0
#include "lvd/backend.hpp"

#include "lvd/cache.hpp"
#include "lvd/digest.hpp"
#include "lvd/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <thread>

namespace lvd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ModelRequest
// ---------------------------------------------------------------------------

bool ModelRequest::has_images() const {
    for (const auto& message : messages)
        for (const auto& part : message.parts)
            if (part.image) return true;
    return false;
}

std::string ModelRequest::content_text() const {
    std::string out;
    for (const auto& message : messages) {
        for (const auto& part : message.parts) {
            if (part.image) continue;
            if (!out.empty()) out += '\n';
            out += part.text;
        }
    }
    return out;
}

std::string ModelRequest::cache_key(const std::string& model_id) const {
    // full request content, no tag: identical prompts collide on purpose,
    // prompt changes invalidate naturally
    std::string canon = "model\x1f" + model_id;
    for (const auto& message : messages) {
        canon += "\x1emsg\x1f";
        canon += std::to_string(static_cast<int>(message.role));
        for (const auto& part : message.parts) {
            if (part.image) {
                canon += "\x1fimg\x1f" + part.image->media_type + "\x1f";
                canon += sha256_hex(part.image->bytes);
            } else {
                canon += "\x1ftxt\x1f" + part.text;
            }
        }
    }
    return sha256_hex(canon);
}

// ---------------------------------------------------------------------------
// ConcurrencyLimiter
// ---------------------------------------------------------------------------

ConcurrencyLimiter::ConcurrencyLimiter(int max_in_flight)
    : limit_(std::max(1, max_in_flight)) {}

void ConcurrencyLimiter::acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return in_flight_ < limit_; });
    ++in_flight_;
}

void ConcurrencyLimiter::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    cv_.notify_one();
}

void ConcurrencyLimiter::set_limit(int max_in_flight) {
    {
        std::lock_guard lock(mutex_);
        limit_ = std::max(1, max_in_flight);
    }
    cv_.notify_all();
}

std::shared_ptr<ConcurrencyLimiter> ConcurrencyLimiter::global() {
    static auto instance = std::make_shared<ConcurrencyLimiter>(4);
    return instance;
}

// ---------------------------------------------------------------------------
// ModelClient: capability check + retry policy
// ---------------------------------------------------------------------------

ModelReply ModelClient::complete(const ModelRequest& request) {
    if (request.has_images() && !profile_.accepts_images)
        throw CapabilityError("image payload sent to text-only model \"" + profile_.model_id +
                              "\"");
    const int attempts = std::max(0, profile_.max_retries) + 1;
    for (int attempt = 0;; ++attempt) {
        try {
            return do_complete(request);
        } catch (const TransportError&) {
            if (attempt + 1 >= attempts) throw;
            const long delay_ms = std::min(250L << attempt, 4000L);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
        }
        // ProtocolError / CapabilityError propagate: not transient
    }
}

// ---------------------------------------------------------------------------
// HttpBackend
// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
    std::string scheme_host_port; // e.g. "https://api.example.com"
    std::string path;             // e.g. "/v1/chat/completions"
};

ParsedUrl parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("endpoint URL must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

json request_to_chat_json(const ModelRequest& request, const BackendProfile& profile) {
    json messages = json::array();
    for (const auto& message : request.messages) {
        const char* role = message.role == Message::Role::System   ? "system"
                           : message.role == Message::Role::User   ? "user"
                                                                   : "assistant";
        bool any_image = std::any_of(message.parts.begin(), message.parts.end(),
                                     [](const Message::Part& p) { return p.image.has_value(); });
        if (!any_image) {
            std::string text;
            for (const auto& part : message.parts) {
                if (!text.empty()) text += '\n';
                text += part.text;
            }
            messages.push_back({{"role", role}, {"content", text}});
            continue;
        }
        json content = json::array();
        for (const auto& part : message.parts) {
            if (part.image) {
                const std::string url = "data:" + part.image->media_type + ";base64," +
                                        base64_encode(part.image->bytes);
                content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
            } else {
                content.push_back({{"type", "text"}, {"text", part.text}});
            }
        }
        messages.push_back({{"role", role}, {"content", std::move(content)}});
    }
    return json{{"model", profile.model_id},
                {"temperature", profile.temperature},
                {"max_tokens", profile.max_tokens},
                {"messages", std::move(messages)}};
}

} // namespace

HttpBackend::HttpBackend(BackendProfile profile, std::shared_ptr<ConcurrencyLimiter> limiter)
    : ModelClient(std::move(profile)), limiter_(std::move(limiter)) {
    if (this->profile().endpoint.empty())
        throw ConfigError("backend \"" + this->profile().model_id + "\" has no endpoint");
}

ModelReply HttpBackend::do_complete(const ModelRequest& request) {
    const BackendProfile& p = profile();
    const ParsedUrl url = parse_url(p.endpoint);
    const json body = request_to_chat_json(request, p);

    httplib::Client client(url.scheme_host_port);
    const auto timeout = std::chrono::duration<double>(p.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::milliseconds>(timeout));

    httplib::Headers headers;
    if (!p.api_key_env.empty()) {
        const char* key = std::getenv(p.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("credential environment variable " + p.api_key_env + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    const auto started = std::chrono::steady_clock::now();
    httplib::Result result = [&] {
        ConcurrencyLimiter::Guard guard(*limiter_);
        return client.Post(url.path, headers, body.dump(), "application/json");
    }();
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

    if (!result)
        throw TransportError("request to " + p.endpoint +
                             " failed: " + httplib::to_string(result.error()));
    if (result->status >= 500 || result->status == 429)
        throw TransportError("endpoint " + p.endpoint + " returned status " +
                             std::to_string(result->status));
    if (result->status < 200 || result->status >= 300)
        throw ProtocolError("endpoint " + p.endpoint + " returned status " +
                            std::to_string(result->status) + ": " +
                            result->body.substr(0, 200));

    try {
        json reply = json::parse(result->body);
        ModelReply out;
        out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        out.latency_ms = elapsed;
        if (reply.contains("usage")) {
            TokenUsage usage;
            usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0L);
            usage.completion_tokens = reply["usage"].value("completion_tokens", 0L);
            out.usage = usage;
        }
        return out;
    } catch (const json::exception& e) {
        throw ProtocolError("malformed response from " + p.endpoint + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Mocks
// ---------------------------------------------------------------------------

BackendProfile ScriptedMockBackend::mock_profile() {
    BackendProfile p;
    p.model_id = "scripted-mock";
    p.accepts_images = true;
    p.max_retries = 0;
    return p;
}

ScriptedMockBackend::ScriptedMockBackend(MockScript script, BackendProfile profile)
    : ModelClient(std::move(profile)), script_(std::move(script)) {}

ModelReply ScriptedMockBackend::do_complete(const ModelRequest& request) {
    {
        std::lock_guard lock(mutex_);
        call_tags_.push_back(request.tag);
    }
    ModelReply reply;
    auto it = script_.replies.find(request.tag);
    reply.text = it != script_.replies.end() ? it->second : script_.default_reply;
    return reply;
}

long ScriptedMockBackend::call_count() const {
    std::lock_guard lock(mutex_);
    return static_cast<long>(call_tags_.size());
}

std::vector<std::string> ScriptedMockBackend::call_tags() const {
    std::lock_guard lock(mutex_);
    return call_tags_;
}

long ScriptedMockBackend::calls_with_tag_prefix(const std::string& prefix) const {
    std::lock_guard lock(mutex_);
    return static_cast<long>(
        std::count_if(call_tags_.begin(), call_tags_.end(), [&](const std::string& tag) {
            return tag.rfind(prefix, 0) == 0;
        }));
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double unit_interval(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

} // namespace

StatisticalMockBackend::StatisticalMockBackend(StatisticalMockParams params,
                                               std::map<std::string, int> correct_idx_by_qid,
                                               BackendProfile profile)
    : ModelClient(std::move(profile)),
      params_(params),
      correct_idx_by_qid_(std::move(correct_idx_by_qid)) {}

ModelReply StatisticalMockBackend::do_complete(const ModelRequest& request) {
    // tag is "<qid>#<attempt>"; non-QA calls get a generic description
    const auto hash = splitmix64(params_.seed ^ fnv1a(request.tag));
    const std::string qid = request.tag.substr(0, request.tag.find('#'));

    ModelReply reply;
    auto it = correct_idx_by_qid_.find(qid);
    if (it == correct_idx_by_qid_.end()) {
        reply.text = "a generic description of the requested content";
        return reply;
    }

    const double roll_unanswerable = unit_interval(splitmix64(hash ^ 1));
    if (roll_unanswerable < params_.p_unanswerable) {
        const auto category = kAdditionalInfoSet[hash % kAdditionalInfoSet.size()];
        const int start = static_cast<int>(hash % 30);
        const int end = start + static_cast<int>((hash >> 8) % 20);
        reply.text = "DECISION: unanswerable\nNEEDED: " + std::string(category_name(category)) +
                     "\nSEGMENT: " + std::to_string(start) + " " + std::to_string(end);
        return reply;
    }

    const double roll_correct = unit_interval(splitmix64(hash ^ 2));
    int choice = it->second;
    if (roll_correct >= params_.p_correct)
        choice = (it->second + 1 + static_cast<int>(hash % 3)) % 4;
    reply.text = std::string("DECISION: answer\nCHOICE: ") +
                 static_cast<char>('A' + choice) +
                 "\nRATIONALE_CATEGORY: contents of conversation\nREASON: statistical mock";
    return reply;
}

// ---------------------------------------------------------------------------
// CachedBackend
// ---------------------------------------------------------------------------

CachedBackend::CachedBackend(std::shared_ptr<ModelClient> inner,
                             std::shared_ptr<ResponseCache> cache)
    : ModelClient([&] {
          BackendProfile p = inner->profile();
          p.max_retries = 0; // the inner client owns the retry policy
          return p;
      }()),
      inner_(std::move(inner)),
      cache_(std::move(cache)) {}

ModelReply CachedBackend::do_complete(const ModelRequest& request) {
    const std::string key = request.cache_key(profile().model_id);
    if (auto hit = cache_->lookup(key)) return *hit;
    ModelReply reply = inner_->complete(request);
    cache_->store(key, reply);
    return reply;
}

// ---------------------------------------------------------------------------
// Capability wrappers
// ---------------------------------------------------------------------------

std::vector<std::string> caption_frames(ModelClient& captioner, const std::string& caption_prompt,
                                        const std::vector<ImagePayload>& frames,
                                        const std::vector<std::string>& tags) {
    if (!captioner.profile().accepts_images)
        throw CapabilityError("caption backend \"" + captioner.profile().model_id +
                              "\" does not accept images");
    std::vector<std::string> captions;
    captions.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        ModelRequest request;
        request.messages.push_back(
            {Message::Role::User, {{caption_prompt, std::nullopt}, {"", frames[i]}}});
        if (i < tags.size()) request.tag = tags[i];
        captions.push_back(captioner.complete(request).text);
    }
    return captions;
}

std::string vqa_describe(ModelClient& vqa, const PromptRenderer& renderer,
                         const ImagePayload& frame, InfoCategory category,
                         const std::string& tag) {
    const std::string prompt = renderer.render_vqa_prompt(category); // rejects non-visual
    if (!vqa.profile().accepts_images)
        throw CapabilityError("VQA backend \"" + vqa.profile().model_id +
                              "\" does not accept images");
    ModelRequest request;
    request.messages.push_back({Message::Role::User, {{prompt, std::nullopt}, {"", frame}}});
    request.tag = tag;
    const ModelReply reply = vqa.complete(request);
    const bool all_space = std::all_of(reply.text.begin(), reply.text.end(), [](unsigned char c) {
        return std::isspace(c) != 0;
    });
    if (reply.text.empty() || all_space)
        throw EmptyReply("VQA model returned an empty description");
    return reply.text;
}

} // namespace lvd
