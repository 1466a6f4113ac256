// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/categories.hpp"
#include "lvd/prompting.hpp"

#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace lvd {

class ResponseCache;

struct BackendProfile {
    std::string endpoint;
    std::string model_id;
    bool accepts_images = false;
    double temperature = 0.0;
    int max_tokens = 512;
    double timeout_s = 60.0;
    int max_retries = 2;
    std::string api_key_env; // name of the env var holding the credential
};

struct ImagePayload {
    std::string bytes;
    std::string media_type = "image/jpeg";
};

struct Message {
    enum class Role { System, User, Assistant };

    struct Part {
        std::string text;                  // used when image is absent
        std::optional<ImagePayload> image; // used when present
    };

    Role role = Role::User;
    std::vector<Part> parts;
};

struct ModelRequest {
    std::vector<Message> messages;
    // Routing hint for mock backends ("<qid>#<attempt>", ...). Not part of
    // the cache key: identical content must hit across questions and runs.
    std::string tag;

    bool has_images() const;
    std::string content_text() const; // text parts joined; what mocks see
    std::string cache_key(const std::string& model_id) const;
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct ModelReply {
    std::string text; // verbatim model output, untrimmed
    std::optional<TokenUsage> usage;
    long latency_ms = 0;
    bool from_cache = false;
};

/// Caps concurrent remote requests across all HTTP backends.
class ConcurrencyLimiter {
public:
    explicit ConcurrencyLimiter(int max_in_flight = 4);

    void acquire();
    void release();
    void set_limit(int max_in_flight);

    struct Guard {
        explicit Guard(ConcurrencyLimiter& l) : limiter(l) { limiter.acquire(); }
        ~Guard() { limiter.release(); }
        Guard(const Guard&) = delete;
        Guard& operator=(const Guard&) = delete;
        ConcurrencyLimiter& limiter;
    };

    static std::shared_ptr<ConcurrencyLimiter> global();

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int limit_;
    int in_flight_ = 0;
};

/// Uniform interface over model capabilities. complete() enforces the
/// capability contract and the retry policy; concrete backends implement
/// do_complete().
class ModelClient {
public:
    virtual ~ModelClient() = default;

    const BackendProfile& profile() const { return profile_; }

    /// Throws CapabilityError when images are sent to a text-only profile.
    /// Retries do_complete up to profile().max_retries times on
    /// TransportError with exponential backoff; ProtocolError and
    /// CapabilityError are never retried.
    ModelReply complete(const ModelRequest& request);

protected:
    explicit ModelClient(BackendProfile profile) : profile_(std::move(profile)) {}
    virtual ModelReply do_complete(const ModelRequest& request) = 0;

private:
    BackendProfile profile_;
};

/// Chat-completions client over HTTP(S): role-tagged message array, images
/// as base64 data parts. Credentials come from the env var named in the
/// profile.
class HttpBackend final : public ModelClient {
public:
    explicit HttpBackend(BackendProfile profile,
                         std::shared_ptr<ConcurrencyLimiter> limiter = ConcurrencyLimiter::global());

protected:
    ModelReply do_complete(const ModelRequest& request) override;

private:
    std::shared_ptr<ConcurrencyLimiter> limiter_;
};

/// Deterministic stand-in model keyed by request tag.
struct MockScript {
    std::map<std::string, std::string> replies; // tag ("qid#attempt") -> reply text
    std::string default_reply;
};

class ScriptedMockBackend final : public ModelClient {
public:
    explicit ScriptedMockBackend(MockScript script, BackendProfile profile = mock_profile());

    long call_count() const;
    std::vector<std::string> call_tags() const;
    long calls_with_tag_prefix(const std::string& prefix) const;

    static BackendProfile mock_profile();

protected:
    ModelReply do_complete(const ModelRequest& request) override;

private:
    MockScript script_;
    mutable std::mutex mutex_;
    std::vector<std::string> call_tags_;
};

/// Stress-test mock: answers correctly with probability p_correct, declares
/// unanswerable with probability p_unanswerable, seeded and keyed per
/// (qid, attempt) so results do not depend on call order.
struct StatisticalMockParams {
    double p_correct = 1.0;
    double p_unanswerable = 0.0;
    std::uint64_t seed = 0;
};

class StatisticalMockBackend final : public ModelClient {
public:
    StatisticalMockBackend(StatisticalMockParams params,
                           std::map<std::string, int> correct_idx_by_qid,
                           BackendProfile profile = ScriptedMockBackend::mock_profile());

protected:
    ModelReply do_complete(const ModelRequest& request) override;

private:
    StatisticalMockParams params_;
    std::map<std::string, int> correct_idx_by_qid_;
};

/// Consults a persistent ResponseCache before delegating to the wrapped
/// backend; stores fresh replies after.
class CachedBackend final : public ModelClient {
public:
    CachedBackend(std::shared_ptr<ModelClient> inner, std::shared_ptr<ResponseCache> cache);

protected:
    ModelReply do_complete(const ModelRequest& request) override;

private:
    std::shared_ptr<ModelClient> inner_;
    std::shared_ptr<ResponseCache> cache_;
};

/// One caption per frame, order preserved. tags, when given, must parallel
/// frames and are forwarded as request tags for mock routing.
std::vector<std::string> caption_frames(ModelClient& captioner, const std::string& caption_prompt,
                                        const std::vector<ImagePayload>& frames,
                                        const std::vector<std::string>& tags = {});

/// Describe one frame for a visual category. The prompt comes from the
/// renderer (which rejects non-visual categories before any call). Throws
/// EmptyReply when the model returns whitespace only.
std::string vqa_describe(ModelClient& vqa, const PromptRenderer& renderer,
                         const ImagePayload& frame, InfoCategory category,
                         const std::string& tag = {});

} // namespace lvd
