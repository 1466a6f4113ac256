// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/backend.hpp"
#include "lvd/dataset.hpp"
#include "lvd/prompting.hpp"
#include "lvd/reply_parser.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace lvd {

struct RunConfig {
    EvalMode mode = EvalMode::Loop;
    BackendProfile qa_backend;
    BackendProfile caption_backend;
    BackendProfile vqa_backend;
    bool use_captions = false;
    int frames_k = 10;
    int max_extra_attempts = 1;
    int concurrency = 4;
    bool cache_enabled = false;
    std::uint64_t seed = 0; // statistical mock only
};

struct BackendSet {
    std::shared_ptr<ModelClient> qa;
    std::shared_ptr<ModelClient> caption;
    std::shared_ptr<ModelClient> vqa;
};

struct RetrievalRecord {
    InfoCategory category = InfoCategory::SceneContext;
    std::pair<int, int> segment{0, 0};
    int frame_index = 0;
    std::string vqa_text;

    bool operator==(const RetrievalRecord&) const = default;
};

struct AttemptRecord {
    int attempt_number = 1;
    std::string prompt_digest;
    std::string raw_reply;
    ParsedReply parsed = MalformedDecision{};
    // present iff parsed is a visual Unanswerable and another attempt follows
    std::optional<RetrievalRecord> retrieval;
    std::optional<std::string> error; // backend failure detail

    bool operator==(const AttemptRecord&) const = default;
};

enum class FinalStatus { Correct, Wrong, Unanswerable, NoAnswer };

std::string_view final_status_name(FinalStatus s);
std::optional<FinalStatus> parse_final_status(std::string_view text);

struct QuestionResult {
    std::string qid;
    std::vector<AttemptRecord> attempts;
    FinalStatus final_status = FinalStatus::NoAnswer;
    std::optional<int> final_choice;

    bool operator==(const QuestionResult&) const = default;
};

/// Midpoint of an integer segment, rounded half-up.
int midpoint_time(std::pair<int, int> segment);

/// Frame index for a time in seconds: clamp(round(t * fps), 0, frame_count-1).
int frame_index_at(const VideoRecord& video, int t_seconds);

/// Execute the looped procedure for one question. Backend failures are
/// recorded on the attempt and finalized, never propagated.
QuestionResult run_question(const QARecord& qa, const Dataset& dataset, const RunConfig& config,
                            const BackendSet& backends, const PromptRenderer& renderer);

// JSON serialization of results (stable field order via nlohmann's sorted
// object keys; no timestamps, so reruns are byte-identical).
nlohmann::json question_result_to_json(const QuestionResult& result);
QuestionResult question_result_from_json(const nlohmann::json& j);

struct RunControl {
    const std::atomic<bool>* cancel = nullptr; // cooperative stop
    std::size_t limit = SIZE_MAX;              // max questions to process this invocation
};

struct RunSummary {
    long correct = 0;
    long wrong = 0;
    long unanswerable = 0;
    long no_answer = 0;
    bool complete = false;
    std::size_t question_count = 0; // dataset questions
    std::size_t processed = 0;      // results present (including resumed)
};

struct RunResult {
    std::string run_id;
    std::vector<QuestionResult> results; // sorted by qid
    RunSummary summary;
};

/// Metadata echoed into results/<run_id>/manifest.json. config_echo must be
/// everything needed to reproduce the run; its digest keys the run
/// directory and guards resume against config drift.
struct RunInfo {
    nlohmann::json config_echo;
    std::string config_digest;
    std::string run_id; // defaults to config_digest prefix when empty
};

/// Execute (or resume) a run over every question of the dataset split.
/// Results are persisted per question under <out_dir>/questions/<qid>.json
/// (atomic write-then-rename), output ordering is sorted by qid regardless
/// of completion order, and summary.json marks incomplete runs.
RunResult run_split(const Dataset& dataset, const RunConfig& config, const BackendSet& backends,
                    const PromptRenderer& renderer, const std::filesystem::path& out_dir,
                    const RunInfo& info, const RunControl& control = {});

/// Load a persisted run directory (manifest + summary + question results).
struct PersistedRun {
    nlohmann::json manifest;
    nlohmann::json summary;
    std::vector<QuestionResult> results; // sorted by qid
    std::vector<std::string> missing_qids;
    bool complete = false;
};
PersistedRun load_run(const std::filesystem::path& run_dir);

} // namespace lvd
