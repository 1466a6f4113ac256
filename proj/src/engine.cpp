// SPDX-License-Identifier: Apache-2.0
#include "lvd/engine.hpp"

#include "lvd/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <unistd.h>

namespace lvd {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view final_status_name(FinalStatus s) {
    switch (s) {
        case FinalStatus::Correct: return "correct";
        case FinalStatus::Wrong: return "wrong";
        case FinalStatus::Unanswerable: return "unanswerable";
        case FinalStatus::NoAnswer: return "no_answer";
    }
    return "?";
}

std::optional<FinalStatus> parse_final_status(std::string_view text) {
    if (text == "correct") return FinalStatus::Correct;
    if (text == "wrong") return FinalStatus::Wrong;
    if (text == "unanswerable") return FinalStatus::Unanswerable;
    if (text == "no_answer") return FinalStatus::NoAnswer;
    return std::nullopt;
}

int midpoint_time(std::pair<int, int> segment) {
    const auto [start, end] = segment;
    if (start < 0 || start > end)
        throw PreconditionViolation("midpoint_time requires 0 <= start <= end");
    return (start + end + 1) / 2; // round half-up for non-negative sums
}

int frame_index_at(const VideoRecord& video, int t_seconds) {
    if (t_seconds < 0) throw PreconditionViolation("frame_index_at requires t >= 0");
    const long idx = std::lround(static_cast<double>(t_seconds) * video.fps);
    return static_cast<int>(std::clamp<long>(idx, 0, video.frame_count - 1));
}

// ---------------------------------------------------------------------------
// run_question
// ---------------------------------------------------------------------------

namespace {

ImagePayload load_frame_payload(const VideoRecord& video, int index) {
    const fs::path path = frame_path(video, index);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("missing frame file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return {buf.str(), "image/jpeg"};
}

ModelRequest bundle_to_request(const PromptBundle& bundle, const Dataset& dataset) {
    ModelRequest request;
    if (!bundle.system_text.empty())
        request.messages.push_back(
            {Message::Role::System, {{bundle.system_text, std::nullopt}}});
    Message user{Message::Role::User, {}};
    for (const auto& part : bundle.parts) {
        if (part.kind == PromptBundle::Part::Kind::Text) {
            user.parts.push_back({part.text, std::nullopt});
        } else {
            const VideoRecord& video = dataset.videos.at(part.image.vid);
            user.parts.push_back({"", load_frame_payload(video, part.image.frame_index)});
        }
    }
    request.messages.push_back(std::move(user));
    return request;
}

void finalize_answer(QuestionResult& result, const QARecord& qa, const AnswerDecision& answer) {
    result.final_choice = answer.choice_idx;
    result.final_status =
        answer.choice_idx == qa.correct_idx ? FinalStatus::Correct : FinalStatus::Wrong;
}

} // namespace

QuestionResult run_question(const QARecord& qa, const Dataset& dataset, const RunConfig& config,
                            const BackendSet& backends, const PromptRenderer& renderer) {
    QuestionResult result;
    result.qid = qa.qid;

    const VideoRecord& video = dataset.videos.at(qa.vid);
    const Transcript& transcript = dataset.transcripts.at(qa.vid);
    const std::vector<int> frame_indices = select_frames(video.frame_count, config.frames_k);
    const bool image_mode = backends.qa->profile().accepts_images && !config.use_captions;

    AttemptInput input;
    input.qa = qa;
    input.transcript_text = render_transcript(transcript);

    if (image_mode) {
        std::vector<FrameRef> refs;
        refs.reserve(frame_indices.size());
        for (int idx : frame_indices) refs.push_back({qa.vid, idx});
        input.visual = std::move(refs);
    } else {
        try {
            std::vector<ImagePayload> frames;
            std::vector<std::string> tags;
            for (int idx : frame_indices) {
                frames.push_back(load_frame_payload(video, idx));
                tags.push_back(qa.vid + "#cap" + std::to_string(idx));
            }
            input.visual = caption_frames(*backends.caption, renderer.render_caption_prompt(),
                                          frames, tags);
        } catch (const Error& e) {
            AttemptRecord record;
            record.attempt_number = 1;
            record.parsed = MalformedDecision{"", std::string("backend failure: ") + e.what()};
            record.error = e.what();
            result.attempts.push_back(std::move(record));
            result.final_status = FinalStatus::NoAnswer;
            return result;
        }
    }

    std::set<InfoCategory> retrieved_categories;
    const int max_attempts = 1 + std::max(0, config.max_extra_attempts);

    for (int attempt = 1;; ++attempt) {
        const PromptBundle bundle = attempt == 1
                                        ? renderer.render_first_attempt(input, config.mode)
                                        : renderer.render_retry(input, config.mode);
        AttemptRecord record;
        record.attempt_number = attempt;
        record.prompt_digest = bundle.digest();

        ModelReply reply;
        try {
            ModelRequest request = bundle_to_request(bundle, dataset);
            request.tag = qa.qid + "#" + std::to_string(attempt);
            reply = backends.qa->complete(request);
        } catch (const Error& e) {
            record.parsed = MalformedDecision{"", std::string("backend failure: ") + e.what()};
            record.error = e.what();
            result.attempts.push_back(std::move(record));
            result.final_status = FinalStatus::NoAnswer;
            return result;
        }

        record.raw_reply = reply.text;
        record.parsed = parse_reply(reply.text, config.mode);

        if (const auto* answer = std::get_if<AnswerDecision>(&record.parsed)) {
            finalize_answer(result, qa, *answer);
            result.attempts.push_back(std::move(record));
            return result;
        }
        if (std::holds_alternative<MalformedDecision>(record.parsed)) {
            result.attempts.push_back(std::move(record));
            result.final_status = FinalStatus::NoAnswer;
            return result;
        }

        const auto& unanswerable = std::get<UnanswerableDecision>(record.parsed);
        const bool visual = is_visual(unanswerable.category);
        const bool repeat = retrieved_categories.count(unanswerable.category) > 0;
        const bool budget_left = config.mode == EvalMode::Loop && attempt < max_attempts;

        if (!visual || repeat || !budget_left) {
            result.attempts.push_back(std::move(record));
            result.final_status = FinalStatus::Unanswerable;
            return result;
        }

        // visual retrieval at the segment midpoint, then re-ask
        const int mid = midpoint_time(unanswerable.segment);
        const int frame_idx = frame_index_at(video, mid);
        std::string description;
        try {
            const ImagePayload frame = load_frame_payload(video, frame_idx);
            description = vqa_describe(*backends.vqa, renderer, frame, unanswerable.category,
                                       qa.qid + "#vqa" + std::to_string(attempt));
        } catch (const Error& e) {
            // the question already concluded unanswerable; keep that verdict
            record.error = e.what();
            result.attempts.push_back(std::move(record));
            result.final_status = FinalStatus::Unanswerable;
            return result;
        }
        record.retrieval =
            RetrievalRecord{unanswerable.category, unanswerable.segment, frame_idx, description};
        result.attempts.push_back(std::move(record));
        retrieved_categories.insert(unanswerable.category);
        input.extra_info.emplace_back(unanswerable.category, description);
    }
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

json parsed_reply_to_json(const ParsedReply& parsed) {
    if (const auto* a = std::get_if<AnswerDecision>(&parsed)) {
        json cats = json::array();
        for (InfoCategory c : a->rationale_categories)
            cats.push_back(std::string(category_id(c)));
        return json{{"kind", "answer"},
                    {"choice_idx", a->choice_idx},
                    {"rationale_text", a->rationale_text},
                    {"rationale_categories", std::move(cats)}};
    }
    if (const auto* u = std::get_if<UnanswerableDecision>(&parsed)) {
        return json{{"kind", "unanswerable"},
                    {"category", std::string(category_id(u->category))},
                    {"segment", json::array({u->segment.first, u->segment.second})}};
    }
    const auto& m = std::get<MalformedDecision>(parsed);
    return json{{"kind", "malformed"}, {"raw", m.raw}, {"reason", m.reason}};
}

ParsedReply parsed_reply_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "answer") {
        AnswerDecision a;
        a.choice_idx = j.at("choice_idx").get<int>();
        a.rationale_text = j.at("rationale_text").get<std::string>();
        for (const auto& c : j.at("rationale_categories"))
            a.rationale_categories.insert(parse_category_or_throw(c.get<std::string>()));
        return a;
    }
    if (kind == "unanswerable") {
        UnanswerableDecision u;
        u.category = parse_category_or_throw(j.at("category").get<std::string>());
        u.segment = {j.at("segment").at(0).get<int>(), j.at("segment").at(1).get<int>()};
        return u;
    }
    return MalformedDecision{j.at("raw").get<std::string>(), j.at("reason").get<std::string>()};
}

} // namespace

json question_result_to_json(const QuestionResult& result) {
    json attempts = json::array();
    for (const auto& attempt : result.attempts) {
        json a{{"attempt_number", attempt.attempt_number},
               {"prompt_digest", attempt.prompt_digest},
               {"raw_reply", attempt.raw_reply},
               {"parsed", parsed_reply_to_json(attempt.parsed)}};
        if (attempt.retrieval) {
            a["retrieval"] =
                json{{"category", std::string(category_id(attempt.retrieval->category))},
                     {"segment", json::array({attempt.retrieval->segment.first,
                                              attempt.retrieval->segment.second})},
                     {"frame_index", attempt.retrieval->frame_index},
                     {"vqa_text", attempt.retrieval->vqa_text}};
        }
        if (attempt.error) a["error"] = *attempt.error;
        attempts.push_back(std::move(a));
    }
    json j{{"qid", result.qid},
           {"attempts", std::move(attempts)},
           {"final_status", std::string(final_status_name(result.final_status))}};
    if (result.final_choice) j["final_choice"] = *result.final_choice;
    return j;
}

QuestionResult question_result_from_json(const json& j) {
    QuestionResult result;
    result.qid = j.at("qid").get<std::string>();
    for (const auto& a : j.at("attempts")) {
        AttemptRecord attempt;
        attempt.attempt_number = a.at("attempt_number").get<int>();
        attempt.prompt_digest = a.at("prompt_digest").get<std::string>();
        attempt.raw_reply = a.at("raw_reply").get<std::string>();
        attempt.parsed = parsed_reply_from_json(a.at("parsed"));
        if (a.contains("retrieval")) {
            const json& r = a.at("retrieval");
            attempt.retrieval = RetrievalRecord{
                parse_category_or_throw(r.at("category").get<std::string>()),
                {r.at("segment").at(0).get<int>(), r.at("segment").at(1).get<int>()},
                r.at("frame_index").get<int>(),
                r.at("vqa_text").get<std::string>()};
        }
        if (a.contains("error")) attempt.error = a.at("error").get<std::string>();
        result.attempts.push_back(std::move(attempt));
    }
    auto status = parse_final_status(j.at("final_status").get<std::string>());
    if (!status) throw SchemaViolation("unknown final_status in question result");
    result.final_status = *status;
    if (j.contains("final_choice")) result.final_choice = j.at("final_choice").get<int>();
    return result;
}

// ---------------------------------------------------------------------------
// run_split: persistence, resume, worker pool
// ---------------------------------------------------------------------------

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    static std::atomic<unsigned> counter{0};
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid()) + "." +
                         std::to_string(counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw MissingFile("cannot write: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

std::string dump_result(const QuestionResult& result) {
    return question_result_to_json(result).dump(2) + "\n";
}

json summary_to_json(const RunSummary& summary, const std::string& run_id) {
    json j{{"run_id", run_id},
           {"complete", summary.complete},
           {"question_count", summary.question_count},
           {"processed", summary.processed},
           {"counts",
            {{"correct", summary.correct},
             {"wrong", summary.wrong},
             {"unanswerable", summary.unanswerable},
             {"no_answer", summary.no_answer}}}};
    const long total = summary.correct + summary.wrong + summary.unanswerable + summary.no_answer;
    if (total > 0) {
        j["accuracy_overall"] = static_cast<double>(summary.correct) / total;
        const long answered = total - summary.unanswerable;
        if (answered > 0)
            j["accuracy_answered"] = static_cast<double>(summary.correct) / answered;
        else
            j["accuracy_answered"] = nullptr;
    }
    return j;
}

} // namespace

RunResult run_split(const Dataset& dataset, const RunConfig& config, const BackendSet& backends,
                    const PromptRenderer& renderer, const fs::path& out_dir, const RunInfo& info,
                    const RunControl& control) {
    if (config.mode == EvalMode::Loop && !backends.vqa)
        throw ConfigError("loop mode requires a vqa backend");
    if (!backends.qa) throw ConfigError("run requires a qa backend");
    const bool image_mode = backends.qa->profile().accepts_images && !config.use_captions;
    if (!image_mode && !backends.caption)
        throw ConfigError("caption substitution requires a caption backend");

    const std::string run_id =
        info.run_id.empty() ? info.config_digest.substr(0, 12) : info.run_id;
    const fs::path questions_dir = out_dir / "questions";
    const fs::path manifest_path = out_dir / "manifest.json";
    fs::create_directories(questions_dir);

    std::vector<std::string> qids;
    qids.reserve(dataset.questions.size());
    for (const auto& qa : dataset.questions) qids.push_back(qa.qid);
    std::sort(qids.begin(), qids.end());

    json manifest;
    if (fs::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        try {
            manifest = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("corrupt manifest in " + out_dir.string() + ": " + e.what());
        }
        const std::string existing = manifest.value("config_digest", "");
        if (existing != info.config_digest)
            throw ConfigError("run directory " + out_dir.string() +
                              " was produced with a different configuration (digest " + existing +
                              " vs " + info.config_digest + ")");
    } else {
        manifest = json{{"run_id", run_id},
                        {"config_digest", info.config_digest},
                        {"config", info.config_echo},
                        {"qids", qids},
                        {"started_at", utc_now()}};
        atomic_write(manifest_path, manifest.dump(2) + "\n");
    }

    // resume: pick up persisted results that parse cleanly
    std::map<std::string, QuestionResult> done;
    for (const std::string& qid : qids) {
        const fs::path path = questions_dir / (qid + ".json");
        if (!fs::exists(path)) continue;
        try {
            std::ifstream in(path, std::ios::binary);
            done.emplace(qid, question_result_from_json(json::parse(in)));
        } catch (const std::exception&) {
            // unreadable partial result: reprocess
        }
    }

    std::map<std::string, const QARecord*> qa_by_qid;
    for (const auto& qa : dataset.questions) qa_by_qid[qa.qid] = &qa;

    std::vector<std::string> pending;
    for (const std::string& qid : qids)
        if (!done.count(qid)) pending.push_back(qid);
    if (pending.size() > control.limit) pending.resize(control.limit);

    std::mutex done_mutex;
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            if (control.cancel && control.cancel->load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) return;
            const QARecord& qa = *qa_by_qid.at(pending[i]);
            try {
                QuestionResult result =
                    run_question(qa, dataset, config, backends, renderer);
                atomic_write(questions_dir / (qa.qid + ".json"), dump_result(result));
                std::lock_guard lock(done_mutex);
                done.emplace(qa.qid, std::move(result));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!first_failure) first_failure = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::max(1, std::min<int>(config.concurrency,
                                                  static_cast<int>(pending.size() + 1)));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_failure) std::rethrow_exception(first_failure);

    RunResult run;
    run.run_id = run_id;
    for (const std::string& qid : qids) {
        auto it = done.find(qid);
        if (it != done.end()) run.results.push_back(it->second);
    }

    RunSummary& summary = run.summary;
    for (const auto& result : run.results) {
        switch (result.final_status) {
            case FinalStatus::Correct: ++summary.correct; break;
            case FinalStatus::Wrong: ++summary.wrong; break;
            case FinalStatus::Unanswerable: ++summary.unanswerable; break;
            case FinalStatus::NoAnswer: ++summary.no_answer; break;
        }
    }
    summary.question_count = dataset.questions.size();
    summary.processed = run.results.size();
    summary.complete = summary.processed == summary.question_count;

    atomic_write(out_dir / "summary.json", summary_to_json(summary, run_id).dump(2) + "\n");

    manifest["finished_at"] = utc_now();
    manifest["complete"] = summary.complete;
    atomic_write(manifest_path, manifest.dump(2) + "\n");
    return run;
}

PersistedRun load_run(const fs::path& run_dir) {
    PersistedRun run;
    const fs::path manifest_path = run_dir / "manifest.json";
    const fs::path summary_path = run_dir / "summary.json";
    if (!fs::exists(manifest_path))
        throw MissingInput("no manifest.json in " + run_dir.string());
    {
        std::ifstream in(manifest_path);
        run.manifest = json::parse(in);
    }
    if (fs::exists(summary_path)) {
        // absent when the run was killed before finishing; completeness is
        // judged from the question files either way
        std::ifstream in(summary_path);
        run.summary = json::parse(in);
    } else {
        run.summary = json::object();
    }
    std::vector<std::string> qids;
    for (const auto& qid : run.manifest.at("qids")) qids.push_back(qid.get<std::string>());
    std::sort(qids.begin(), qids.end());
    for (const std::string& qid : qids) {
        const fs::path path = run_dir / "questions" / (qid + ".json");
        if (!fs::exists(path)) {
            run.missing_qids.push_back(qid);
            continue;
        }
        std::ifstream in(path, std::ios::binary);
        run.results.push_back(question_result_from_json(json::parse(in)));
    }
    run.complete = run.missing_qids.empty();
    return run;
}

} // namespace lvd
