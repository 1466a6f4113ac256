// SPDX-License-Identifier: Apache-2.0
#include "lvd/dataset.hpp"

#include "lvd/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace lvd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("missing file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaViolation(path.string() + ": invalid JSON: " + e.what());
    }
}

const json& require_field(const json& record, const char* field, const std::string& where) {
    auto it = record.find(field);
    if (it == record.end()) {
        throw SchemaViolation(where + ": missing field \"" + field + "\"");
    }
    return *it;
}

QARecord qa_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaViolation(where + ": record is not an object");
    QARecord qa;
    const json& qid = require_field(j, "qid", where);
    if (!qid.is_string()) throw SchemaViolation(where + ": field \"qid\" must be a string");
    qa.qid = qid.get<std::string>();
    const std::string ctx = where + " (qid " + qa.qid + ")";
    const json& vid = require_field(j, "vid", ctx);
    if (!vid.is_string()) throw SchemaViolation(ctx + ": field \"vid\" must be a string");
    qa.vid = vid.get<std::string>();
    const json& question = require_field(j, "question", ctx);
    if (!question.is_string()) throw SchemaViolation(ctx + ": field \"question\" must be a string");
    qa.question = question.get<std::string>();
    const json& options = require_field(j, "options", ctx);
    if (!options.is_array()) throw SchemaViolation(ctx + ": field \"options\" must be an array");
    for (const auto& opt : options) {
        if (!opt.is_string()) throw SchemaViolation(ctx + ": options must be strings");
        qa.options.push_back(opt.get<std::string>());
    }
    const json& answer = require_field(j, "answer_idx", ctx);
    if (!answer.is_number_integer())
        throw SchemaViolation(ctx + ": field \"answer_idx\" must be an integer");
    qa.correct_idx = answer.get<int>();
    return qa;
}

json qa_to_json(const QARecord& qa) {
    return json{{"qid", qa.qid},
                {"vid", qa.vid},
                {"question", qa.question},
                {"options", qa.options},
                {"answer_idx", qa.correct_idx}};
}

Transcript transcript_from_json(const json& j, const std::string& vid, const std::string& where) {
    if (!j.is_array()) throw SchemaViolation(where + ": transcript must be an array");
    Transcript t;
    t.vid = vid;
    std::size_t i = 0;
    for (const auto& seg : j) {
        const std::string ctx = where + " segment " + std::to_string(i);
        if (!seg.is_object()) throw SchemaViolation(ctx + ": not an object");
        const json& start = require_field(seg, "start", ctx);
        const json& end = require_field(seg, "end", ctx);
        const json& text = require_field(seg, "text", ctx);
        if (!start.is_number() || !end.is_number())
            throw SchemaViolation(ctx + ": start/end must be numbers");
        if (!text.is_string()) throw SchemaViolation(ctx + ": text must be a string");
        t.segments.push_back(
            {start.get<double>(), end.get<double>(), text.get<std::string>()});
        ++i;
    }
    return t;
}

std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "frame_%05d.jpg", index);
    return buf;
}

// Count frame files; reports the number of files named frame_*.jpg and
// whether they are contiguously indexed from 0.
std::pair<int, bool> scan_frames(const fs::path& dir) {
    std::vector<int> indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() != 15 || name.rfind("frame_", 0) != 0 || name.substr(11) != ".jpg")
            continue;
        const std::string digits = name.substr(6, 5);
        if (!std::all_of(digits.begin(), digits.end(),
                         [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
            continue;
        indices.push_back(std::stoi(digits));
    }
    std::sort(indices.begin(), indices.end());
    bool contiguous = true;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] != static_cast<int>(i)) {
            contiguous = false;
            break;
        }
    }
    return {static_cast<int>(indices.size()), contiguous};
}

struct LoadedVideo {
    VideoRecord record;
    Transcript transcript;
    bool frames_contiguous = true;
};

LoadedVideo load_video(const fs::path& root, const std::string& vid) {
    LoadedVideo lv;
    const fs::path video_dir = root / "videos" / vid;
    const fs::path frames_dir = video_dir / "frames";
    const fs::path transcript_file = video_dir / "transcript.json";

    auto [count, contiguous] = scan_frames(frames_dir);
    lv.frames_contiguous = contiguous;

    VideoRecord& v = lv.record;
    v.vid = vid;
    v.frame_dir = frames_dir;
    v.frame_count = count;

    const fs::path meta_file = video_dir / "meta.json";
    if (fs::exists(meta_file)) {
        json meta = parse_json_file(meta_file);
        if (meta.contains("fps")) v.fps = meta.at("fps").get<double>();
        if (meta.contains("duration_s")) v.duration_s = meta.at("duration_s").get<double>();
    }
    if (v.fps <= 0) throw SchemaViolation(meta_file.string() + ": fps must be positive");
    if (v.duration_s <= 0.0) v.duration_s = v.frame_count / v.fps;

    lv.transcript =
        transcript_from_json(parse_json_file(transcript_file), vid, transcript_file.string());
    return lv;
}

std::set<InfoCategory> categories_from_json(const json& arr, const std::string& ctx) {
    if (!arr.is_array()) throw SchemaViolation(ctx + ": field \"categories\" must be an array");
    std::set<InfoCategory> out;
    for (const auto& item : arr) {
        if (!item.is_string()) throw SchemaViolation(ctx + ": categories must be strings");
        const std::string raw = item.get<std::string>();
        auto cat = parse_category(raw);
        if (!cat) throw UnknownCategory(ctx + ": unknown category \"" + raw + "\"");
        out.insert(*cat);
    }
    return out;
}

HumanAnnotation annotation_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaViolation(where + ": record is not an object");
    HumanAnnotation a;
    const json& qid = require_field(j, "qid", where);
    if (!qid.is_string()) throw SchemaViolation(where + ": field \"qid\" must be a string");
    a.qid = qid.get<std::string>();
    const std::string ctx = where + " (qid " + a.qid + ")";

    const json& cond = require_field(j, "condition", ctx);
    if (!cond.is_string()) throw SchemaViolation(ctx + ": field \"condition\" must be a string");
    auto parsed_cond = parse_condition(cond.get<std::string>());
    if (!parsed_cond)
        throw SchemaViolation(ctx + ": condition must be video_only or transcript_only");
    a.condition = *parsed_cond;

    const json& answerable = require_field(j, "answerable", ctx);
    if (!answerable.is_boolean())
        throw SchemaViolation(ctx + ": field \"answerable\" must be a boolean");
    a.answerable = answerable.get<bool>();

    if (j.contains("chosen_idx") && !j.at("chosen_idx").is_null()) {
        if (!j.at("chosen_idx").is_number_integer())
            throw SchemaViolation(ctx + ": field \"chosen_idx\" must be an integer");
        a.chosen_idx = j.at("chosen_idx").get<int>();
    }
    if (a.answerable != a.chosen_idx.has_value())
        throw SchemaViolation(ctx + ": chosen_idx must be present exactly when answerable");
    if (a.chosen_idx && (*a.chosen_idx < 0 || *a.chosen_idx > 3))
        throw SchemaViolation(ctx + ": chosen_idx must be in [0,3]");

    if (j.contains("reasoning")) {
        if (!j.at("reasoning").is_string())
            throw SchemaViolation(ctx + ": field \"reasoning\" must be a string");
        a.reasoning = j.at("reasoning").get<std::string>();
    }

    if (j.contains("categories")) a.categories = categories_from_json(j.at("categories"), ctx);

    if (a.condition == AnnotationCondition::VideoOnly) {
        for (InfoCategory c : a.categories) {
            if (!in_rationale_set(c))
                throw SchemaViolation(ctx + ": category \"" + std::string(category_name(c)) +
                                      "\" is not a rationale category");
        }
    } else if (!a.answerable) {
        for (InfoCategory c : a.categories) {
            if (!in_additional_info_set(c))
                throw SchemaViolation(ctx + ": category \"" + std::string(category_name(c)) +
                                      "\" is not an additional-information category");
        }
    }

    if (j.contains("segment") && !j.at("segment").is_null()) {
        const json& seg = j.at("segment");
        if (!seg.is_array() || seg.size() != 2 || !seg[0].is_number_integer() ||
            !seg[1].is_number_integer())
            throw SchemaViolation(ctx + ": field \"segment\" must be [start, end] integers");
        int start = seg[0].get<int>();
        int end = seg[1].get<int>();
        if (start < 0 || start > end)
            throw SchemaViolation(ctx + ": segment must satisfy 0 <= start <= end");
        a.segment = {start, end};
    }
    return a;
}

json annotation_to_json(const HumanAnnotation& a) {
    json j{{"qid", a.qid},
           {"condition", std::string(condition_name(a.condition))},
           {"answerable", a.answerable},
           {"reasoning", a.reasoning}};
    if (a.chosen_idx) j["chosen_idx"] = *a.chosen_idx;
    json cats = json::array();
    for (InfoCategory c : a.categories) cats.push_back(std::string(category_name(c)));
    j["categories"] = cats;
    if (a.segment) j["segment"] = json::array({a.segment->first, a.segment->second});
    return j;
}

void for_each_jsonl_line(const fs::path& file,
                         const std::function<void(std::size_t, const std::string&)>& fn) {
    std::ifstream in(file);
    if (!in) throw MissingFile("missing file: " + file.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(line_no, line);
    }
}

void append_finding(std::vector<Finding>& out, Severity sev, std::string code,
                    std::string subject, std::string message) {
    out.push_back({sev, std::move(code), std::move(subject), std::move(message)});
}

void validate_records(const Dataset& ds, std::vector<Finding>& out) {
    for (const auto& qa : ds.questions) {
        if (qa.options.size() != 4) {
            append_finding(out, Severity::Error, "OptionArityViolation", qa.qid,
                           "expected 4 options, found " + std::to_string(qa.options.size()));
        } else {
            std::set<std::string> distinct(qa.options.begin(), qa.options.end());
            if (distinct.size() != qa.options.size())
                append_finding(out, Severity::Error, "DuplicateOptions", qa.qid,
                               "options are not pairwise distinct");
        }
        if (qa.correct_idx < 0 || qa.correct_idx >= static_cast<int>(qa.options.size()))
            append_finding(out, Severity::Error, "CorrectIndexOutOfRange", qa.qid,
                           "answer_idx " + std::to_string(qa.correct_idx) +
                               " does not index the options");
    }
    for (const auto& [vid, video] : ds.videos) {
        const double expected = video.duration_s * video.fps;
        if (std::abs(video.frame_count - expected) > video.fps) {
            std::ostringstream msg;
            msg << "frame count " << video.frame_count << " vs duration " << video.duration_s
                << " s at " << video.fps << " fps (expected ~" << expected << ")";
            append_finding(out, Severity::Warning, "FrameCountMismatch", vid, msg.str());
        }
    }
    for (const auto& [vid, transcript] : ds.transcripts) {
        double prev_start = 0.0;
        bool ordered = true;
        for (const auto& seg : transcript.segments) {
            if (seg.start_s < prev_start) ordered = false;
            prev_start = seg.start_s;
            if (seg.start_s < 0 || seg.start_s > seg.end_s) {
                append_finding(out, Severity::Warning, "SegmentBoundsViolation", vid,
                               "transcript segment violates 0 <= start <= end");
                break;
            }
        }
        if (!ordered)
            append_finding(out, Severity::Warning, "TranscriptOrderViolation", vid,
                           "segments are not ordered by non-decreasing start");
        for (const auto& seg : transcript.segments) {
            if (seg.text.empty()) {
                append_finding(out, Severity::Warning, "EmptyTranscriptText", vid,
                               "transcript contains an empty segment text");
                break;
            }
        }
    }
}

void sort_findings(std::vector<Finding>& findings) {
    std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        if (a.subject != b.subject) return a.subject < b.subject;
        return a.code < b.code;
    });
}

} // namespace

std::string_view condition_name(AnnotationCondition c) {
    return c == AnnotationCondition::VideoOnly ? "video_only" : "transcript_only";
}

std::optional<AnnotationCondition> parse_condition(std::string_view text) {
    if (text == "video_only") return AnnotationCondition::VideoOnly;
    if (text == "transcript_only") return AnnotationCondition::TranscriptOnly;
    return std::nullopt;
}

Dataset load_dataset(const fs::path& root, const std::string& split) {
    if (!fs::is_directory(root)) throw MissingFile("missing dataset root: " + root.string());
    const fs::path qa_file = root / split / "qa.jsonl";
    if (!fs::exists(qa_file)) throw MissingFile("missing file: " + qa_file.string());

    Dataset ds;
    ds.manifest.root_path = root;
    ds.manifest.split = split;

    std::set<std::string> seen_qids;
    for_each_jsonl_line(qa_file, [&](std::size_t line_no, const std::string& line) {
        const std::string where = qa_file.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaViolation(where + ": invalid JSON: " + e.what());
        }
        QARecord qa = qa_from_json(j, where);
        if (!seen_qids.insert(qa.qid).second)
            throw SchemaViolation(where + ": duplicate qid \"" + qa.qid + "\"");
        ds.questions.push_back(std::move(qa));
    });

    std::set<std::string> vids;
    for (const auto& qa : ds.questions) vids.insert(qa.vid);

    for (const std::string& vid : vids) {
        const fs::path frames_dir = root / "videos" / vid / "frames";
        if (!fs::is_directory(frames_dir)) {
            auto it = std::find_if(ds.questions.begin(), ds.questions.end(),
                                   [&](const QARecord& q) { return q.vid == vid; });
            throw DanglingReference("qid \"" + it->qid + "\" references video \"" + vid +
                                    "\" which has no frame directory under " +
                                    (root / "videos").string());
        }
        LoadedVideo lv = load_video(root, vid);
        ds.videos.emplace(vid, std::move(lv.record));
        ds.transcripts.emplace(vid, std::move(lv.transcript));
        ds.manifest.video_ids.push_back(vid);
    }
    ds.manifest.question_count = ds.questions.size();
    return ds;
}

std::vector<QARecord> load_qa_records(const fs::path& qa_file) {
    std::vector<QARecord> records;
    for_each_jsonl_line(qa_file, [&](std::size_t line_no, const std::string& line) {
        const std::string where = qa_file.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaViolation(where + ": invalid JSON: " + e.what());
        }
        records.push_back(qa_from_json(j, where));
    });
    return records;
}

std::vector<HumanAnnotation> load_annotations(const fs::path& file) {
    std::vector<HumanAnnotation> out;
    for_each_jsonl_line(file, [&](std::size_t line_no, const std::string& line) {
        const std::string where = file.string() + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaViolation(where + ": invalid JSON: " + e.what());
        }
        out.push_back(annotation_from_json(j, where));
    });
    return out;
}

bool ValidationReport::has_errors() const {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::Error; });
}

std::size_t ValidationReport::count(std::string_view code) const {
    return static_cast<std::size_t>(std::count_if(
        findings.begin(), findings.end(), [&](const Finding& f) { return f.code == code; }));
}

ValidationReport validate_dataset(const Dataset& dataset) {
    ValidationReport report;
    validate_records(dataset, report.findings);
    // frame contiguity is re-checked here so validation does not depend on
    // loader-internal state
    for (const auto& [vid, video] : dataset.videos) {
        if (!fs::is_directory(video.frame_dir)) continue;
        auto [count, contiguous] = scan_frames(video.frame_dir);
        (void)count;
        if (!contiguous)
            append_finding(report.findings, Severity::Error, "NonContiguousFrames", vid,
                           "frame files are not contiguously indexed from 0");
    }
    sort_findings(report.findings);
    return report;
}

ValidationReport scan_dataset(const fs::path& root, const std::string& split, Dataset* out) {
    if (!fs::is_directory(root)) throw MissingFile("missing dataset root: " + root.string());
    const fs::path qa_file = root / split / "qa.jsonl";
    ValidationReport report;

    Dataset ds;
    ds.manifest.root_path = root;
    ds.manifest.split = split;

    if (!fs::exists(qa_file)) {
        append_finding(report.findings, Severity::Error, "MissingQAFile", split,
                       "missing file: " + qa_file.string());
        sort_findings(report.findings);
        if (out) *out = std::move(ds);
        return report;
    }

    std::set<std::string> seen_qids;
    for_each_jsonl_line(qa_file, [&](std::size_t line_no, const std::string& line) {
        const std::string where = qa_file.string() + ":" + std::to_string(line_no);
        try {
            json j = json::parse(line);
            QARecord qa = qa_from_json(j, where);
            if (!seen_qids.insert(qa.qid).second) {
                append_finding(report.findings, Severity::Error, "DuplicateQid", qa.qid,
                               where + ": duplicate qid");
                return;
            }
            ds.questions.push_back(std::move(qa));
        } catch (const Error& e) {
            append_finding(report.findings, Severity::Error, "SchemaViolation",
                           "line " + std::to_string(line_no), e.what());
        } catch (const json::exception& e) {
            append_finding(report.findings, Severity::Error, "SchemaViolation",
                           "line " + std::to_string(line_no), where + ": " + e.what());
        }
    });

    std::set<std::string> vids;
    for (const auto& qa : ds.questions) vids.insert(qa.vid);
    for (const std::string& vid : vids) {
        const fs::path frames_dir = root / "videos" / vid / "frames";
        const fs::path transcript_file = root / "videos" / vid / "transcript.json";
        if (!fs::is_directory(frames_dir)) {
            append_finding(report.findings, Severity::Error, "MissingFrames", vid,
                           "no frame directory: " + frames_dir.string());
            continue;
        }
        if (!fs::exists(transcript_file)) {
            append_finding(report.findings, Severity::Error, "MissingTranscript", vid,
                           "no transcript file: " + transcript_file.string());
            continue;
        }
        try {
            LoadedVideo lv = load_video(root, vid);
            if (!lv.frames_contiguous)
                append_finding(report.findings, Severity::Error, "NonContiguousFrames", vid,
                               "frame files are not contiguously indexed from 0");
            ds.videos.emplace(vid, std::move(lv.record));
            ds.transcripts.emplace(vid, std::move(lv.transcript));
            ds.manifest.video_ids.push_back(vid);
        } catch (const Error& e) {
            append_finding(report.findings, Severity::Error, "SchemaViolation", vid, e.what());
        }
    }
    ds.manifest.question_count = ds.questions.size();

    validate_records(ds, report.findings);
    sort_findings(report.findings);
    if (out) *out = std::move(ds);
    return report;
}

std::filesystem::path frame_path(const VideoRecord& video, int index) {
    if (index < 0 || index >= video.frame_count)
        throw IndexOutOfRange("frame index " + std::to_string(index) + " out of range [0, " +
                              std::to_string(video.frame_count) + ") for video " + video.vid);
    return video.frame_dir / frame_file_name(index);
}

void write_qa_records(const fs::path& file, const std::vector<QARecord>& records) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingFile("cannot write: " + file.string());
    for (const auto& qa : records) out << qa_to_json(qa).dump() << "\n";
}

void write_transcript(const fs::path& file, const Transcript& transcript) {
    fs::create_directories(file.parent_path());
    json arr = json::array();
    for (const auto& seg : transcript.segments)
        arr.push_back(json{{"start", seg.start_s}, {"end", seg.end_s}, {"text", seg.text}});
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingFile("cannot write: " + file.string());
    out << arr.dump(2) << "\n";
}

void write_annotations(const fs::path& file, const std::vector<HumanAnnotation>& annotations) {
    fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingFile("cannot write: " + file.string());
    for (const auto& a : annotations) out << annotation_to_json(a).dump() << "\n";
}

void write_dataset(const Dataset& dataset, const fs::path& root) {
    write_qa_records(root / dataset.manifest.split / "qa.jsonl", dataset.questions);
    for (const auto& [vid, video] : dataset.videos) {
        const fs::path video_dir = root / "videos" / vid;
        write_transcript(video_dir / "transcript.json", dataset.transcripts.at(vid));
        json meta{{"duration_s", video.duration_s}, {"fps", video.fps}};
        {
            std::ofstream out(video_dir / "meta.json", std::ios::binary | std::ios::trunc);
            out << meta.dump(2) << "\n";
        }
        const fs::path frames = video_dir / "frames";
        fs::create_directories(frames);
        for (int i = 0; i < video.frame_count; ++i) {
            std::ofstream out(frames / frame_file_name(i), std::ios::binary | std::ios::trunc);
            out << "\xff\xd8" << vid << "#" << i;
        }
    }
}

} // namespace lvd
