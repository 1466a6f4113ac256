// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/categories.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lvd {

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;

    bool operator==(const TranscriptSegment&) const = default;
};

struct Transcript {
    std::string vid;
    std::vector<TranscriptSegment> segments;

    bool operator==(const Transcript&) const = default;
};

struct VideoRecord {
    std::string vid;
    double duration_s = 0.0;
    double fps = 3.0;
    int frame_count = 0;
    std::filesystem::path frame_dir;
};

struct QARecord {
    std::string qid;
    std::string vid;
    std::string question;
    std::vector<std::string> options; // exactly 4 when well-formed
    int correct_idx = 0;

    bool operator==(const QARecord&) const = default;
};

enum class AnnotationCondition { VideoOnly, TranscriptOnly };

std::string_view condition_name(AnnotationCondition c); // "video_only" / "transcript_only"
std::optional<AnnotationCondition> parse_condition(std::string_view text);

struct HumanAnnotation {
    std::string qid;
    AnnotationCondition condition = AnnotationCondition::VideoOnly;
    bool answerable = false;
    std::optional<int> chosen_idx;          // present iff answerable
    std::string reasoning;
    std::set<InfoCategory> categories;
    std::optional<std::pair<int, int>> segment; // integer seconds, 0 <= start <= end

    bool operator==(const HumanAnnotation&) const = default;
};

struct DatasetManifest {
    std::filesystem::path root_path;
    std::string split;
    std::vector<std::string> video_ids; // sorted, unique, referenced by this split
    std::size_t question_count = 0;
};

struct Dataset {
    DatasetManifest manifest;
    std::map<std::string, VideoRecord> videos;
    std::map<std::string, Transcript> transcripts;
    std::vector<QARecord> questions; // file order
};

// ---------------------------------------------------------------------------
// Loading.
//
// Layout under <root>:
//   <split>/qa.jsonl                 one QA record per line
//   videos/<vid>/transcript.json     array of {start, end, text}
//   videos/<vid>/frames/frame_%05d.jpg   indexed from 0
//   videos/<vid>/meta.json           optional {duration_s, fps}
//   annotations/<condition>.jsonl    human annotations
// ---------------------------------------------------------------------------

/// Strict load. Throws MissingFile, SchemaViolation or DanglingReference on
/// the first structural problem. Semantic invariants (option arity, frame
/// count vs duration, ...) are left to validate_dataset.
Dataset load_dataset(const std::filesystem::path& root, const std::string& split);

/// Load one annotation file. Enforces per-record invariants; throws
/// SchemaViolation (with line number) or UnknownCategory.
std::vector<HumanAnnotation> load_annotations(const std::filesystem::path& file);

/// Load the QA records of one split without touching video data (answer-key
/// lookups, report tooling).
std::vector<QARecord> load_qa_records(const std::filesystem::path& qa_file);

enum class Severity { Warning, Error };

struct Finding {
    Severity severity = Severity::Error;
    std::string code;    // e.g. "FrameCountMismatch"
    std::string subject; // qid or vid
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool has_errors() const;
    std::size_t count(std::string_view code) const;
};

/// Semantic validation of an already-loaded dataset. Deterministic: findings
/// are ordered by (subject, code).
ValidationReport validate_dataset(const Dataset& dataset);

/// Lenient scan for CLI validation: structural problems become error
/// findings instead of exceptions, then semantic validation runs on whatever
/// loaded. Throws MissingFile only if root/<split> itself is absent.
ValidationReport scan_dataset(const std::filesystem::path& root, const std::string& split,
                              Dataset* out = nullptr);

/// Canonical path of one frame. Throws IndexOutOfRange.
std::filesystem::path frame_path(const VideoRecord& video, int index);

// ---------------------------------------------------------------------------
// Serialization (fixtures, round-trips, result tooling).
// ---------------------------------------------------------------------------

void write_qa_records(const std::filesystem::path& file, const std::vector<QARecord>& records);
void write_transcript(const std::filesystem::path& file, const Transcript& transcript);
void write_annotations(const std::filesystem::path& file,
                       const std::vector<HumanAnnotation>& annotations);

/// Re-serialize a dataset under a new root (records, metadata and
/// placeholder frame files), such that load_dataset(new_root) sees the same
/// records. Placeholder frames carry no image content.
void write_dataset(const Dataset& dataset, const std::filesystem::path& root);

} // namespace lvd
