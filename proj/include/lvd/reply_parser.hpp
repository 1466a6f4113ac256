// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/categories.hpp"
#include "lvd/prompting.hpp"

#include <set>
#include <string>
#include <utility>
#include <variant>

namespace lvd {

struct AnswerDecision {
    int choice_idx = 0; // 0..3
    std::string rationale_text;
    std::set<InfoCategory> rationale_categories;

    bool operator==(const AnswerDecision&) const = default;
};

struct UnanswerableDecision {
    InfoCategory category = InfoCategory::SceneContext; // in AdditionalInfoSet
    std::pair<int, int> segment{0, 0};                  // 0 <= start <= end

    bool operator==(const UnanswerableDecision&) const = default;
};

struct MalformedDecision {
    std::string raw;
    std::string reason;

    bool operator==(const MalformedDecision&) const = default;
};

using ParsedReply = std::variant<AnswerDecision, UnanswerableDecision, MalformedDecision>;

/// Parse model reply text. Total over arbitrary input: never throws, a
/// Malformed value is returned instead. Primary grammar is line-oriented
/// keyed fields (DECISION / CHOICE / RATIONALE_CATEGORY / REASON / NEEDED /
/// SEGMENT, case-insensitive keys, tolerant whitespace); when it fails, a
/// fallback scan extracts a lone option letter or the token "unanswerable".
/// In Original mode an unanswerable decision is itself Malformed.
ParsedReply parse_reply(const std::string& raw, EvalMode mode);

/// Extract the first two integers from free text. Accepts space / comma /
/// dash separators and mm:ss forms (converted to seconds); clamps negatives
/// to 0 and swaps when start > end. Throws NoSegmentFound when fewer than
/// two integers are present.
std::pair<int, int> parse_segment(std::string_view text);

/// Render a decision back into the reply grammar. Malformed renders its raw
/// text unchanged.
std::string render_reply(const ParsedReply& reply);

inline bool is_malformed(const ParsedReply& r) {
    return std::holds_alternative<MalformedDecision>(r);
}

} // namespace lvd
