// SPDX-License-Identifier: Apache-2.0
#include "lvd/reply_parser.hpp"

#include "lvd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <optional>
#include <sstream>
#include <vector>

namespace lvd {

namespace {

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string_view::npos) return "";
    auto end = s.find_last_not_of(ws);
    return std::string(s.substr(begin, end - begin + 1));
}

struct Fields {
    std::optional<std::string> decision;
    std::optional<std::string> choice;
    std::optional<std::string> rationale_category;
    std::optional<std::string> reason;
    std::optional<std::string> needed;
    std::optional<std::string> segment;
    bool any = false;
};

// line-oriented keyed fields; unknown lines are ignored except as REASON
// continuation
Fields scan_fields(const std::string& raw) {
    Fields f;
    std::istringstream in(raw);
    std::string line;
    std::string* continuation = nullptr;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t colon = line.find(':');
        std::string key = colon == std::string::npos ? "" : to_lower(trim(line.substr(0, colon)));
        std::string value = colon == std::string::npos ? "" : trim(line.substr(colon + 1));
        auto take = [&](std::optional<std::string>& slot) -> std::string* {
            f.any = true;
            if (!slot) slot = value;
            return &*slot;
        };
        if (key == "decision") {
            take(f.decision);
            continuation = nullptr;
        } else if (key == "choice") {
            take(f.choice);
            continuation = nullptr;
        } else if (key == "rationale_category" || key == "rationale category" ||
                   key == "rationale_categories" || key == "rationale categories") {
            take(f.rationale_category);
            continuation = nullptr;
        } else if (key == "reason") {
            continuation = take(f.reason);
        } else if (key == "needed") {
            take(f.needed);
            continuation = nullptr;
        } else if (key == "segment") {
            take(f.segment);
            continuation = nullptr;
        } else if (continuation) {
            *continuation += '\n';
            *continuation += line;
        }
    }
    if (f.reason) *f.reason = trim(*f.reason);
    return f;
}

std::optional<int> letter_to_idx(char c) {
    if (c >= 'A' && c <= 'D') return c - 'A';
    if (c >= 'a' && c <= 'd') return c - 'a';
    return std::nullopt;
}

// first standalone option letter inside a CHOICE-like value
std::optional<int> parse_choice_value(const std::string& value) {
    for (std::size_t i = 0; i < value.size(); ++i) {
        auto idx = letter_to_idx(value[i]);
        if (!idx) continue;
        const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(value[i - 1]));
        const bool right_ok =
            i + 1 == value.size() || !std::isalnum(static_cast<unsigned char>(value[i + 1]));
        if (left_ok && right_ok) return idx;
    }
    return std::nullopt;
}

std::set<InfoCategory> parse_category_list(const std::string& value) {
    std::set<InfoCategory> out;
    std::string token;
    std::istringstream in(value);
    while (std::getline(in, token, ',')) {
        token = trim(token);
        if (token.empty()) continue;
        if (auto c = parse_category(token)) out.insert(*c);
        // unknown names are skipped: the reply is still a usable answer
    }
    return out;
}

bool contains_word(const std::string& lower, const std::string& word) {
    for (std::size_t pos = lower.find(word); pos != std::string::npos;
         pos = lower.find(word, pos + 1)) {
        const bool left_ok =
            pos == 0 || !std::isalpha(static_cast<unsigned char>(lower[pos - 1]));
        const std::size_t end = pos + word.size();
        const bool right_ok =
            end >= lower.size() || !std::isalpha(static_cast<unsigned char>(lower[end]));
        if (left_ok && right_ok) return true;
    }
    return false;
}

// Distinct option letters mentioned in free text. Counts standalone
// uppercase A-D, parenthesized letters of either case, and letters directly
// following "answer" / "option" / "choice".
std::set<int> scan_option_letters(const std::string& raw) {
    std::set<int> found;
    const std::string lower = to_lower(raw);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (c >= 'A' && c <= 'D') {
            const bool left_ok = i == 0 || !std::isalnum(static_cast<unsigned char>(raw[i - 1]));
            const bool right_ok =
                i + 1 == raw.size() || !std::isalnum(static_cast<unsigned char>(raw[i + 1]));
            if (left_ok && right_ok) found.insert(c - 'A');
        }
        if (c == '(' && i + 2 < raw.size() && raw[i + 2] == ')') {
            if (auto idx = letter_to_idx(raw[i + 1])) found.insert(*idx);
        }
    }
    for (const char* kw : {"answer", "option", "choice"}) {
        for (std::size_t pos = lower.find(kw); pos != std::string::npos;
             pos = lower.find(kw, pos + 1)) {
            std::size_t i = pos + std::string(kw).size();
            // skip "is", punctuation and whitespace between keyword and letter
            while (i < lower.size() &&
                   (std::isspace(static_cast<unsigned char>(lower[i])) || lower[i] == ':' ||
                    lower[i] == '-' || lower[i] == '=' || lower[i] == '(' || lower[i] == '"'))
                ++i;
            if (i + 1 < lower.size() && lower[i] == 'i' && lower[i + 1] == 's') {
                i += 2;
                while (i < lower.size() &&
                       (std::isspace(static_cast<unsigned char>(lower[i])) || lower[i] == '(' ||
                        lower[i] == '"'))
                    ++i;
            }
            if (i < lower.size()) {
                const bool right_ok = i + 1 >= lower.size() ||
                                      !std::isalnum(static_cast<unsigned char>(lower[i + 1]));
                if (right_ok) {
                    if (auto idx = letter_to_idx(lower[i])) found.insert(*idx);
                }
            }
        }
    }
    return found;
}

ParsedReply make_unanswerable(const std::string& raw, EvalMode mode, InfoCategory category,
                              const std::string& segment_source) {
    if (mode == EvalMode::Original)
        return MalformedDecision{raw, "unanswerable decision is not permitted in original mode"};
    if (!in_additional_info_set(category))
        return MalformedDecision{raw, "category \"" + std::string(category_name(category)) +
                                          "\" cannot be requested as additional information"};
    try {
        return UnanswerableDecision{category, parse_segment(segment_source)};
    } catch (const NoSegmentFound&) {
    }
    if (segment_source != raw) {
        try {
            return UnanswerableDecision{category, parse_segment(raw)};
        } catch (const NoSegmentFound&) {
        }
    }
    return MalformedDecision{raw, "unanswerable reply lacks a time segment"};
}

ParsedReply fallback_scan(const std::string& raw, EvalMode mode) {
    const std::string lower = to_lower(raw);
    const bool has_unanswerable = contains_word(lower, "unanswerable");

    if (has_unanswerable && mode != EvalMode::Original) {
        if (auto category = scan_category_mention(raw)) {
            if (in_additional_info_set(*category))
                return make_unanswerable(raw, mode, *category, raw);
        }
        return MalformedDecision{raw, "unanswerable without a recognizable category"};
    }

    const std::set<int> letters = scan_option_letters(raw);
    if (letters.size() == 1)
        return AnswerDecision{*letters.begin(), trim(raw), {}};
    if (has_unanswerable) // original mode only at this point
        return MalformedDecision{raw, "unanswerable decision is not permitted in original mode"};
    if (letters.size() > 1)
        return MalformedDecision{raw, "ambiguous reply: multiple option letters mentioned"};
    return MalformedDecision{raw, "no parseable decision"};
}

} // namespace

ParsedReply parse_reply(const std::string& raw, EvalMode mode) {
    const Fields f = scan_fields(raw);

    enum class Path { Answer, Unanswerable, Unknown } path = Path::Unknown;
    if (f.decision) {
        const std::string d = to_lower(*f.decision);
        if (d.rfind("unanswerable", 0) == 0 || contains_word(d, "unanswerable"))
            path = Path::Unanswerable;
        else if (d.find("answer") != std::string::npos)
            path = Path::Answer;
    }
    if (path == Path::Unknown) {
        if (f.choice)
            path = Path::Answer;
        else if (f.needed || f.segment)
            path = Path::Unanswerable;
    }

    if (path == Path::Answer) {
        std::optional<int> idx = f.choice ? parse_choice_value(*f.choice) : std::nullopt;
        if (!idx) return fallback_scan(raw, mode);
        AnswerDecision answer;
        answer.choice_idx = *idx;
        if (f.reason) answer.rationale_text = *f.reason;
        if (f.rationale_category)
            answer.rationale_categories = parse_category_list(*f.rationale_category);
        return answer;
    }

    if (path == Path::Unanswerable) {
        if (mode == EvalMode::Original)
            return MalformedDecision{raw,
                                     "unanswerable decision is not permitted in original mode"};
        std::optional<InfoCategory> category;
        if (f.needed) {
            category = parse_category(*f.needed);
            if (!category) category = scan_category_mention(*f.needed);
        }
        if (!category) category = scan_category_mention(raw);
        if (!category)
            return MalformedDecision{raw, "unanswerable without a recognizable category"};
        if (!in_additional_info_set(*category))
            return MalformedDecision{raw, "category \"" +
                                              std::string(category_name(*category)) +
                                              "\" cannot be requested as additional information"};
        return make_unanswerable(raw, mode, *category, f.segment ? *f.segment : raw);
    }

    return fallback_scan(raw, mode);
}

std::pair<int, int> parse_segment(std::string_view text) {
    std::vector<long long> values;
    std::size_t i = 0;
    while (i < text.size() && values.size() < 2) {
        char c = text[i];
        bool negative = false;
        if (c == '-' && i + 1 < text.size() &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            // a dash is a sign only when not directly following a number
            const bool after_digit =
                i > 0 && (std::isdigit(static_cast<unsigned char>(text[i - 1])) ||
                          text[i - 1] == ':');
            if (!after_digit) {
                negative = true;
                ++i;
                c = text[i];
            }
        }
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        long long value = 0;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            value = value * 10 + (text[i] - '0');
            if (value > 1'000'000'000LL) value = 1'000'000'000LL;
            ++i;
        }
        // mm:ss form
        if (i + 1 < text.size() && text[i] == ':' &&
            std::isdigit(static_cast<unsigned char>(text[i + 1]))) {
            ++i;
            long long seconds = 0;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
                seconds = seconds * 10 + (text[i] - '0');
                ++i;
            }
            value = value * 60 + seconds;
        }
        if (negative) value = -value;
        values.push_back(value);
    }
    if (values.size() < 2)
        throw NoSegmentFound("fewer than two integers in segment text");
    long long start = std::max(0LL, values[0]);
    long long end = std::max(0LL, values[1]);
    if (start > end) std::swap(start, end);
    return {static_cast<int>(std::min(start, 1'000'000'000LL)),
            static_cast<int>(std::min(end, 1'000'000'000LL))};
}

std::string render_reply(const ParsedReply& reply) {
    if (const auto* a = std::get_if<AnswerDecision>(&reply)) {
        std::ostringstream out;
        out << "DECISION: answer\n";
        out << "CHOICE: " << static_cast<char>('A' + a->choice_idx);
        if (!a->rationale_categories.empty()) {
            out << "\nRATIONALE_CATEGORY: ";
            bool first = true;
            for (InfoCategory c : a->rationale_categories) {
                if (!first) out << ", ";
                first = false;
                out << category_name(c);
            }
        }
        if (!a->rationale_text.empty()) out << "\nREASON: " << a->rationale_text;
        return out.str();
    }
    if (const auto* u = std::get_if<UnanswerableDecision>(&reply)) {
        std::ostringstream out;
        out << "DECISION: unanswerable\n";
        out << "NEEDED: " << category_name(u->category) << "\n";
        out << "SEGMENT: " << u->segment.first << " " << u->segment.second;
        return out.str();
    }
    return std::get<MalformedDecision>(reply).raw;
}

} // namespace lvd
