// SPDX-License-Identifier: Apache-2.0
#include "lvd/categories.hpp"

#include "lvd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

namespace lvd {

namespace {

// lowercase, map any non-alphanumeric run to a single space, trim
std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        if (std::isalnum(static_cast<unsigned char>(ch))) {
            if (pending_space && !out.empty()) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else {
            pending_space = true;
        }
    }
    return out;
}

// drop a trailing 's' from each word: "facial expressions" == "facial expression"
std::string fold_plural(const std::string& normalized) {
    std::istringstream in(normalized);
    std::string word, out;
    while (in >> word) {
        if (word.size() > 2 && word.back() == 's') word.pop_back();
        if (!out.empty()) out.push_back(' ');
        out += word;
    }
    return out;
}

const std::map<std::string, InfoCategory>& alias_table() {
    static const std::map<std::string, InfoCategory> table = [] {
        std::map<std::string, InfoCategory> t;
        auto add = [&t](std::string_view alias, InfoCategory c) {
            t.emplace(fold_plural(normalize(alias)), c);
        };
        for (InfoCategory c : kAllCategories) {
            add(category_name(c), c);
            add(category_id(c), c);
        }
        add("appearance", InfoCategory::AppearanceOfPeople);
        add("expression", InfoCategory::FacialExpressions);
        add("voice tone", InfoCategory::ToneOfVoice);
        add("dialogue", InfoCategory::AccurateDialogue);
        add("dialog", InfoCategory::AccurateDialogue);
        add("accurate dialog", InfoCategory::AccurateDialogue);
        add("conversation", InfoCategory::ContentsOfConversation);
        add("conversation contents", InfoCategory::ContentsOfConversation);
        add("other", InfoCategory::OtherInformation);
        return t;
    }();
    return table;
}

bool word_bounded(std::string_view hay, std::size_t pos, std::size_t len) {
    auto alpha = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; };
    if (pos > 0 && alpha(hay[pos - 1])) return false;
    std::size_t end = pos + len;
    if (end < hay.size() && alpha(hay[end])) return false;
    return true;
}

} // namespace

std::string_view category_name(InfoCategory c) {
    switch (c) {
        case InfoCategory::SceneContext: return "scene context";
        case InfoCategory::AppearanceOfPeople: return "appearance of people";
        case InfoCategory::FacialExpressions: return "facial expressions";
        case InfoCategory::Motion: return "motion";
        case InfoCategory::ToneOfVoice: return "tone of voice";
        case InfoCategory::AccurateDialogue: return "accurate dialogue";
        case InfoCategory::ContentsOfConversation: return "contents of conversation";
        case InfoCategory::OtherInformation: return "other information";
    }
    return "?";
}

std::string_view category_id(InfoCategory c) {
    switch (c) {
        case InfoCategory::SceneContext: return "scene_context";
        case InfoCategory::AppearanceOfPeople: return "appearance_of_people";
        case InfoCategory::FacialExpressions: return "facial_expressions";
        case InfoCategory::Motion: return "motion";
        case InfoCategory::ToneOfVoice: return "tone_of_voice";
        case InfoCategory::AccurateDialogue: return "accurate_dialogue";
        case InfoCategory::ContentsOfConversation: return "contents_of_conversation";
        case InfoCategory::OtherInformation: return "other_information";
    }
    return "?";
}

std::optional<InfoCategory> parse_category(std::string_view text) {
    const auto key = fold_plural(normalize(text));
    if (key.empty()) return std::nullopt;
    const auto& table = alias_table();
    auto it = table.find(key);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

InfoCategory parse_category_or_throw(std::string_view text) {
    if (auto c = parse_category(text)) return *c;
    throw UnknownCategory("unknown information category: \"" + std::string(text) + "\"");
}

std::optional<InfoCategory> scan_category_mention(std::string_view text) {
    std::string hay = normalize(text);
    // earliest mention wins; ties broken by longest alias
    std::size_t best_pos = std::string::npos;
    std::size_t best_len = 0;
    std::optional<InfoCategory> best;
    for (const auto& [alias, cat] : alias_table()) {
        for (std::size_t pos = hay.find(alias); pos != std::string::npos;
             pos = hay.find(alias, pos + 1)) {
            if (!word_bounded(hay, pos, alias.size())) continue;
            if (pos < best_pos || (pos == best_pos && alias.size() > best_len)) {
                best_pos = pos;
                best_len = alias.size();
                best = cat;
            }
            break;
        }
    }
    // aliases are plural-folded; fold the haystack too if nothing matched
    if (!best) {
        std::string folded = fold_plural(hay);
        if (folded != hay) {
            for (const auto& [alias, cat] : alias_table()) {
                for (std::size_t pos = folded.find(alias); pos != std::string::npos;
                     pos = folded.find(alias, pos + 1)) {
                    if (!word_bounded(folded, pos, alias.size())) continue;
                    if (pos < best_pos || (pos == best_pos && alias.size() > best_len)) {
                        best_pos = pos;
                        best_len = alias.size();
                        best = cat;
                    }
                    break;
                }
            }
        }
    }
    return best;
}

bool is_visual(InfoCategory c) {
    return std::find(kVisualSet.begin(), kVisualSet.end(), c) != kVisualSet.end();
}

bool in_additional_info_set(InfoCategory c) {
    return std::find(kAdditionalInfoSet.begin(), kAdditionalInfoSet.end(), c) !=
           kAdditionalInfoSet.end();
}

bool in_rationale_set(InfoCategory c) {
    return std::find(kRationaleSet.begin(), kRationaleSet.end(), c) != kRationaleSet.end();
}

} // namespace lvd
