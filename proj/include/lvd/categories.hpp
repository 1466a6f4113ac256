// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lvd {

/// Closed taxonomy of rationale / additional-information kinds.
enum class InfoCategory {
    SceneContext,
    AppearanceOfPeople,
    FacialExpressions,
    Motion,
    ToneOfVoice,
    AccurateDialogue,
    ContentsOfConversation,
    OtherInformation,
};

inline constexpr std::array<InfoCategory, 8> kAllCategories = {
    InfoCategory::SceneContext,       InfoCategory::AppearanceOfPeople,
    InfoCategory::FacialExpressions,  InfoCategory::Motion,
    InfoCategory::ToneOfVoice,        InfoCategory::AccurateDialogue,
    InfoCategory::ContentsOfConversation, InfoCategory::OtherInformation,
};

// The six categories a model may request when declaring a question unanswerable.
inline constexpr std::array<InfoCategory, 6> kAdditionalInfoSet = {
    InfoCategory::SceneContext,      InfoCategory::AppearanceOfPeople,
    InfoCategory::FacialExpressions, InfoCategory::Motion,
    InfoCategory::ToneOfVoice,       InfoCategory::AccurateDialogue,
};

// The four categories retrievable from a single frame via VQA.
inline constexpr std::array<InfoCategory, 4> kVisualSet = {
    InfoCategory::SceneContext,      InfoCategory::AppearanceOfPeople,
    InfoCategory::FacialExpressions, InfoCategory::Motion,
};

// Evidence kinds usable to justify an answer.
inline constexpr std::array<InfoCategory, 7> kRationaleSet = {
    InfoCategory::ContentsOfConversation, InfoCategory::SceneContext,
    InfoCategory::AppearanceOfPeople,     InfoCategory::FacialExpressions,
    InfoCategory::Motion,                 InfoCategory::ToneOfVoice,
    InfoCategory::OtherInformation,
};

/// Canonical human-readable name, e.g. "facial expressions".
std::string_view category_name(InfoCategory c);

/// Stable snake_case identifier, e.g. "facial_expressions". Used in files
/// and template keys.
std::string_view category_id(InfoCategory c);

/// Parse a category from free-form text. Case-insensitive, folds
/// singular/plural ("facial expression" and "facial expressions" both map
/// to FacialExpressions) and accepts snake_case ids plus a few common
/// aliases ("dialogue", "other", ...). Returns nullopt for unknown strings.
std::optional<InfoCategory> parse_category(std::string_view text);

/// Like parse_category but throws UnknownCategory naming the input.
InfoCategory parse_category_or_throw(std::string_view text);

/// Scan arbitrary text for the first mention of any taxonomy category
/// (word-bounded alias match). Used by the tolerant reply fallback.
std::optional<InfoCategory> scan_category_mention(std::string_view text);

bool is_visual(InfoCategory c);
bool in_additional_info_set(InfoCategory c);
bool in_rationale_set(InfoCategory c);

} // namespace lvd
