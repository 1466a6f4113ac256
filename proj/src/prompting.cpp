// SPDX-License-Identifier: Apache-2.0
#include "lvd/prompting.hpp"

#include "lvd/digest.hpp"
#include "lvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lvd {

namespace {

// placeholder splice marker for image parts; never appears in template text
const std::string kFramesMarker = "\x01<frames>\x01";

std::string join_category_names(const auto& categories) {
    std::string out;
    for (InfoCategory c : categories) {
        if (!out.empty()) out += ", ";
        out += category_name(c);
    }
    return out;
}

std::string visual_block_for_captions(const std::vector<std::string>& captions) {
    std::ostringstream out;
    out << "Captions of " << captions.size()
        << " frames sampled evenly across the video, in order:";
    for (std::size_t i = 0; i < captions.size(); ++i)
        out << "\n" << (i + 1) << ") " << captions[i];
    return out.str();
}

} // namespace

std::string_view mode_name(EvalMode m) {
    switch (m) {
        case EvalMode::Original: return "original";
        case EvalMode::WithUnanswerable: return "with_unanswerable";
        case EvalMode::Loop: return "loop";
    }
    return "?";
}

std::optional<EvalMode> parse_mode(std::string_view text) {
    if (text == "original") return EvalMode::Original;
    if (text == "with_unanswerable" || text == "unanswerable")
        return EvalMode::WithUnanswerable;
    if (text == "loop" || text == "lvd") return EvalMode::Loop;
    return std::nullopt;
}

std::string_view mode_setting_label(EvalMode m) {
    switch (m) {
        case EvalMode::Original: return "original";
        case EvalMode::WithUnanswerable: return "w/ unanswerable";
        case EvalMode::Loop: return "LVD";
    }
    return "?";
}

std::string PromptBundle::flattened_text() const {
    std::string out = system_text;
    for (const auto& part : parts) {
        out += '\n';
        if (part.kind == Part::Kind::Text) {
            out += part.text;
        } else {
            out += "[image " + part.image.vid + "#" +
                   std::to_string(part.image.frame_index) + "]";
        }
    }
    return out;
}

std::string PromptBundle::digest() const { return sha256_hex(flattened_text()); }

std::vector<int> select_frames(int frame_count, int k) {
    if (frame_count < 1) throw PreconditionViolation("select_frames: frame_count must be >= 1");
    if (k < 1) throw PreconditionViolation("select_frames: k must be >= 1");
    std::vector<int> indices;
    indices.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const long long num = (2LL * i + 1) * frame_count;
        const int idx = static_cast<int>(num / (2LL * k));
        if (indices.empty() || indices.back() != idx) indices.push_back(idx);
    }
    return indices;
}

std::string render_transcript(const Transcript& transcript) {
    std::ostringstream out;
    bool first = true;
    for (const auto& seg : transcript.segments) {
        if (!first) out << '\n';
        first = false;
        out << '[' << std::llround(seg.start_s) << "–" << std::llround(seg.end_s) << "] "
            << seg.text;
    }
    return out.str();
}

std::string render_options(const std::vector<std::string>& options) {
    std::ostringstream out;
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i) out << '\n';
        out << static_cast<char>('A' + i) << ") " << options[i];
    }
    return out.str();
}

PromptBundle PromptRenderer::render_first_attempt(const AttemptInput& input,
                                                  EvalMode mode) const {
    const bool image_mode = std::holds_alternative<std::vector<FrameRef>>(input.visual);

    std::map<std::string, std::string> vars;
    vars["question"] = input.qa.question;
    vars["options"] = render_options(input.qa.options);
    vars["transcript"] = input.transcript_text;
    vars["rationale_list"] = join_category_names(kRationaleSet);
    if (mode != EvalMode::Original)
        vars["category_list"] = join_category_names(kAdditionalInfoSet);
    if (image_mode) {
        const auto& refs = std::get<std::vector<FrameRef>>(input.visual);
        vars["frames"] = "Frames sampled evenly across the video, in order (" +
                         std::to_string(refs.size()) + " images):" + kFramesMarker;
    } else {
        vars["frames"] =
            visual_block_for_captions(std::get<std::vector<std::string>>(input.visual));
    }

    const char* key =
        mode == EvalMode::Original ? "first_attempt.original" : "first_attempt.unanswerable";
    const std::string text = PromptTemplates::render(templates_.text(key), vars);

    PromptBundle bundle;
    bundle.system_text = templates_.text("system");

    const std::size_t marker = text.find(kFramesMarker);
    if (marker == std::string::npos) {
        if (image_mode)
            throw TemplateError("first-attempt template must contain {frames} "
                                "when the backend accepts images");
        bundle.parts.push_back({PromptBundle::Part::Kind::Text, text, {}});
    } else {
        bundle.parts.push_back(
            {PromptBundle::Part::Kind::Text, text.substr(0, marker), {}});
        for (const auto& ref : std::get<std::vector<FrameRef>>(input.visual))
            bundle.parts.push_back({PromptBundle::Part::Kind::Image, {}, ref});
        const std::string rest = text.substr(marker + kFramesMarker.size());
        if (!rest.empty())
            bundle.parts.push_back({PromptBundle::Part::Kind::Text, rest, {}});
    }
    return bundle;
}

PromptBundle PromptRenderer::render_retry(const AttemptInput& input, EvalMode mode) const {
    if (mode != EvalMode::Loop)
        throw PreconditionViolation("render_retry requires loop mode");
    if (input.extra_info.empty())
        throw PreconditionViolation("render_retry requires non-empty extra_info");

    PromptBundle bundle = render_first_attempt(input, mode);

    std::string listing;
    for (const auto& [category, description] : input.extra_info) {
        if (!listing.empty()) listing += '\n';
        listing += "[" + std::string(category_name(category)) + "] " + description;
    }
    const std::string section =
        PromptTemplates::render(templates_.text("retry"), {{"extra_info", listing}});
    bundle.parts.push_back({PromptBundle::Part::Kind::Text, section, {}});
    return bundle;
}

std::string PromptRenderer::render_vqa_prompt(InfoCategory category) const {
    switch (category) {
        case InfoCategory::SceneContext: return templates_.text("vqa.scene_context");
        case InfoCategory::AppearanceOfPeople: return templates_.text("vqa.appearance");
        case InfoCategory::FacialExpressions: return templates_.text("vqa.facial_expressions");
        case InfoCategory::Motion: return templates_.text("vqa.motion");
        default:
            throw NonVisualCategory("category \"" + std::string(category_name(category)) +
                                    "\" is not retrievable from a frame");
    }
}

std::string PromptRenderer::render_caption_prompt() const { return templates_.text("caption"); }

} // namespace lvd
