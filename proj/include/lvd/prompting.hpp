// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/categories.hpp"
#include "lvd/dataset.hpp"
#include "lvd/templates.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace lvd {

enum class EvalMode { Original, WithUnanswerable, Loop };

std::string_view mode_name(EvalMode m); // "original" / "with_unanswerable" / "loop"
std::optional<EvalMode> parse_mode(std::string_view text);

/// Table-style setting label: "original", "w/ unanswerable", "LVD".
std::string_view mode_setting_label(EvalMode m);

struct FrameRef {
    std::string vid;
    int frame_index = 0;

    bool operator==(const FrameRef&) const = default;
};

/// A rendered prompt: system text plus an ordered sequence of parts. Image
/// parts appear only when the QA backend accepts images; otherwise captions
/// are substituted as text.
struct PromptBundle {
    struct Part {
        enum class Kind { Text, Image };
        Kind kind = Kind::Text;
        std::string text; // Kind::Text
        FrameRef image;   // Kind::Image

        bool operator==(const Part&) const = default;
    };

    std::string system_text;
    std::vector<Part> parts;

    bool operator==(const PromptBundle&) const = default;

    /// All text joined with newlines, image parts rendered as placeholders.
    /// Deterministic; used for content checks and digests.
    std::string flattened_text() const;
    std::string digest() const;
};

/// Everything needed to render one QA attempt.
struct AttemptInput {
    QARecord qa;
    std::string transcript_text; // from render_transcript
    std::variant<std::vector<FrameRef>, std::vector<std::string>> visual;
    std::vector<std::pair<InfoCategory, std::string>> extra_info; // prior loop turns
};

/// Evenly spaced frame indices: index_i = floor((2i+1)*frame_count / (2k)),
/// deduplicated when frame_count < k. Strictly increasing, in range.
std::vector<int> select_frames(int frame_count, int k = 10);

/// Transcript rendered one segment per line with integer-second
/// "[start-end]" prefixes.
std::string render_transcript(const Transcript& transcript);

/// Option list rendered as "A) ..." lines.
std::string render_options(const std::vector<std::string>& options);

class PromptRenderer {
public:
    PromptRenderer() : templates_(PromptTemplates::defaults()) {}
    explicit PromptRenderer(PromptTemplates templates) : templates_(std::move(templates)) {}

    PromptBundle render_first_attempt(const AttemptInput& input, EvalMode mode) const;

    /// First-attempt bundle plus a delimited additional-information section.
    /// Requires Loop mode and non-empty extra_info.
    PromptBundle render_retry(const AttemptInput& input, EvalMode mode) const;

    /// Per-category VQA description prompt. Throws NonVisualCategory for the
    /// four non-visual categories.
    std::string render_vqa_prompt(InfoCategory category) const;

    std::string render_caption_prompt() const;

    const PromptTemplates& templates() const { return templates_; }

private:
    PromptTemplates templates_;
};

} // namespace lvd
