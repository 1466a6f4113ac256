// SPDX-License-Identifier: Apache-2.0
#include "lvd/templates.hpp"

#include "lvd/digest.hpp"
#include "lvd/errors.hpp"

#include <fstream>
#include <sstream>

namespace lvd {

namespace {

const char* kSystem =
    "You are a careful analyst of social interactions in short videos. "
    "Answer multiple-choice questions about what the people in the video feel, "
    "intend and do. Follow the required reply format exactly.";

const char* kFirstAttemptOriginal = R"(Consider the video context below and answer the multiple-choice question.

{frames}

Dialogue transcript (times in seconds):
{transcript}

Question: {question}
Options:
{options}

Reply in exactly this format:
DECISION: answer
CHOICE: <one of A, B, C, D>
RATIONALE_CATEGORY: <one or more of: {rationale_list}; comma-separated>
REASON: <one sentence explaining your choice>

You must choose exactly one of A, B, C or D.)";

const char* kFirstAttemptUnanswerable = R"(Consider the video context below and answer the multiple-choice question.

{frames}

Dialogue transcript (times in seconds):
{transcript}

Question: {question}
Options:
{options}

First decide whether the context above is sufficient to answer the question.

If it is sufficient, reply in exactly this format:
DECISION: answer
CHOICE: <one of A, B, C, D>
RATIONALE_CATEGORY: <one or more of: {rationale_list}; comma-separated>
REASON: <one sentence explaining your choice>

If it is NOT sufficient, treat the question as unanswerable: name the additional information you would need, choosing exactly one category from: {category_list}. Also give the time segment of the video that information should come from, as integer start and end seconds based on the transcript timestamps. Reply in exactly this format:
DECISION: unanswerable
NEEDED: <one category from the list above>
SEGMENT: <start seconds> <end seconds>)";

const char* kRetry = R"(=== Additional information ===
{extra_info}
=== End additional information ===

Using the additional information above together with the original context, answer the question again in the same reply format. The unanswerable option is still available if the context remains insufficient.)";

const char* kVqaSceneContext =
    "Describe the overall scene in this video frame: the location, the setting, "
    "the time of day and what is happening around the people.";

const char* kVqaAppearance =
    "Describe the appearance of each visible person in this video frame: "
    "clothing, approximate age, physical features and anything distinctive "
    "they wear or carry.";

const char* kVqaFacialExpressions =
    "Describe the facial expression of each visible person in this video frame "
    "and the emotion it suggests.";

const char* kVqaMotion =
    "Describe the body movements, gestures and posture of each visible person "
    "in this video frame.";

const char* kCaption = "Describe this video frame in one concise sentence.";

} // namespace

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.set("system", kSystem);
    t.set("first_attempt.original", kFirstAttemptOriginal);
    t.set("first_attempt.unanswerable", kFirstAttemptUnanswerable);
    t.set("retry", kRetry);
    t.set("vqa.scene_context", kVqaSceneContext);
    t.set("vqa.appearance", kVqaAppearance);
    t.set("vqa.facial_expressions", kVqaFacialExpressions);
    t.set("vqa.motion", kVqaMotion);
    t.set("caption", kCaption);
    return t;
}

PromptTemplates PromptTemplates::load_file(const std::filesystem::path& path,
                                           bool merge_defaults) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("missing template file: " + path.string());

    PromptTemplates result = merge_defaults ? defaults() : PromptTemplates{};

    std::string line, key, body;
    bool in_section = false;
    auto flush = [&] {
        if (!in_section) return;
        // trim surrounding blank lines
        std::size_t begin = body.find_first_not_of('\n');
        std::size_t end = body.find_last_not_of(" \t\n\r");
        result.set(key, begin == std::string::npos ? "" : body.substr(begin, end - begin + 1));
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.size() >= 2 && line.front() == '[' && line.back() == ']') {
            flush();
            key = line.substr(1, line.size() - 2);
            if (key.empty()) throw TemplateError(path.string() + ": empty template key");
            body.clear();
            in_section = true;
            continue;
        }
        if (!in_section) {
            if (line.empty() || line[0] == '#') continue;
            throw TemplateError(path.string() + ": content before first [key] header");
        }
        body += line;
        body += '\n';
    }
    flush();
    return result;
}

const std::string& PromptTemplates::text(std::string_view key) const {
    auto it = templates_.find(std::string(key));
    if (it == templates_.end())
        throw TemplateError("no template for key \"" + std::string(key) + "\"");
    return it->second;
}

bool PromptTemplates::has(std::string_view key) const {
    return templates_.count(std::string(key)) > 0;
}

void PromptTemplates::set(std::string key, std::string body) {
    templates_[std::move(key)] = std::move(body);
}

std::string PromptTemplates::digest() const {
    std::ostringstream all;
    for (const auto& [key, body] : templates_)
        all << key << '\x1f' << body << '\x1e';
    return sha256_hex(all.str());
}

std::string PromptTemplates::render(std::string_view tmpl,
                                    const std::map<std::string, std::string>& vars) {
    std::string out;
    out.reserve(tmpl.size());
    for (std::size_t i = 0; i < tmpl.size(); ++i) {
        char c = tmpl[i];
        if (c == '{') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '{') {
                out.push_back('{');
                ++i;
                continue;
            }
            std::size_t close = tmpl.find('}', i + 1);
            if (close == std::string_view::npos)
                throw TemplateError("unbalanced '{' in template");
            std::string name(tmpl.substr(i + 1, close - i - 1));
            auto it = vars.find(name);
            if (it == vars.end())
                throw TemplateError("unknown placeholder \"{" + name + "}\" in template");
            out += it->second;
            i = close;
        } else if (c == '}') {
            if (i + 1 < tmpl.size() && tmpl[i + 1] == '}') {
                out.push_back('}');
                ++i;
                continue;
            }
            throw TemplateError("unbalanced '}' in template");
        } else {
            out.push_back(c);
        }
    }
    return out;
}

} // namespace lvd
