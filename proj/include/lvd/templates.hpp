// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace lvd {

/// Keyed text templates with named placeholders.
///
/// Template file format: a line `[key]` opens a section; everything up to
/// the next section header is the template body (surrounding blank lines
/// trimmed). Lines starting with `#` before the first header are comments.
/// Placeholders are written `{name}`; `{{` and `}}` emit literal braces.
class PromptTemplates {
public:
    /// Built-in templates for every key the pipeline uses.
    static PromptTemplates defaults();

    /// Parse a template file. When merge_defaults is true (the default) the
    /// file only needs to contain the keys it overrides.
    static PromptTemplates load_file(const std::filesystem::path& path,
                                     bool merge_defaults = true);

    const std::string& text(std::string_view key) const; // throws TemplateError
    bool has(std::string_view key) const;
    void set(std::string key, std::string body);

    /// Content digest over all key/body pairs; recorded in run manifests.
    std::string digest() const;

    /// Substitute `{name}` placeholders. Unknown placeholder names or
    /// unbalanced braces raise TemplateError.
    static std::string render(std::string_view tmpl,
                              const std::map<std::string, std::string>& vars);

    const std::map<std::string, std::string>& all() const { return templates_; }

private:
    std::map<std::string, std::string> templates_;
};

} // namespace lvd
