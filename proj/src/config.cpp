// SPDX-License-Identifier: Apache-2.0
#include "lvd/config.hpp"

#include "lvd/digest.hpp"
#include "lvd/errors.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lvd {

using nlohmann::json;

Settings::Settings() {
    qa.model_id = "gpt-4o";
    qa.accepts_images = true;
    caption.model_id = "caption-model";
    caption.accepts_images = true;
    vqa.model_id = "vqa-model";
    vqa.accepts_images = true;
}

namespace {

std::string trim(const std::string& s) {
    const char* ws = " \t\r\n";
    auto begin = s.find_first_not_of(ws);
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(ws);
    return s.substr(begin, end - begin + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config key \"" + key + "\": expected a boolean, got \"" + value + "\"");
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long v = std::stol(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": expected an integer, got \"" + value +
                          "\"");
    }
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key \"" + key + "\": expected a number, got \"" + value +
                          "\"");
    }
}

// profile sub-keys shared by qa. / caption. / vqa.
bool apply_profile_setting(BackendProfile& profile, const std::string& key,
                           const std::string& sub, const std::string& value) {
    if (sub == "endpoint") profile.endpoint = value;
    else if (sub == "model") profile.model_id = value;
    else if (sub == "accepts_images") profile.accepts_images = parse_bool(key, value);
    else if (sub == "temperature") profile.temperature = parse_real(key, value);
    else if (sub == "max_tokens") profile.max_tokens = static_cast<int>(parse_int(key, value));
    else if (sub == "timeout_s") profile.timeout_s = parse_real(key, value);
    else if (sub == "max_retries") profile.max_retries = static_cast<int>(parse_int(key, value));
    else if (sub == "api_key_env") profile.api_key_env = value;
    else return false;
    return true;
}

json profile_echo(const BackendProfile& p) {
    return json{{"endpoint", p.endpoint},
                {"model", p.model_id},
                {"accepts_images", p.accepts_images},
                {"temperature", p.temperature},
                {"max_tokens", p.max_tokens}};
}

} // namespace

std::string interpolate_env(const std::string& value) {
    std::string out;
    for (std::size_t i = 0; i < value.size(); ++i) {
        if (value[i] == '$' && i + 1 < value.size() && value[i + 1] == '{') {
            const std::size_t close = value.find('}', i + 2);
            if (close == std::string::npos)
                throw ConfigError("unterminated ${...} in config value: " + value);
            const std::string name = value.substr(i + 2, close - i - 2);
            const char* env = std::getenv(name.c_str());
            if (env == nullptr)
                throw ConfigError("environment variable " + name +
                                  " referenced in config is not set");
            out += env;
            i = close;
        } else {
            out.push_back(value[i]);
        }
    }
    return out;
}

void apply_setting(Settings& s, const std::string& key, const std::string& raw_value) {
    const std::string value = interpolate_env(raw_value);
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
        const std::string head = key.substr(0, dot);
        const std::string sub = key.substr(dot + 1);
        BackendProfile* profile = head == "qa"      ? &s.qa
                                  : head == "caption" ? &s.caption
                                  : head == "vqa"     ? &s.vqa
                                                      : nullptr;
        if (profile && apply_profile_setting(*profile, key, sub, value)) return;
        throw ConfigError("unknown config key \"" + key + "\"");
    }

    if (key == "dataset_root") s.dataset_root = value;
    else if (key == "split") s.split = value;
    else if (key == "mode") {
        auto mode = parse_mode(value);
        if (!mode)
            throw ConfigError("config key \"mode\": expected original, with_unanswerable or "
                              "loop, got \"" + value + "\"");
        s.mode = *mode;
    } else if (key == "use_captions") s.use_captions = parse_bool(key, value);
    else if (key == "frames_k") s.frames_k = static_cast<int>(parse_int(key, value));
    else if (key == "max_extra_attempts")
        s.max_extra_attempts = static_cast<int>(parse_int(key, value));
    else if (key == "concurrency") s.concurrency = static_cast<int>(parse_int(key, value));
    else if (key == "remote_concurrency")
        s.remote_concurrency = static_cast<int>(parse_int(key, value));
    else if (key == "cache_enabled") s.cache_enabled = parse_bool(key, value);
    else if (key == "cache_dir") s.cache_dir = value;
    else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "templates") s.templates_path = value;
    else if (key == "out_dir") s.out_dir = value;
    else if (key == "annotations_dir") s.annotations_dir = value;
    else if (key == "baselines") s.baselines_path = value;
    else if (key == "mock_script") s.mock_script = value;
    else if (key == "mock_p_correct") s.mock_p_correct = parse_real(key, value);
    else if (key == "mock_p_unanswerable") s.mock_p_unanswerable = parse_real(key, value);
    else throw ConfigError("unknown config key \"" + key + "\"");
}

void load_config_file(Settings& settings, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                              ": expected key = value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        apply_setting(settings, key, value);
    }
}

ResolvedRun resolve_run(const Settings& s, const PromptTemplates& templates) {
    if (s.dataset_root.empty()) throw ConfigError("config key \"dataset_root\" is required");
    if (s.frames_k < 1) throw ConfigError("config key \"frames_k\" must be >= 1");
    if (s.max_extra_attempts < 0)
        throw ConfigError("config key \"max_extra_attempts\" must be >= 0");
    if (s.concurrency < 1) throw ConfigError("config key \"concurrency\" must be >= 1");

    const bool mocked = !s.mock_script.empty() || s.mock_p_correct >= 0.0;
    if (!s.mock_script.empty() && s.mock_p_correct >= 0.0)
        throw ConfigError("config keys \"mock_script\" and \"mock_p_correct\" are exclusive");
    if (!mocked) {
        if (s.qa.endpoint.empty()) throw ConfigError("config key \"qa.endpoint\" is required");
        if (!s.qa.accepts_images && !s.use_captions)
            throw ConfigError("config key \"use_captions\" must be true when the qa backend "
                              "does not accept images");
        if (s.use_captions && s.caption.endpoint.empty())
            throw ConfigError("config key \"caption.endpoint\" is required with use_captions");
        if (s.mode == EvalMode::Loop && s.vqa.endpoint.empty())
            throw ConfigError("config key \"vqa.endpoint\" is required in loop mode");
    }

    ResolvedRun resolved;
    RunConfig& rc = resolved.run_config;
    rc.mode = s.mode;
    rc.qa_backend = s.qa;
    rc.caption_backend = s.caption;
    rc.vqa_backend = s.vqa;
    rc.use_captions = s.use_captions;
    rc.frames_k = s.frames_k;
    rc.max_extra_attempts = s.max_extra_attempts;
    rc.concurrency = s.concurrency;
    rc.cache_enabled = s.cache_enabled;
    rc.seed = s.seed;

    std::string mock_kind = "none";
    std::string mock_script_digest;
    if (!s.mock_script.empty()) {
        mock_kind = "scripted";
        std::ifstream in(s.mock_script, std::ios::binary);
        if (!in) throw ConfigError("cannot read mock script: " + s.mock_script);
        std::ostringstream bytes;
        bytes << in.rdbuf();
        mock_script_digest = sha256_hex(bytes.str());
    } else if (s.mock_p_correct >= 0.0) {
        mock_kind = "statistical";
    }

    std::string model_label = s.qa.model_id;
    if (mock_kind == "scripted") model_label = "scripted-mock";
    else if (mock_kind == "statistical") model_label = "statistical-mock";
    resolved.run_label = model_label + " (" + std::string(mode_setting_label(s.mode)) + ")";
    const bool image_mode = (mocked || s.qa.accepts_images) && !s.use_captions;
    resolved.input_label = image_mode ? "img+trans" : "cap+trans";

    // worker count and cache settings are deliberately excluded: they may
    // not affect the result bytes
    resolved.config_echo =
        json{{"dataset_root", s.dataset_root},
             {"split", s.split},
             {"mode", std::string(mode_name(s.mode))},
             {"use_captions", s.use_captions},
             {"frames_k", s.frames_k},
             {"max_extra_attempts", s.max_extra_attempts},
             {"seed", s.seed},
             {"templates_digest", templates.digest()},
             {"mock", mock_kind},
             {"mock_script", s.mock_script},
             {"mock_script_digest", mock_script_digest},
             {"mock_p_correct", s.mock_p_correct},
             {"mock_p_unanswerable", s.mock_p_unanswerable},
             {"label", resolved.run_label},
             {"input", resolved.input_label},
             {"qa", profile_echo(s.qa)},
             {"caption", profile_echo(s.caption)},
             {"vqa", profile_echo(s.vqa)}};
    resolved.config_digest = sha256_hex(resolved.config_echo.dump());
    return resolved;
}

} // namespace lvd
