// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/backend.hpp"
#include "lvd/engine.hpp"
#include "lvd/prompting.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lvd {

/// Fully resolved harness settings: defaults <- config file <- CLI flags.
/// The config file is `key = value` lines (# comments, blank lines ignored)
/// with ${VAR} environment interpolation inside values.
struct Settings {
    std::string dataset_root;
    std::string split = "validation";
    EvalMode mode = EvalMode::Loop;
    bool use_captions = false;
    int frames_k = 10;
    int max_extra_attempts = 1;
    int concurrency = 4;
    int remote_concurrency = 4;
    bool cache_enabled = false;
    std::string cache_dir = ".lvd_cache";
    std::uint64_t seed = 0;
    std::string templates_path;
    std::string out_dir = "results";
    std::string annotations_dir;
    std::string baselines_path;

    // mock backends (deterministic runs without a live endpoint)
    std::string mock_script;          // scripted mock: path to script JSON
    double mock_p_correct = -1.0;     // statistical mock when >= 0
    double mock_p_unanswerable = 0.0;

    BackendProfile qa;
    BackendProfile caption;
    BackendProfile vqa;

    Settings();
};

/// Apply one key/value pair (file key or flag spelling without leading
/// dashes). Throws ConfigError naming the key on unknown keys or bad values.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

/// Parse a config file into settings (on top of the given base).
void load_config_file(Settings& settings, const std::filesystem::path& path);

/// Expand ${VAR} references from the environment. Unset variables are a
/// ConfigError naming the variable.
std::string interpolate_env(const std::string& value);

/// RunConfig + canonical config echo for the run manifest. The digest is
/// worker-count- and cache-independent so reruns and resumes line up.
struct ResolvedRun {
    RunConfig run_config;
    nlohmann::json config_echo;
    std::string config_digest;
    std::string run_label;   // "gpt-4o (LVD)"
    std::string input_label; // "img+trans" / "cap+trans"
};

ResolvedRun resolve_run(const Settings& settings, const PromptTemplates& templates);

} // namespace lvd
