// SPDX-License-Identifier: Apache-2.0
//
// lvd — batch evaluation harness for answerability-gated multiple-choice
// video QA with looped additional-information retrieval.
//
// Subcommands: validate, run, report, compare, cache {stats, clear}.
// Exit codes: 0 success, 1 validation findings, 2 I/O, 3 incomplete run,
// 4 usage/config error.

#include "lvd/cache.hpp"
#include "lvd/config.hpp"
#include "lvd/dataset.hpp"
#include "lvd/engine.hpp"
#include "lvd/errors.hpp"
#include "lvd/metrics.hpp"
#include "lvd/report.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <utility>
#include <vector>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFindings = 1;
constexpr int kExitIo = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitUsage = 4;

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& root, const std::string& split) {
    lvd::Dataset dataset;
    const lvd::ValidationReport report = lvd::scan_dataset(root, split, &dataset);
    std::cout << "dataset " << root << " split " << split << ": "
              << dataset.manifest.video_ids.size() << " videos, "
              << dataset.manifest.question_count << " questions\n";
    for (const auto& finding : report.findings) {
        std::cout << (finding.severity == lvd::Severity::Error ? "ERROR  " : "WARN   ")
                  << finding.code << "  [" << finding.subject << "] " << finding.message
                  << "\n";
    }
    std::cout << report.findings.size() << " finding(s)\n";
    return report.has_errors() ? kExitFindings : kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

lvd::MockScript mock_script_from_json(const json& j) {
    lvd::MockScript script;
    if (j.contains("default")) script.default_reply = j.at("default").get<std::string>();
    if (j.contains("replies"))
        for (const auto& [tag, text] : j.at("replies").items())
            script.replies[tag] = text.get<std::string>();
    return script;
}

lvd::BackendSet build_backends(const lvd::Settings& settings, const lvd::Dataset& dataset) {
    lvd::BackendSet set;
    if (!settings.mock_script.empty()) {
        std::ifstream in(settings.mock_script);
        if (!in) throw lvd::ConfigError("cannot read mock script: " + settings.mock_script);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw lvd::ConfigError("mock script " + settings.mock_script + ": " + e.what());
        }
        auto section = [&](const char* name) {
            return j.contains(name) ? mock_script_from_json(j.at(name)) : lvd::MockScript{};
        };
        set.qa = std::make_shared<lvd::ScriptedMockBackend>(section("qa"));
        set.caption = std::make_shared<lvd::ScriptedMockBackend>(section("caption"));
        set.vqa = std::make_shared<lvd::ScriptedMockBackend>(section("vqa"));
    } else if (settings.mock_p_correct >= 0.0) {
        std::map<std::string, int> answer_key;
        for (const auto& qa : dataset.questions) answer_key[qa.qid] = qa.correct_idx;
        lvd::StatisticalMockParams params;
        params.p_correct = settings.mock_p_correct;
        params.p_unanswerable = settings.mock_p_unanswerable;
        params.seed = settings.seed;
        set.qa = std::make_shared<lvd::StatisticalMockBackend>(params, std::move(answer_key));
        set.caption = std::make_shared<lvd::ScriptedMockBackend>(
            lvd::MockScript{{}, "a frame from the video"});
        set.vqa = std::make_shared<lvd::ScriptedMockBackend>(
            lvd::MockScript{{}, "a generic visual description"});
    } else {
        lvd::ConcurrencyLimiter::global()->set_limit(settings.remote_concurrency);
        auto make_http = [](const lvd::BackendProfile& profile, const char* role) {
            if (!profile.api_key_env.empty() &&
                std::getenv(profile.api_key_env.c_str()) == nullptr)
                throw lvd::ConfigError(std::string(role) + ".api_key_env names " +
                                       profile.api_key_env + ", which is not set");
            return std::make_shared<lvd::HttpBackend>(profile);
        };
        set.qa = make_http(settings.qa, "qa");
        if (settings.use_captions || !settings.qa.accepts_images)
            set.caption = make_http(settings.caption, "caption");
        if (settings.mode == lvd::EvalMode::Loop)
            set.vqa = make_http(settings.vqa, "vqa");
    }

    if (settings.cache_enabled) {
        auto cache = std::make_shared<lvd::ResponseCache>(settings.cache_dir);
        auto wrap = [&](std::shared_ptr<lvd::ModelClient>& client) {
            if (client) client = std::make_shared<lvd::CachedBackend>(client, cache);
        };
        wrap(set.qa);
        wrap(set.caption);
        wrap(set.vqa);
    }
    return set;
}

int cmd_run(const lvd::Settings& settings, std::size_t limit) {
    lvd::PromptTemplates templates = settings.templates_path.empty()
                                         ? lvd::PromptTemplates::defaults()
                                         : lvd::PromptTemplates::load_file(settings.templates_path);
    const lvd::ResolvedRun resolved = lvd::resolve_run(settings, templates);

    const lvd::Dataset dataset = lvd::load_dataset(settings.dataset_root, settings.split);
    const lvd::ValidationReport report = lvd::validate_dataset(dataset);
    for (const auto& finding : report.findings)
        std::cerr << (finding.severity == lvd::Severity::Error ? "ERROR  " : "WARN   ")
                  << finding.code << "  [" << finding.subject << "] " << finding.message << "\n";
    if (report.has_errors()) {
        std::cerr << "dataset validation failed; fix the findings above or run "
                     "`lvd validate` for details\n";
        return kExitFindings;
    }

    const lvd::BackendSet backends = build_backends(settings, dataset);
    const lvd::PromptRenderer renderer(templates);

    lvd::RunInfo info;
    info.config_echo = resolved.config_echo;
    info.config_digest = resolved.config_digest;
    const fs::path out_dir = fs::path(settings.out_dir) / resolved.config_digest.substr(0, 12);

    lvd::RunControl control;
    control.limit = limit;

    const lvd::RunResult result = lvd::run_split(dataset, resolved.run_config, backends,
                                                 renderer, out_dir, info, control);

    const auto& s = result.summary;
    std::cout << "run " << result.run_id << " (" << resolved.run_label << ", "
              << resolved.input_label << ")\n"
              << "  processed " << s.processed << "/" << s.question_count << " questions\n"
              << "  correct " << s.correct << "  wrong " << s.wrong << "  unanswerable "
              << s.unanswerable << "  no_answer " << s.no_answer << "\n";
    const long total = s.correct + s.wrong + s.unanswerable + s.no_answer;
    if (total > 0) {
        std::cout << "  accuracy overall  " << lvd::format_percent(s.correct, total) << "\n";
        if (total - s.unanswerable > 0)
            std::cout << "  accuracy answered " << lvd::format_percent(s.correct, total - s.unanswerable)
                      << "\n";
    }
    std::cout << "  results: " << out_dir.string() << "\n";
    if (!s.complete) {
        std::cout << "  run incomplete; rerun the same command to resume\n";
        return kExitIncomplete;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report / compare
// ---------------------------------------------------------------------------

std::optional<lvd::AnnotationData> load_annotation_dir(const std::string& dir) {
    if (dir.empty()) return std::nullopt;
    lvd::AnnotationData data;
    const fs::path video_file = fs::path(dir) / "video_only.jsonl";
    const fs::path transcript_file = fs::path(dir) / "transcript_only.jsonl";
    bool any = false;
    if (fs::exists(video_file)) {
        data.video_only = lvd::load_annotations(video_file);
        any = true;
    }
    if (fs::exists(transcript_file)) {
        data.transcript_only = lvd::load_annotations(transcript_file);
        any = true;
    }
    if (!any)
        throw lvd::MissingInput("no video_only.jsonl or transcript_only.jsonl under " + dir);
    return data;
}

struct LoadedRunDir {
    lvd::PersistedRun run;
    std::string label;
    std::string input_label;
    std::string dataset_root;
    std::string split;
};

LoadedRunDir load_run_dir(const std::string& dir) {
    LoadedRunDir loaded;
    loaded.run = lvd::load_run(dir);
    const json& config = loaded.run.manifest.value("config", json::object());
    loaded.label = config.value("label", fs::path(dir).filename().string());
    loaded.input_label = config.value("input", "img+trans");
    loaded.dataset_root = config.value("dataset_root", "");
    loaded.split = config.value("split", "validation");
    return loaded;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& annotations_dir,
               const std::string& baselines_path, const std::string& dataset_root_override,
               const std::string& out_dir, bool require_annotations) {
    lvd::ReportInputs inputs;
    std::string dataset_root = dataset_root_override;
    std::string split = "validation";

    for (const std::string& dir : run_dirs) {
        LoadedRunDir loaded = load_run_dir(dir);
        if (!loaded.run.complete) {
            std::cerr << "run " << dir << " is incomplete; missing "
                      << loaded.run.missing_qids.size() << " question(s):";
            for (std::size_t i = 0; i < loaded.run.missing_qids.size() && i < 10; ++i)
                std::cerr << ' ' << loaded.run.missing_qids[i];
            if (loaded.run.missing_qids.size() > 10) std::cerr << " ...";
            std::cerr << "\n";
            return kExitIncomplete;
        }
        lvd::RunForReport run;
        run.label = loaded.label;
        run.input_label = loaded.input_label;
        run.results = std::move(loaded.run.results);
        run.counts = lvd::tally(run.results);
        inputs.runs.push_back(std::move(run));
        if (dataset_root.empty()) {
            dataset_root = loaded.dataset_root;
            split = loaded.split;
        }
    }

    inputs.annotations = load_annotation_dir(annotations_dir);
    if (require_annotations && !inputs.annotations)
        throw lvd::ConfigError("--annotations is required for compare");

    if (inputs.annotations && !dataset_root.empty()) {
        const fs::path qa_file = fs::path(dataset_root) / split / "qa.jsonl";
        if (fs::exists(qa_file)) {
            for (const auto& qa : lvd::load_qa_records(qa_file))
                inputs.correct_idx_by_qid[qa.qid] = qa.correct_idx;
        } else {
            std::cerr << "warning: answer key " << qa_file.string()
                      << " not found; human accuracy rows omitted\n";
        }
    }

    if (!baselines_path.empty()) inputs.baselines = lvd::load_baselines(baselines_path);

    const lvd::ReportBundle bundle = lvd::render_report(inputs, out_dir);
    for (const auto& file : bundle.files_written) std::cout << "wrote " << file.string() << "\n";
    if (bundle.summary.contains("l1_distance")) {
        for (const auto& [label, values] : bundle.summary.at("l1_distance").items()) {
            for (const auto& [kind, value] : values.items()) {
                std::cout << "L1(" << kind << ", " << label << ") = ";
                if (value.is_null()) std::cout << "n/a";
                else std::cout << lvd::format_fixed(value.get<double>(), 4);
                std::cout << "\n";
            }
        }
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// cache
// ---------------------------------------------------------------------------

int cmd_cache_stats(const std::string& cache_dir) {
    lvd::ResponseCache cache{fs::path(cache_dir)};
    const auto stats = cache.stats();
    std::cout << "cache " << cache_dir << ": " << stats.entries << " entries, " << stats.bytes
              << " bytes\n";
    return kExitOk;
}

int cmd_cache_clear(const std::string& cache_dir) {
    lvd::ResponseCache cache{fs::path(cache_dir)};
    std::cout << "removed " << cache.clear() << " entries from " << cache_dir << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lvd: answerability-gated video QA evaluation harness"};
    app.require_subcommand(1);

    // --- validate ---
    auto* validate = app.add_subcommand("validate", "check a dataset tree for defects");
    std::string v_root, v_split = "validation";
    validate->add_option("--root", v_root, "dataset root directory")->required();
    validate->add_option("--split", v_split, "split label (default: validation)");

    // --- run ---
    auto* run = app.add_subcommand("run", "execute an evaluation run");
    std::string run_config_path;
    run->add_option("--config", run_config_path, "config file (key = value lines)");
    std::vector<std::pair<std::string, std::string>> pending; // (key, value) from flags
    auto add_kv_option = [&pending](CLI::App* cmd, const std::string& flag,
                                    const std::string& key, const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&pending, key](const std::string& value) { pending.emplace_back(key, value); },
            help);
    };
    add_kv_option(run, "--root", "dataset_root", "dataset root directory");
    add_kv_option(run, "--split", "split", "split label");
    add_kv_option(run, "--mode", "mode", "original | with_unanswerable | loop");
    add_kv_option(run, "--use-captions", "use_captions", "true/false: caption substitution");
    add_kv_option(run, "--frames-k", "frames_k", "frames sampled per video");
    add_kv_option(run, "--max-extra-attempts", "max_extra_attempts", "retry budget per question");
    add_kv_option(run, "--concurrency", "concurrency", "worker threads");
    add_kv_option(run, "--remote-concurrency", "remote_concurrency",
                  "max concurrent remote requests");
    add_kv_option(run, "--cache", "cache_enabled", "true/false: response cache");
    add_kv_option(run, "--cache-dir", "cache_dir", "response cache directory");
    add_kv_option(run, "--seed", "seed", "seed for the statistical mock");
    add_kv_option(run, "--templates", "templates", "prompt template override file");
    add_kv_option(run, "--out", "out_dir", "parent directory for run results");
    add_kv_option(run, "--mock", "mock_script", "scripted mock backend file");
    add_kv_option(run, "--mock-p", "mock_p_correct", "statistical mock accuracy");
    add_kv_option(run, "--mock-p-unanswerable", "mock_p_unanswerable",
                  "statistical mock unanswerable rate");
    for (const char* role : {"qa", "caption", "vqa"}) {
        for (const char* sub : {"endpoint", "model", "accepts_images", "temperature",
                                "max_tokens", "timeout_s", "max_retries", "api_key_env"}) {
            std::string flag = std::string("--") + role + "-" + sub;
            std::replace(flag.begin(), flag.end(), '_', '-');
            add_kv_option(run, flag, std::string(role) + "." + sub,
                          std::string(role) + " backend " + sub);
        }
    }
    std::size_t run_limit = SIZE_MAX;
    run->add_option("--limit", run_limit,
                    "process at most N pending questions, then stop (smoke runs)");

    // --- report ---
    auto* report = app.add_subcommand("report", "render tables from run results");
    std::vector<std::string> report_runs;
    std::string report_annotations, report_baselines, report_out = "report",
                report_dataset_root;
    report->add_option("runs", report_runs, "run result directories")->required();
    report->add_option("--annotations", report_annotations,
                       "directory with <condition>.jsonl annotation files");
    report->add_option("--baselines", report_baselines, "baseline numbers JSON file");
    report->add_option("--dataset-root", report_dataset_root,
                       "answer-key dataset root (default: from run manifest)");
    report->add_option("--out", report_out, "report output directory");

    // --- compare ---
    auto* compare = app.add_subcommand("compare", "human vs model distributions and IoU");
    std::string compare_run, compare_annotations, compare_out = "report",
                compare_dataset_root;
    compare->add_option("--run", compare_run, "run result directory")->required();
    compare->add_option("--annotations", compare_annotations, "annotation directory")
        ->required();
    compare->add_option("--dataset-root", compare_dataset_root, "answer-key dataset root");
    compare->add_option("--out", compare_out, "output directory");

    // --- cache ---
    auto* cache = app.add_subcommand("cache", "inspect or clear the response cache");
    cache->require_subcommand(1);
    std::string cache_dir = ".lvd_cache";
    auto* cache_stats = cache->add_subcommand("stats", "entry count and size");
    auto* cache_clear = cache->add_subcommand("clear", "remove all entries");
    cache_stats->add_option("--cache-dir", cache_dir, "cache directory");
    cache_clear->add_option("--cache-dir", cache_dir, "cache directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(v_root, v_split);
        if (run->parsed()) {
            lvd::Settings settings;
            if (!run_config_path.empty()) lvd::load_config_file(settings, run_config_path);
            for (const auto& [key, value] : pending) lvd::apply_setting(settings, key, value);
            return cmd_run(settings, run_limit);
        }
        if (report->parsed())
            return cmd_report(report_runs, report_annotations, report_baselines,
                              report_dataset_root, report_out, false);
        if (compare->parsed())
            return cmd_report({compare_run}, compare_annotations, "", compare_dataset_root,
                              compare_out, true);
        if (cache_stats->parsed()) return cmd_cache_stats(cache_dir);
        if (cache_clear->parsed()) return cmd_cache_clear(cache_dir);
        std::cerr << "no subcommand\n";
        return kExitUsage;
    } catch (const lvd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lvd::MissingFile& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const lvd::MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const lvd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitIo;
    }
}
