// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/dataset.hpp"
#include "lvd/engine.hpp"
#include "lvd/metrics.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lvd {

/// Reference numbers copied verbatim from configuration into the baseline
/// comparison table; never computed.
struct BaselineRow {
    std::string name;
    std::string modality;
    std::string accuracy;
};

std::vector<BaselineRow> load_baselines(const std::filesystem::path& file);

struct RunForReport {
    std::string label;       // e.g. "gpt-4o (LVD)"
    std::string input_label; // e.g. "img+trans"
    OutcomeCounts counts;
    std::vector<QuestionResult> results;
};

struct AnnotationData {
    std::vector<HumanAnnotation> video_only;
    std::vector<HumanAnnotation> transcript_only;
};

struct ReportInputs {
    std::vector<RunForReport> runs;
    std::optional<AnnotationData> annotations;
    std::map<std::string, int> correct_idx_by_qid; // answer key for human rows
    std::vector<BaselineRow> baselines;
};

struct ReportBundle {
    std::vector<std::filesystem::path> files_written;
    nlohmann::json summary;
};

/// Write the report bundle under out_dir:
///   tables/accuracy.csv            one row per run (paper-style counts)
///   tables/baselines.csv           when baselines are configured
///   tables/human_comparison.csv    when annotations + answer key are given
///   tables/iou.csv                 reference-time agreement per run/condition
///   distributions/*.csv            per-category human vs model frequencies
///   summary.json                   normalized-L1 distances, notes, file list
/// Output is deterministic: identical inputs produce byte-identical files.
ReportBundle render_report(const ReportInputs& inputs, const std::filesystem::path& out_dir);

} // namespace lvd
