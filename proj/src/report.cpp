// SPDX-License-Identifier: Apache-2.0
#include "lvd/report.hpp"

#include "lvd/errors.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace lvd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

std::string sanitize_label(const std::string& label) {
    std::string out;
    bool pending = false;
    for (char c : label) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') {
            if (pending && !out.empty()) out.push_back('_');
            pending = false;
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            pending = true;
        }
    }
    return out.empty() ? "run" : out;
}

void write_text(const fs::path& path, const std::string& content,
                std::vector<fs::path>& written) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw MissingFile("cannot write: " + path.string());
    out << content;
    written.push_back(path);
}

// paper-style row: no_answer folds into wrong, both accuracies keep it in
// the denominator
std::string accuracy_row(const std::string& model, const std::string& input,
                         const OutcomeCounts& c, bool with_input) {
    const long total = c.total();
    const long wrong_folded = c.wrong + c.no_answer;
    std::ostringstream row;
    row << csv_escape(model) << ',';
    if (with_input) row << csv_escape(input) << ',';
    row << c.correct << ',' << wrong_folded << ',' << c.unanswerable << ','
        << format_percent(c.correct, total) << ','
        << format_percent(c.correct, total - c.unanswerable);
    return row.str();
}

std::string distribution_csv(const CategoryDistribution& human,
                             const CategoryDistribution& model) {
    std::ostringstream out;
    out << "category,human_freq,model_freq,human_count,model_count\n";
    for (InfoCategory c : human.category_set) {
        const long hc = human.counts.at(c);
        const long mc = model.counts.at(c);
        const double hf = human.total > 0 ? static_cast<double>(hc) / human.total : 0.0;
        const double mf = model.total > 0 ? static_cast<double>(mc) / model.total : 0.0;
        out << csv_escape(std::string(category_name(c))) << ',' << format_fixed(hf, 4) << ','
            << format_fixed(mf, 4) << ',' << hc << ',' << mc << '\n';
    }
    return out.str();
}

} // namespace

std::vector<BaselineRow> load_baselines(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw MissingFile("missing baselines file: " + file.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw SchemaViolation(file.string() + ": invalid JSON: " + e.what());
    }
    if (!j.is_array()) throw SchemaViolation(file.string() + ": expected an array");
    std::vector<BaselineRow> rows;
    for (const auto& item : j) {
        BaselineRow row;
        row.name = item.at("name").get<std::string>();
        row.modality = item.at("modality").get<std::string>();
        const json& acc = item.at("accuracy");
        if (acc.is_string()) row.accuracy = acc.get<std::string>();
        else row.accuracy = acc.dump() + "%";
        rows.push_back(std::move(row));
    }
    return rows;
}

ReportBundle render_report(const ReportInputs& inputs, const fs::path& out_dir) {
    if (inputs.runs.empty()) throw MissingInput("report requires at least one run");

    ReportBundle bundle;
    std::vector<std::string> notes;
    json l1 = json::object();

    // (a) accuracy table, Table-II shape
    {
        std::ostringstream csv;
        csv << "model_setting,correct,wrong,unanswerable,accuracy_overall,accuracy_answered\n";
        for (const auto& run : inputs.runs)
            csv << accuracy_row(run.label, run.input_label, run.counts, false) << '\n';
        write_text(out_dir / "tables" / "accuracy.csv", csv.str(), bundle.files_written);
    }

    // (e) baseline comparison, Table-I shape, copied verbatim from config
    if (!inputs.baselines.empty()) {
        std::ostringstream csv;
        csv << "name,modality,accuracy\n";
        for (const auto& row : inputs.baselines)
            csv << csv_escape(row.name) << ',' << csv_escape(row.modality) << ','
                << csv_escape(row.accuracy) << '\n';
        write_text(out_dir / "tables" / "baselines.csv", csv.str(), bundle.files_written);
    } else {
        notes.push_back("baselines not supplied; baseline table omitted");
    }

    const bool have_annotations = inputs.annotations.has_value();
    const bool have_answer_key = !inputs.correct_idx_by_qid.empty();

    if (!have_annotations) {
        notes.push_back(
            "annotations not supplied; human comparison, reference-time and "
            "distribution tables omitted");
    }

    // (b) human-vs-model table, Table-III shape
    if (have_annotations && have_answer_key) {
        std::ostringstream csv;
        csv << "model,input,correct,wrong,unanswerable,accuracy_overall,accuracy_answered\n";
        const OutcomeCounts human_trans =
            tally_annotations(inputs.annotations->transcript_only, inputs.correct_idx_by_qid);
        const OutcomeCounts human_video =
            tally_annotations(inputs.annotations->video_only, inputs.correct_idx_by_qid);
        if (human_trans.total() > 0)
            csv << accuracy_row("Human", "trans", human_trans, true) << '\n';
        if (human_video.total() > 0)
            csv << accuracy_row("Human", "video", human_video, true) << '\n';
        for (const auto& run : inputs.runs)
            csv << accuracy_row(run.label, run.input_label, run.counts, true) << '\n';
        write_text(out_dir / "tables" / "human_comparison.csv", csv.str(),
                   bundle.files_written);
    } else if (have_annotations && !have_answer_key) {
        notes.push_back("answer key unavailable; human comparison table omitted");
    }

    // (c) reference-time agreement, Table-IV shape
    if (have_annotations) {
        std::ostringstream csv;
        csv << "model,input,iou,samples,avg_length_predicted,avg_length_annotated\n";
        bool any_row = false;
        struct ConditionRef {
            const char* label;
            const std::vector<HumanAnnotation>* annotations;
        };
        const ConditionRef conditions[] = {
            {"trans", &inputs.annotations->transcript_only},
            {"video", &inputs.annotations->video_only},
        };
        for (const auto& run : inputs.runs) {
            const auto predicted = segments_from_results(run.results);
            for (const auto& cond : conditions) {
                const auto reference = segments_from_annotations(*cond.annotations, true);
                if (predicted.empty() || reference.empty()) continue;
                try {
                    const IoUStats stats = iou_report(predicted, reference);
                    csv << csv_escape(run.label) << ',' << cond.label << ','
                        << format_fixed(stats.mean_iou, 2) << ',' << stats.sample_count << ','
                        << format_fixed(stats.avg_len_predicted, 2) << ','
                        << format_fixed(stats.avg_len_annotated, 2) << '\n';
                    any_row = true;
                } catch (const NoOverlapPairs&) {
                    // nothing joinable for this run/condition
                }
            }
        }
        if (any_row)
            write_text(out_dir / "tables" / "iou.csv", csv.str(), bundle.files_written);
        else
            notes.push_back("no joinable segment pairs; reference-time table omitted");
    }

    // (d) per-category distributions + normalized-L1 closeness
    if (have_annotations) {
        const std::vector<InfoCategory> rationale_set(kRationaleSet.begin(),
                                                      kRationaleSet.end());
        const std::vector<InfoCategory> addinfo_set(kAdditionalInfoSet.begin(),
                                                    kAdditionalInfoSet.end());
        const auto human_rationale = category_distribution(
            rationale_sets_from_annotations(inputs.annotations->video_only), rationale_set);
        const auto human_addinfo = category_distribution(
            addinfo_sets_from_annotations(inputs.annotations->transcript_only), addinfo_set);

        for (const auto& run : inputs.runs) {
            const std::string suffix =
                inputs.runs.size() > 1 ? "__" + sanitize_label(run.label) : "";
            const auto model_rationale = category_distribution(
                rationale_sets_from_results(run.results), rationale_set);
            write_text(out_dir / "distributions" / ("rationale" + suffix + ".csv"),
                       distribution_csv(human_rationale, model_rationale),
                       bundle.files_written);
            const auto model_addinfo =
                category_distribution(addinfo_sets_from_results(run.results), addinfo_set);
            write_text(out_dir / "distributions" / ("additional_info" + suffix + ".csv"),
                       distribution_csv(human_addinfo, model_addinfo), bundle.files_written);

            json run_l1 = json::object();
            try {
                run_l1["rationale"] = distribution_l1(human_rationale, model_rationale);
            } catch (const Error&) {
                run_l1["rationale"] = nullptr;
            }
            try {
                run_l1["additional_info"] = distribution_l1(human_addinfo, model_addinfo);
            } catch (const Error&) {
                run_l1["additional_info"] = nullptr;
            }
            l1[run.label] = std::move(run_l1);
        }
    }

    json files = json::array();
    for (const auto& path : bundle.files_written)
        files.push_back(fs::relative(path, out_dir).generic_string());
    bundle.summary = json{{"runs", json::array()},
                          {"files", std::move(files)},
                          {"notes", notes},
                          {"l1_distance", std::move(l1)}};
    for (const auto& run : inputs.runs) {
        bundle.summary["runs"].push_back(
            {{"label", run.label},
             {"input", run.input_label},
             {"counts",
              {{"correct", run.counts.correct},
               {"wrong", run.counts.wrong},
               {"unanswerable", run.counts.unanswerable},
               {"no_answer", run.counts.no_answer}}}});
    }
    write_text(out_dir / "summary.json", bundle.summary.dump(2) + "\n", bundle.files_written);
    return bundle;
}

} // namespace lvd
