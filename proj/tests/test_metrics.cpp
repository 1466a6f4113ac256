// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lvd/errors.hpp"
#include "lvd/metrics.hpp"
#include "lvd/report.hpp"
#include "support/fixtures.hpp"

#include <cmath>
#include <fstream>
#include <random>

using namespace lvd;
using lvd::testing::TempDir;

namespace {

// published (correct, wrong, unanswerable) rows with both accuracies
struct PublishedRow {
    const char* label;
    long correct, wrong, unanswerable;
    double overall_pct, answered_pct;
};

constexpr PublishedRow kAccuracyRows[] = {
    {"llama3/original", 425, 382, 0, 52.66, 52.66},
    {"llama3/unanswerable", 330, 213, 264, 40.89, 60.77},
    {"llama3/loop", 421, 260, 126, 52.17, 61.82},
    {"gpt4/original", 541, 266, 0, 67.04, 67.04},
    {"gpt4/unanswerable", 334, 104, 369, 41.39, 76.26},
    {"gpt4/loop", 372, 124, 311, 46.09, 75.00},
    {"gpt4o/original", 607, 200, 0, 75.22, 75.22},
    {"gpt4o/unanswerable", 581, 182, 44, 72.00, 76.15},
    {"gpt4o/loop", 601, 194, 12, 74.47, 75.60},
    {"human/trans", 488, 146, 663, 37.63, 76.97},
    {"human/video", 997, 178, 122, 76.87, 84.85},
    {"llama3/sub", 669, 360, 268, 51.58, 65.01},
    {"gpt4/sub", 688, 235, 374, 53.05, 74.54},
    {"gpt4o/sub", 940, 332, 25, 72.47, 73.90},
};

} // namespace

TEST_CASE("compute_accuracy reproduces every published row within 0.01 pp") {
    for (const auto& row : kAccuracyRows) {
        INFO("row " << row.label);
        const OutcomeCounts counts{row.correct, row.wrong, row.unanswerable, 0};
        const AccuracySummary summary = compute_accuracy(counts);
        CHECK(std::abs(summary.overall * 100.0 - row.overall_pct) <= 0.01);
        REQUIRE(summary.answered.has_value());
        CHECK(std::abs(*summary.answered * 100.0 - row.answered_pct) <= 0.01);
    }
}

TEST_CASE("accuracy degenerate cases") {
    CHECK_THROWS_AS(compute_accuracy({0, 0, 0, 0}), EmptyCounts);
    const AccuracySummary all_unanswerable = compute_accuracy({0, 0, 5, 0});
    CHECK(all_unanswerable.overall == 0.0);
    CHECK_FALSE(all_unanswerable.answered.has_value()); // undefined, not zero
}

TEST_CASE("no_answer counts in both denominators") {
    // 94 of 807 unanswered-and-scored-incorrect alongside 425 correct
    const AccuracySummary summary = compute_accuracy({425, 288, 0, 94});
    CHECK(std::abs(summary.overall * 100.0 - 52.66) <= 0.01);
    REQUIRE(summary.answered.has_value());
    CHECK(std::abs(*summary.answered * 100.0 - 52.66) <= 0.01);
}

TEST_CASE("interval_iou examples") {
    CHECK(interval_iou({10, 30}, {10, 30}) == 1.0);
    CHECK(interval_iou({0, 10}, {20, 30}) == 0.0);
    CHECK(interval_iou({10, 30}, {20, 40}) == doctest::Approx(10.0 / 30.0));
    CHECK(interval_iou({5, 5}, {5, 5}) == 1.0);  // identical zero-length
    CHECK(interval_iou({5, 5}, {7, 7}) == 0.0);  // distinct zero-length
    CHECK(interval_iou({5, 5}, {0, 10}) == 0.0); // zero measure against anything
}

TEST_CASE("interval_iou properties over random intervals") {
    std::mt19937 rng(17);
    std::uniform_int_distribution<int> point(0, 120);
    std::uniform_int_distribution<int> shift(-40, 40);
    for (int trial = 0; trial < 5000; ++trial) {
        auto make = [&] {
            int a = point(rng), b = point(rng);
            if (a > b) std::swap(a, b);
            return std::make_pair<double, double>(a, b);
        };
        const auto x = make();
        const auto y = make();
        const double iou = interval_iou(x, y);
        CHECK(iou >= 0.0);
        CHECK(iou <= 1.0);
        CHECK(interval_iou(y, x) == iou); // symmetric
        const double t = shift(rng);
        CHECK(interval_iou({x.first + t, x.second + t}, {y.first + t, y.second + t}) ==
              doctest::Approx(iou).epsilon(1e-12)); // translation invariant
        if (x == y) CHECK(iou == 1.0);
        if (iou == 1.0 && x.second > x.first) CHECK(x == y);
    }
}

TEST_CASE("iou_report joins by qid and averages") {
    std::vector<SegmentSample> predicted = {
        {"q1", {10, 30}}, {"q2", {0, 10}}, {"q3", {10, 30}}, {"q9", {0, 1}}};
    std::vector<SegmentSample> reference = {
        {"q1", {10, 30}},  // IoU 1.0
        {"q2", {5, 15}},   // IoU 5/15
        {"q3", {40, 60}},  // IoU 0.0
    };
    const IoUStats stats = iou_report(predicted, reference);
    CHECK(stats.sample_count == 3);
    CHECK(stats.mean_iou == doctest::Approx((1.0 + 5.0 / 15.0 + 0.0) / 3.0));
    CHECK(stats.avg_len_predicted == doctest::Approx((20 + 10 + 20) / 3.0));
    CHECK(stats.avg_len_annotated == doctest::Approx((20 + 10 + 20) / 3.0));

    CHECK_THROWS_AS(iou_report(predicted, {{"zz", {0, 1}}}), NoOverlapPairs);
    CHECK_THROWS_AS(iou_report({}, reference), NoOverlapPairs);
}

TEST_CASE("perfect prediction recovers mean 1.0 and equal lengths") {
    std::vector<SegmentSample> samples;
    for (int i = 0; i < 40; ++i)
        samples.push_back({"q" + std::to_string(i),
                           {static_cast<double>(i), static_cast<double>(i + 10 + i % 3)}});
    const IoUStats stats = iou_report(samples, samples);
    CHECK(stats.mean_iou == 1.0);
    CHECK(stats.avg_len_predicted == stats.avg_len_annotated);
}

TEST_CASE("category_distribution counting rules") {
    const std::vector<InfoCategory> rationale_set(kRationaleSet.begin(), kRationaleSet.end());
    std::vector<std::set<InfoCategory>> records(3, {InfoCategory::ContentsOfConversation});
    auto dist = category_distribution(records, rationale_set);
    CHECK(dist.counts.at(InfoCategory::ContentsOfConversation) == 3);
    CHECK(dist.total == 3);

    records.push_back({InfoCategory::SceneContext, InfoCategory::Motion});
    dist = category_distribution(records, rationale_set);
    CHECK(dist.counts.at(InfoCategory::SceneContext) == 1);
    CHECK(dist.counts.at(InfoCategory::Motion) == 1);
    CHECK(dist.total == 5);

    const auto empty = category_distribution({}, rationale_set);
    CHECK(empty.total == 0);
    for (InfoCategory c : rationale_set) CHECK(empty.counts.at(c) == 0);

    // AccurateDialogue is outside the rationale set
    CHECK_THROWS_AS(
        category_distribution({{InfoCategory::AccurateDialogue}}, rationale_set),
        UnknownCategory);
}

TEST_CASE("distribution_l1 examples and properties") {
    const std::vector<InfoCategory> set = {InfoCategory::SceneContext, InfoCategory::Motion};
    auto make = [&](long x, long y) {
        CategoryDistribution d;
        d.category_set = set;
        d.counts[InfoCategory::SceneContext] = x;
        d.counts[InfoCategory::Motion] = y;
        d.total = x + y;
        return d;
    };
    CHECK(distribution_l1(make(3, 1), make(3, 1)) == 0.0);
    CHECK(distribution_l1(make(4, 0), make(0, 4)) == 2.0);
    CHECK(distribution_l1(make(3, 1), make(1, 3)) == doctest::Approx(1.0));
    CHECK_THROWS_AS(distribution_l1(make(0, 0), make(1, 1)), EmptyDistribution);

    // triangle inequality over random distributions
    std::mt19937 rng(5);
    std::uniform_int_distribution<long> count(0, 20);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto a = make(count(rng) + 1, count(rng));
        const auto b = make(count(rng) + 1, count(rng));
        const auto c = make(count(rng) + 1, count(rng));
        CHECK(distribution_l1(a, c) <=
              distribution_l1(a, b) + distribution_l1(b, c) + 1e-12);
    }
}

TEST_CASE("format_percent rounds half-up to two decimals") {
    CHECK(format_percent(601, 807) == "74.47%");
    CHECK(format_percent(601, 795) == "75.60%");
    CHECK(format_percent(1, 3) == "33.33%");
    CHECK(format_percent(1, 800) == "0.13%"); // 0.125 rounds up
    CHECK(format_percent(0, 5) == "0.00%");
    CHECK(format_percent(5, 5) == "100.00%");
    CHECK(format_percent(1, 0) == "n/a");
}

TEST_CASE("render_report: accuracy row matches the published loop numbers") {
    ReportInputs inputs;
    RunForReport run;
    run.label = "gpt-4o (LVD)";
    run.input_label = "img+trans";
    run.counts = {601, 194, 12, 0};
    inputs.runs.push_back(run);

    TempDir out;
    render_report(inputs, out.path() / "report");
    const std::string csv = lvd::testing::slurp(out.path() / "report/tables/accuracy.csv");
    CHECK(csv.find("gpt-4o (LVD),601,194,12,74.47%,75.60%") != std::string::npos);
}

TEST_CASE("render_report without annotations omits the dependent tables") {
    ReportInputs inputs;
    RunForReport run;
    run.label = "mock";
    run.input_label = "img+trans";
    run.counts = {1, 1, 0, 0};
    inputs.runs.push_back(run);

    TempDir out;
    const ReportBundle bundle = render_report(inputs, out.path() / "report");
    CHECK(std::filesystem::exists(out.path() / "report/tables/accuracy.csv"));
    CHECK_FALSE(std::filesystem::exists(out.path() / "report/tables/human_comparison.csv"));
    CHECK_FALSE(std::filesystem::exists(out.path() / "report/tables/iou.csv"));
    CHECK_FALSE(std::filesystem::exists(out.path() / "report/distributions"));
    bool noted = false;
    for (const auto& note : bundle.summary.at("notes"))
        if (note.get<std::string>().find("annotations not supplied") != std::string::npos)
            noted = true;
    CHECK(noted);
}

TEST_CASE("render_report is byte-deterministic") {
    ReportInputs inputs;
    RunForReport run;
    run.label = "mock (LVD)";
    run.input_label = "img+trans";
    run.counts = {5, 3, 2, 0};

    // give the run some results and annotations so every table renders
    for (int i = 0; i < 6; ++i) {
        QuestionResult qr;
        qr.qid = "q" + std::to_string(i);
        AttemptRecord attempt;
        attempt.attempt_number = 1;
        if (i % 2 == 0) {
            attempt.parsed = AnswerDecision{1, "because", {InfoCategory::SceneContext}};
            qr.final_status = FinalStatus::Correct;
            qr.final_choice = 1;
        } else {
            attempt.parsed =
                UnanswerableDecision{InfoCategory::FacialExpressions, {2 * i, 3 * i}};
            qr.final_status = FinalStatus::Unanswerable;
        }
        qr.attempts.push_back(attempt);
        run.results.push_back(qr);
    }
    inputs.runs.push_back(run);

    AnnotationData annotations;
    for (int i = 0; i < 6; ++i) {
        HumanAnnotation a;
        a.qid = "q" + std::to_string(i);
        a.condition = AnnotationCondition::VideoOnly;
        a.answerable = true;
        a.chosen_idx = 1;
        a.categories = {InfoCategory::SceneContext};
        a.segment = {{2 * i, 3 * i + 1}};
        annotations.video_only.push_back(a);
        a.condition = AnnotationCondition::TranscriptOnly;
        a.answerable = false;
        a.chosen_idx.reset();
        a.categories = {InfoCategory::FacialExpressions};
        annotations.transcript_only.push_back(a);
    }
    inputs.annotations = annotations;
    for (int i = 0; i < 6; ++i) inputs.correct_idx_by_qid["q" + std::to_string(i)] = 1;
    inputs.baselines = {{"Baseline A", "video-based", "53.4%"}};

    TempDir out;
    render_report(inputs, out.path() / "a");
    render_report(inputs, out.path() / "b");
    for (const char* rel :
         {"tables/accuracy.csv", "tables/baselines.csv", "tables/human_comparison.csv",
          "tables/iou.csv", "distributions/rationale.csv", "distributions/additional_info.csv",
          "summary.json"}) {
        INFO("file " << rel);
        CHECK(lvd::testing::slurp(out.path() / "a" / rel) ==
              lvd::testing::slurp(out.path() / "b" / rel));
    }
}

TEST_CASE("baselines load verbatim strings and numeric fallbacks") {
    TempDir dir;
    const auto file = dir.path() / "baselines.json";
    {
        std::ofstream out(file);
        out << R"([{"name":"Just Ask Plus","modality":"video-based","accuracy":"53.4%"},)"
            << R"({"name":"MMTC-ESC","modality":"video-based","accuracy":74.35}])";
    }
    const auto rows = load_baselines(file);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].accuracy == "53.4%");
    CHECK(rows[1].accuracy == "74.35%");
    CHECK_THROWS_AS(load_baselines(dir.path() / "absent.json"), MissingFile);
}
