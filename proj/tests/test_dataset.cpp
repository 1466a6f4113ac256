// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lvd/dataset.hpp"
#include "lvd/errors.hpp"
#include "support/fixtures.hpp"

#include <json.hpp>

#include <fstream>

using namespace lvd;
using namespace lvd::testing;

TEST_CASE("loader reads back the counts the fixture generator wrote") {
    Fixture fixture = build_fixture({.videos = 2, .questions = 5});
    const Dataset ds = load_dataset(fixture.root(), "validation");
    CHECK(ds.manifest.video_ids.size() == 2);
    CHECK(ds.manifest.question_count == 5);
    CHECK(ds.questions.size() == 5);
    CHECK(ds.videos.size() == 2);
    CHECK(ds.transcripts.size() == 2);
    // records round-trip identically
    REQUIRE(ds.questions.size() == fixture.qa.size());
    for (std::size_t i = 0; i < ds.questions.size(); ++i)
        CHECK(ds.questions[i] == fixture.qa[i]);
    for (const auto& [vid, transcript] : fixture.transcripts)
        CHECK(ds.transcripts.at(vid) == transcript);
}

TEST_CASE("empty root raises MissingFile") {
    TempDir dir;
    CHECK_THROWS_AS(load_dataset(dir.path(), "validation"), MissingFile);
    CHECK_THROWS_AS(load_dataset(dir.path() / "nope", "validation"), MissingFile);
}

TEST_CASE("dangling video reference raises DanglingReference") {
    Fixture fixture = build_fixture({.videos = 1, .questions = 2});
    fixture.qa[1].vid = "v999";
    write_qa_records(fixture.root() / "validation" / "qa.jsonl", fixture.qa);
    CHECK_THROWS_AS(load_dataset(fixture.root(), "validation"), DanglingReference);
}

TEST_CASE("missing transcript raises MissingFile in strict mode") {
    Fixture fixture = build_fixture({.videos = 1, .questions = 1});
    std::filesystem::remove(fixture.root() / "videos" / "v000" / "transcript.json");
    CHECK_THROWS_AS(load_dataset(fixture.root(), "validation"), MissingFile);
}

TEST_CASE("malformed qa line raises SchemaViolation with location") {
    Fixture fixture = build_fixture({.videos = 1, .questions = 1});
    {
        std::ofstream out(fixture.root() / "validation" / "qa.jsonl", std::ios::app);
        out << "{\"qid\": \"qx\", \"vid\": \"v000\"}\n";
    }
    try {
        load_dataset(fixture.root(), "validation");
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(std::string(e.what()).find("question") != std::string::npos);
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("round-trip: load, re-serialize, re-load is a fixed point") {
    Fixture fixture = build_fixture({.videos = 3, .questions = 7});
    const Dataset first = load_dataset(fixture.root(), "validation");

    TempDir copy_dir;
    write_dataset(first, copy_dir.path());
    const Dataset second = load_dataset(copy_dir.path(), "validation");

    CHECK(second.manifest.video_ids == first.manifest.video_ids);
    CHECK(second.manifest.question_count == first.manifest.question_count);
    CHECK(second.questions == first.questions);
    for (const auto& [vid, transcript] : first.transcripts)
        CHECK(second.transcripts.at(vid) == transcript);
    for (const auto& [vid, video] : first.videos) {
        CHECK(second.videos.at(vid).frame_count == video.frame_count);
        CHECK(second.videos.at(vid).fps == video.fps);
        CHECK(second.videos.at(vid).duration_s == video.duration_s);
    }
}

TEST_CASE("validate_dataset reports exactly k injected defects for k in 0..3") {
    for (int k = 0; k <= 3; ++k) {
        Fixture fixture = build_fixture({.videos = 3, .questions = 6});
        if (k >= 1) inject_frame_count_mismatch(fixture, "v000");
        if (k >= 2) inject_option_arity_violation(fixture, "q0001");
        if (k >= 3) inject_duplicate_options(fixture, "q0002");
        const Dataset ds = load_dataset(fixture.root(), "validation");
        const ValidationReport report = validate_dataset(ds);
        CHECK(report.findings.size() == static_cast<std::size_t>(k));
        if (k >= 1) CHECK(report.count("FrameCountMismatch") == 1);
        if (k >= 2) CHECK(report.count("OptionArityViolation") == 1);
        if (k >= 3) CHECK(report.count("DuplicateOptions") == 1);
    }
}

TEST_CASE("frame count mismatch example: 150 frames vs 60 s at 3 fps") {
    Fixture fixture = build_fixture({.videos = 1, .questions = 1, .frames_per_video = 150});
    {
        nlohmann::json meta{{"duration_s", 60.0}, {"fps", 3.0}};
        std::ofstream out(fixture.root() / "videos" / "v000" / "meta.json",
                          std::ios::binary | std::ios::trunc);
        out << meta.dump() << "\n";
    }
    const Dataset ds = load_dataset(fixture.root(), "validation");
    CHECK(validate_dataset(ds).count("FrameCountMismatch") == 1);
}

TEST_CASE("correct_idx indexes into options for every record") {
    Fixture fixture = build_fixture({.videos = 2, .questions = 8});
    const Dataset ds = load_dataset(fixture.root(), "validation");
    for (const auto& qa : ds.questions) {
        CHECK(qa.correct_idx >= 0);
        CHECK(qa.correct_idx < static_cast<int>(qa.options.size()));
    }
    CHECK(validate_dataset(ds).count("CorrectIndexOutOfRange") == 0);
}

TEST_CASE("scan_dataset converts structural problems into findings") {
    Fixture fixture = build_fixture({.videos = 2, .questions = 4});
    std::filesystem::remove(fixture.root() / "videos" / "v001" / "transcript.json");
    Dataset ds;
    const ValidationReport report = scan_dataset(fixture.root(), "validation", &ds);
    CHECK(report.has_errors());
    CHECK(report.count("MissingTranscript") == 1);
    // the intact video still loads
    CHECK(ds.videos.count("v000") == 1);
}

TEST_CASE("frame_path follows the naming convention and bounds-checks") {
    Fixture fixture = build_fixture({.videos = 1, .questions = 1, .frames_per_video = 180});
    const Dataset ds = load_dataset(fixture.root(), "validation");
    const VideoRecord& video = ds.videos.at("v000");
    CHECK(frame_path(video, 0).filename() == "frame_00000.jpg");
    CHECK(frame_path(video, 179).filename() == "frame_00179.jpg");
    CHECK_THROWS_AS(frame_path(video, 180), IndexOutOfRange);
    CHECK_THROWS_AS(frame_path(video, -1), IndexOutOfRange);
}

TEST_CASE("annotations: load, invariants, normalization") {
    TempDir dir;
    const auto file = dir.path() / "video_only.jsonl";

    SUBCASE("valid records load in order and normalize categories") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"video_only","answerable":true,"chosen_idx":2,)"
            << R"("reasoning":"she says so","categories":["facial expression"],"segment":[3,9]})"
            << "\n";
        out << R"({"qid":"q2","condition":"transcript_only","answerable":false,)"
            << R"("reasoning":"","categories":["tone of voice"],"segment":[0,5]})"
            << "\n";
        out.close();
        const auto annotations = load_annotations(file);
        REQUIRE(annotations.size() == 2);
        CHECK(annotations[0].qid == "q1");
        CHECK(annotations[0].categories ==
              std::set<InfoCategory>{InfoCategory::FacialExpressions});
        CHECK(annotations[0].segment == std::make_pair(3, 9));
        CHECK(annotations[1].condition == AnnotationCondition::TranscriptOnly);
    }

    SUBCASE("answerable without chosen_idx violates the schema") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"video_only","answerable":true,"reasoning":""})"
            << "\n";
        out.close();
        try {
            load_annotations(file);
            FAIL("expected SchemaViolation");
        } catch (const SchemaViolation& e) {
            CHECK(std::string(e.what()).find(":1") != std::string::npos);
        }
    }

    SUBCASE("unknown category is its own error") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"video_only","answerable":true,"chosen_idx":0,)"
            << R"("reasoning":"","categories":["telepathy"]})"
            << "\n";
        out.close();
        CHECK_THROWS_AS(load_annotations(file), UnknownCategory);
    }

    SUBCASE("rationale-set restriction for video_only") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"video_only","answerable":true,"chosen_idx":0,)"
            << R"("reasoning":"","categories":["accurate dialogue"]})"
            << "\n";
        out.close();
        CHECK_THROWS_AS(load_annotations(file), SchemaViolation);
    }

    SUBCASE("additional-info restriction for unanswerable transcript_only") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"transcript_only","answerable":false,)"
            << R"("reasoning":"","categories":["contents of conversation"]})"
            << "\n";
        out.close();
        CHECK_THROWS_AS(load_annotations(file), SchemaViolation);
    }

    SUBCASE("segment bounds are enforced") {
        std::ofstream out(file);
        out << R"({"qid":"q1","condition":"video_only","answerable":true,"chosen_idx":0,)"
            << R"("reasoning":"","segment":[9,3]})"
            << "\n";
        out.close();
        CHECK_THROWS_AS(load_annotations(file), SchemaViolation);
    }

    SUBCASE("annotation write/read round-trip") {
        std::vector<HumanAnnotation> annotations;
        HumanAnnotation a;
        a.qid = "q7";
        a.condition = AnnotationCondition::TranscriptOnly;
        a.answerable = false;
        a.reasoning = "cannot tell from text alone";
        a.categories = {InfoCategory::FacialExpressions, InfoCategory::Motion};
        a.segment = {{12, 18}};
        annotations.push_back(a);
        write_annotations(file, annotations);
        CHECK(load_annotations(file) == annotations);
    }
}
