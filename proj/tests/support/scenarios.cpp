// SPDX-License-Identifier: Apache-2.0
#include "support/scenarios.hpp"

#include "lvd/reply_parser.hpp"

#include <cstdio>

namespace lvd::testing {

namespace {

std::string answer_reply(int choice_idx, const std::string& reason = "scripted",
                         const std::string& categories = "contents of conversation") {
    std::string out = "DECISION: answer\nCHOICE: ";
    out += static_cast<char>('A' + choice_idx);
    out += "\nRATIONALE_CATEGORY: " + categories;
    out += "\nREASON: " + reason;
    return out;
}

std::string unanswerable_reply(const std::string& category, int start, int end) {
    return "DECISION: unanswerable\nNEEDED: " + category + "\nSEGMENT: " +
           std::to_string(start) + " " + std::to_string(end);
}

} // namespace

BackendSet ScriptedBackends::set() const {
    BackendSet backends;
    backends.qa = qa;
    backends.vqa = vqa;
    backends.caption = qa; // unused by the image-mode scenarios
    return backends;
}

ScriptedBackends make_backends(const MockScript& qa_script, const MockScript& vqa_script) {
    ScriptedBackends backends;
    backends.qa = std::make_shared<ScriptedMockBackend>(qa_script);
    backends.vqa = std::make_shared<ScriptedMockBackend>(vqa_script);
    return backends;
}

ScenarioSuite build_scenario_suite() {
    ScenarioSuite suite;

    FixtureOptions options;
    options.videos = 2;
    options.questions = 12;
    options.frames_per_video = 180; // 60 s at 3 fps
    options.fps = 3.0;
    suite.fixture = build_fixture(options);

    // fix the answer key per scenario: q0000..q0011 round-robin over 2 videos
    auto& qa = suite.fixture.qa;
    const int correct[] = {0, 0, 2, 0, 0, 1, 3, 1, 1, 3, 0, 2};
    for (int i = 0; i < 12; ++i) qa[i].correct_idx = correct[i];
    write_qa_records(suite.fixture.root() / options.split / "qa.jsonl", qa);

    MockScript& script = suite.qa_script;
    script.default_reply = "DECISION: answer\nCHOICE: A\nREASON: default";

    auto expect = [&](int i, const std::string& name, FinalStatus status, int attempts,
                      std::optional<int> choice, long vqa_calls,
                      std::optional<int> frame = std::nullopt) {
        suite.expectations.push_back(
            {qa[i].qid, name, status, attempts, choice, vqa_calls, frame});
    };

    // 1: answer on the first try, correct
    script.replies[qa[0].qid + "#1"] = answer_reply(0, "stated outright");
    expect(0, "answer-first-try-correct", FinalStatus::Correct, 1, 0, 0);

    // 2: answer on the first try, wrong
    script.replies[qa[1].qid + "#1"] = answer_reply(1, "misread the tone");
    expect(1, "answer-first-try-wrong", FinalStatus::Wrong, 1, 1, 0);

    // 3: visual unanswerable, retrieval, then correct (midpoint 15 -> frame 45)
    script.replies[qa[2].qid + "#1"] = unanswerable_reply("facial expressions", 12, 18);
    suite.vqa_script.replies[qa[2].qid + "#vqa1"] = "both men are smiling";
    script.replies[qa[2].qid + "#2"] = answer_reply(2, "the smiles settle it");
    expect(2, "visual-unanswerable-then-correct", FinalStatus::Correct, 2, 2, 1, 45);

    // 4: visual unanswerable, retrieval, still wrong (midpoint 5.5 -> 6 -> frame 18)
    script.replies[qa[3].qid + "#1"] = unanswerable_reply("motion", 3, 8);
    script.replies[qa[3].qid + "#2"] = answer_reply(3, "still guessing");
    expect(3, "visual-unanswerable-then-wrong", FinalStatus::Wrong, 2, 3, 1, 18);

    // 5: repeated category terminates the loop
    script.replies[qa[4].qid + "#1"] = unanswerable_reply("scene context", 0, 0);
    script.replies[qa[4].qid + "#2"] = unanswerable_reply("scene context", 5, 9);
    expect(4, "repeated-category-termination", FinalStatus::Unanswerable, 2, std::nullopt, 1,
           0);

    // 6/7: non-visual requests terminate with no VQA call
    script.replies[qa[5].qid + "#1"] = unanswerable_reply("tone of voice", 4, 10);
    expect(5, "non-visual-tone-of-voice", FinalStatus::Unanswerable, 1, std::nullopt, 0);
    script.replies[qa[6].qid + "#1"] = unanswerable_reply("accurate dialogue", 1, 2);
    expect(6, "non-visual-accurate-dialogue", FinalStatus::Unanswerable, 1, std::nullopt, 0);

    // 8: malformed reply
    script.replies[qa[7].qid + "#1"] = "beats me, sorry";
    expect(7, "malformed-no-answer", FinalStatus::NoAnswer, 1, std::nullopt, 0);

    // 9: two distinct visual categories, then correct (midpoint 20 -> frame 60)
    script.replies[qa[8].qid + "#1"] = unanswerable_reply("facial expressions", 16, 24);
    script.replies[qa[8].qid + "#2"] = unanswerable_reply("motion", 20, 30);
    script.replies[qa[8].qid + "#3"] = answer_reply(1, "motion plus faces");
    expect(8, "two-category-double-retrieval", FinalStatus::Correct, 3, 1, 2, 60);

    // 10: multi-category rationale on a direct answer
    script.replies[qa[9].qid + "#1"] =
        answer_reply(3, "room and gestures agree", "scene context, motion");
    expect(9, "multi-category-rationale", FinalStatus::Correct, 1, 3, 0);

    // 11: out-of-range segment clamps to the last frame (midpoint 700 -> 179)
    script.replies[qa[10].qid + "#1"] = unanswerable_reply("appearance of people", 500, 900);
    script.replies[qa[10].qid + "#2"] = answer_reply(1, "read too much into it");
    expect(10, "out-of-range-segment-clamped", FinalStatus::Wrong, 2, 1, 1, 179);

    // 12: fallback letter scan on non-grammar text
    script.replies[qa[11].qid + "#1"] = "I think the answer is (C) because she seems upset.";
    expect(11, "fallback-letter-scan", FinalStatus::Correct, 1, 2, 0);

    suite.vqa_script.default_reply = "a generic visual description";

    suite.config.mode = EvalMode::Loop;
    suite.config.max_extra_attempts = 2;
    suite.config.frames_k = 10;
    suite.config.use_captions = false;
    suite.config.concurrency = 4;
    return suite;
}

FullScaleFixture build_full_scale_fixture() {
    FullScaleFixture full;

    FixtureOptions options;
    options.videos = 120;
    options.questions = 807;
    options.frames_per_video = 30; // 10 s at 3 fps
    options.fps = 3.0;
    full.fixture = build_fixture(options);

    MockScript& script = full.qa_script;
    script.default_reply = "DECISION: answer\nCHOICE: A\nREASON: default";
    full.vqa_script.default_reply = "a visual detail retrieved from the frame";

    // outcomes assigned in sorted-qid order: 601 correct, 194 wrong,
    // 12 unanswerable (no sort needed: generated qids are zero-padded)
    const auto& qa = full.fixture.qa;
    for (int i = 0; i < 807; ++i) {
        const std::string& qid = qa[i].qid;
        const int correct = qa[i].correct_idx;
        const int wrong = (correct + 1) % 4;
        if (i < 601) {
            if (i % 7 == 0) {
                script.replies[qid + "#1"] = unanswerable_reply("facial expressions", 2, 6);
                script.replies[qid + "#2"] = answer_reply(correct, "clear after retrieval");
            } else {
                script.replies[qid + "#1"] = answer_reply(correct, "clear from transcript");
            }
        } else if (i < 795) {
            if (i % 5 == 0) {
                script.replies[qid + "#1"] = unanswerable_reply("motion", 1, 5);
                script.replies[qid + "#2"] = answer_reply(wrong, "retrieval did not help");
            } else {
                script.replies[qid + "#1"] = answer_reply(wrong, "misread the scene");
            }
        } else {
            if (i % 2 == 0) {
                script.replies[qid + "#1"] = unanswerable_reply("tone of voice", 3, 7);
            } else {
                script.replies[qid + "#1"] = unanswerable_reply("scene context", 2, 4);
                script.replies[qid + "#2"] = unanswerable_reply("scene context", 2, 4);
            }
        }
    }

    full.config.mode = EvalMode::Loop;
    full.config.max_extra_attempts = 1;
    full.config.frames_k = 10;
    full.config.use_captions = false;
    full.config.concurrency = 8;
    return full;
}

} // namespace lvd::testing
