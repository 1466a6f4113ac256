// SPDX-License-Identifier: Apache-2.0
#include "support/fixtures.hpp"

#include "lvd/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace lvd::testing {

namespace fs = std::filesystem;
using nlohmann::json;

TempDir::TempDir() {
    static std::atomic<unsigned> counter{0};
    std::random_device rd;
    std::ostringstream name;
    name << "lvd-test-" << ::getpid() << "-" << counter.fetch_add(1) << "-" << std::hex
         << rd();
    path_ = fs::temp_directory_path() / name.str();
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    if (!path_.empty()) {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) {
    other.path_.clear();
}

TempDir& TempDir::operator=(TempDir&& other) noexcept {
    if (this != &other) {
        if (!path_.empty()) {
            std::error_code ec;
            fs::remove_all(path_, ec);
        }
        path_ = std::move(other.path_);
        other.path_.clear();
    }
    return *this;
}

void write_video_tree(const fs::path& root, const std::string& vid, int frame_count,
                      double fps, std::optional<double> duration_s,
                      const Transcript& transcript) {
    const fs::path video_dir = root / "videos" / vid;
    const fs::path frames = video_dir / "frames";
    fs::create_directories(frames);
    for (int i = 0; i < frame_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.jpg", i);
        std::ofstream out(frames / name, std::ios::binary);
        // unique bytes per (vid, index): real frames are never identical
        out << "\xff\xd8" << vid << "#" << i;
    }
    write_transcript(video_dir / "transcript.json", transcript);
    if (duration_s || fps != 3.0) {
        json meta;
        if (duration_s) meta["duration_s"] = *duration_s;
        meta["fps"] = fps;
        std::ofstream out(video_dir / "meta.json", std::ios::binary);
        out << meta.dump(2) << "\n";
    }
}

namespace {

std::string vid_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "v%03d", i);
    return buf;
}

std::string qid_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "q%04d", i);
    return buf;
}

Transcript make_transcript(const std::string& vid, double duration) {
    Transcript t;
    t.vid = vid;
    const int segments = 3;
    for (int i = 0; i < segments; ++i) {
        TranscriptSegment seg;
        seg.start_s = duration * i / segments;
        seg.end_s = duration * (i + 1) / segments;
        seg.text = "line " + std::to_string(i) + " spoken in " + vid;
        t.segments.push_back(seg);
    }
    return t;
}

} // namespace

Fixture build_fixture(const FixtureOptions& options) {
    Fixture fixture;
    fixture.options = options;
    const fs::path root = fixture.root();

    const double duration = options.frames_per_video / options.fps;
    for (int v = 0; v < options.videos; ++v) {
        const std::string vid = vid_name(v);
        Transcript transcript = make_transcript(vid, duration);
        write_video_tree(root, vid, options.frames_per_video, options.fps,
                         options.write_meta ? std::optional<double>(duration) : std::nullopt,
                         transcript);
        fixture.transcripts[vid] = std::move(transcript);
    }

    for (int q = 0; q < options.questions; ++q) {
        QARecord qa;
        qa.qid = qid_name(q);
        qa.vid = vid_name(q % options.videos);
        qa.question = "What is the speaker in " + qa.vid + " trying to convey in line " +
                      std::to_string(q % 3) + "?";
        for (int o = 0; o < 4; ++o)
            qa.options.push_back("interpretation " + std::to_string(o) + " of question " +
                                 qa.qid);
        qa.correct_idx = q % 4;
        fixture.qa.push_back(std::move(qa));
    }
    write_qa_records(root / options.split / "qa.jsonl", fixture.qa);
    return fixture;
}

void inject_frame_count_mismatch(Fixture& fixture, const std::string& vid) {
    // declare a duration far from frame_count/fps
    const double bogus = fixture.options.frames_per_video / fixture.options.fps * 3.0;
    json meta{{"duration_s", bogus}, {"fps", fixture.options.fps}};
    std::ofstream out(fixture.root() / "videos" / vid / "meta.json",
                      std::ios::binary | std::ios::trunc);
    out << meta.dump(2) << "\n";
}

namespace {

void rewrite_qa(Fixture& fixture) {
    write_qa_records(fixture.root() / fixture.options.split / "qa.jsonl", fixture.qa);
}

QARecord& find_qa(Fixture& fixture, const std::string& qid) {
    for (auto& qa : fixture.qa)
        if (qa.qid == qid) return qa;
    throw std::runtime_error("fixture has no qid " + qid);
}

} // namespace

void inject_option_arity_violation(Fixture& fixture, const std::string& qid) {
    QARecord& qa = find_qa(fixture, qid);
    qa.options.resize(3);
    if (qa.correct_idx > 2) qa.correct_idx = 0;
    rewrite_qa(fixture);
}

void inject_duplicate_options(Fixture& fixture, const std::string& qid) {
    QARecord& qa = find_qa(fixture, qid);
    qa.options[1] = qa.options[0];
    rewrite_qa(fixture);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace lvd::testing
