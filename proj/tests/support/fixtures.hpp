// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/dataset.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lvd::testing {

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(TempDir&& other) noexcept;
    TempDir& operator=(TempDir&& other) noexcept;
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Write one video subtree: placeholder frames, transcript, optional meta.
void write_video_tree(const std::filesystem::path& root, const std::string& vid,
                      int frame_count, double fps, std::optional<double> duration_s,
                      const Transcript& transcript);

struct FixtureOptions {
    std::string split = "validation";
    int videos = 2;
    int questions = 5;
    int frames_per_video = 30;
    double fps = 3.0;
    bool write_meta = true;
};

/// A generated dataset tree plus the records that were written, so loaders
/// can be checked against an independent source of truth.
struct Fixture {
    TempDir dir;
    FixtureOptions options;
    std::vector<QARecord> qa;
    std::map<std::string, Transcript> transcripts;

    std::filesystem::path root() const { return dir.path(); }
};

Fixture build_fixture(const FixtureOptions& options = {});

// Defect injection (rewrites parts of an existing fixture tree).
void inject_frame_count_mismatch(Fixture& fixture, const std::string& vid);
void inject_option_arity_violation(Fixture& fixture, const std::string& qid);
void inject_duplicate_options(Fixture& fixture, const std::string& qid);

/// Read a whole file (test assertions on persisted artifacts).
std::string slurp(const std::filesystem::path& path);

} // namespace lvd::testing
