// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lvd/categories.hpp"
#include "lvd/dataset.hpp"
#include "lvd/engine.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lvd {

struct OutcomeCounts {
    long correct = 0;
    long wrong = 0;
    long unanswerable = 0;
    long no_answer = 0;

    long total() const { return correct + wrong + unanswerable + no_answer; }

    bool operator==(const OutcomeCounts&) const = default;
};

/// overall = correct/total, answered = correct/(total - unanswerable).
/// no_answer counts in both denominators (an answered-but-wrong outcome);
/// answered is empty when everything was unanswerable.
struct AccuracySummary {
    double overall = 0.0;
    std::optional<double> answered;
};

AccuracySummary compute_accuracy(const OutcomeCounts& counts); // throws EmptyCounts

OutcomeCounts tally(const std::vector<QuestionResult>& results);

/// Intersection over union of two intervals on the real line (set-measure
/// union, not bounding hull). Two zero-length identical intervals compare
/// equal (1); a zero-length interval is disjoint from everything else (0).
double interval_iou(std::pair<double, double> a, std::pair<double, double> b);

struct SegmentSample {
    std::string qid;
    std::pair<double, double> segment;
};

struct IoUStats {
    double mean_iou = 0.0;
    std::size_t sample_count = 0;
    double avg_len_predicted = 0.0;
    double avg_len_annotated = 0.0;
};

/// Join predicted and reference samples by qid and aggregate. Throws
/// NoOverlapPairs when the join is empty.
IoUStats iou_report(const std::vector<SegmentSample>& predicted,
                    const std::vector<SegmentSample>& reference);

struct CategoryDistribution {
    std::vector<InfoCategory> category_set;
    std::map<InfoCategory, long> counts; // keys restricted to category_set
    long total = 0;                      // sum of counts
};

/// Multi-label counting: a record with k categories adds 1 to each of the
/// k. Throws UnknownCategory when a record carries a category outside the
/// set.
CategoryDistribution category_distribution(const std::vector<std::set<InfoCategory>>& records,
                                           const std::vector<InfoCategory>& category_set);

/// L1 distance between normalized frequencies; in [0, 2]. Throws
/// EmptyDistribution on zero totals, PreconditionViolation on mismatched
/// category sets.
double distribution_l1(const CategoryDistribution& a, const CategoryDistribution& b);

// ---------------------------------------------------------------------------
// Extraction adapters: run results / annotations -> metric inputs.
// ---------------------------------------------------------------------------

/// Segment predicted by the model: the first unanswerable attempt's segment.
std::vector<SegmentSample> segments_from_results(const std::vector<QuestionResult>& results);

/// Human reference segments; answerable_only mirrors the reference-time
/// evaluation, which is limited to samples the annotator could answer.
std::vector<SegmentSample> segments_from_annotations(
    const std::vector<HumanAnnotation>& annotations, bool answerable_only);

/// Rationale categories of answered questions (final attempt), restricted
/// to the rationale set.
std::vector<std::set<InfoCategory>> rationale_sets_from_results(
    const std::vector<QuestionResult>& results);

std::vector<std::set<InfoCategory>> rationale_sets_from_annotations(
    const std::vector<HumanAnnotation>& annotations);

/// Additional-information requests: one record per unanswerable attempt.
std::vector<std::set<InfoCategory>> addinfo_sets_from_results(
    const std::vector<QuestionResult>& results);

std::vector<std::set<InfoCategory>> addinfo_sets_from_annotations(
    const std::vector<HumanAnnotation>& annotations);

/// Outcome counts for human annotations, scored against the QA answer key.
OutcomeCounts tally_annotations(const std::vector<HumanAnnotation>& annotations,
                                const std::map<std::string, int>& correct_idx_by_qid);

// ---------------------------------------------------------------------------
// Formatting (paper-style tables).
// ---------------------------------------------------------------------------

/// Percentage of numer/denom with two decimals, round-half-up, e.g.
/// "74.47%". Exact integer arithmetic.
std::string format_percent(long numer, long denom);

/// A real number with fixed decimals, round-half-up.
std::string format_fixed(double value, int decimals);

} // namespace lvd
