// SPDX-License-Identifier: Apache-2.0
#include "lvd/metrics.hpp"

#include "lvd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace lvd {

AccuracySummary compute_accuracy(const OutcomeCounts& counts) {
    const long total = counts.total();
    if (total <= 0) throw EmptyCounts("cannot compute accuracy over zero outcomes");
    AccuracySummary summary;
    summary.overall = static_cast<double>(counts.correct) / static_cast<double>(total);
    const long answered_denominator = total - counts.unanswerable;
    if (answered_denominator > 0)
        summary.answered =
            static_cast<double>(counts.correct) / static_cast<double>(answered_denominator);
    return summary;
}

OutcomeCounts tally(const std::vector<QuestionResult>& results) {
    OutcomeCounts counts;
    for (const auto& result : results) {
        switch (result.final_status) {
            case FinalStatus::Correct: ++counts.correct; break;
            case FinalStatus::Wrong: ++counts.wrong; break;
            case FinalStatus::Unanswerable: ++counts.unanswerable; break;
            case FinalStatus::NoAnswer: ++counts.no_answer; break;
        }
    }
    return counts;
}

double interval_iou(std::pair<double, double> a, std::pair<double, double> b) {
    if (a.first > a.second || b.first > b.second)
        throw PreconditionViolation("interval_iou requires start <= end");
    const double inter = std::max(0.0, std::min(a.second, b.second) - std::max(a.first, b.first));
    const double len_a = a.second - a.first;
    const double len_b = b.second - b.first;
    const double uni = len_a + len_b - inter;
    if (uni <= 0.0) {
        // both zero-length: equal points coincide, anything else is disjoint
        return a.first == b.first ? 1.0 : 0.0;
    }
    return inter / uni;
}

IoUStats iou_report(const std::vector<SegmentSample>& predicted,
                    const std::vector<SegmentSample>& reference) {
    std::map<std::string, std::pair<double, double>> reference_by_qid;
    for (const auto& sample : reference) reference_by_qid.emplace(sample.qid, sample.segment);

    IoUStats stats;
    double iou_sum = 0.0;
    double pred_len_sum = 0.0;
    double ref_len_sum = 0.0;
    for (const auto& sample : predicted) {
        auto it = reference_by_qid.find(sample.qid);
        if (it == reference_by_qid.end()) continue;
        iou_sum += interval_iou(sample.segment, it->second);
        pred_len_sum += sample.segment.second - sample.segment.first;
        ref_len_sum += it->second.second - it->second.first;
        ++stats.sample_count;
    }
    if (stats.sample_count == 0)
        throw NoOverlapPairs("no qid-joinable segment pairs between prediction and reference");
    stats.mean_iou = iou_sum / static_cast<double>(stats.sample_count);
    stats.avg_len_predicted = pred_len_sum / static_cast<double>(stats.sample_count);
    stats.avg_len_annotated = ref_len_sum / static_cast<double>(stats.sample_count);
    return stats;
}

CategoryDistribution category_distribution(const std::vector<std::set<InfoCategory>>& records,
                                           const std::vector<InfoCategory>& category_set) {
    CategoryDistribution dist;
    dist.category_set = category_set;
    for (InfoCategory c : category_set) dist.counts[c] = 0;
    for (const auto& record : records) {
        for (InfoCategory c : record) {
            auto it = dist.counts.find(c);
            if (it == dist.counts.end())
                throw UnknownCategory("category \"" + std::string(category_name(c)) +
                                      "\" is outside the distribution's category set");
            ++it->second;
            ++dist.total;
        }
    }
    return dist;
}

double distribution_l1(const CategoryDistribution& a, const CategoryDistribution& b) {
    if (a.category_set != b.category_set)
        throw PreconditionViolation("distribution_l1 requires identical category sets");
    if (a.total <= 0 || b.total <= 0)
        throw EmptyDistribution("distribution_l1 requires non-empty distributions");
    double sum = 0.0;
    for (InfoCategory c : a.category_set) {
        const double fa = static_cast<double>(a.counts.at(c)) / static_cast<double>(a.total);
        const double fb = static_cast<double>(b.counts.at(c)) / static_cast<double>(b.total);
        sum += std::abs(fa - fb);
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Extraction adapters
// ---------------------------------------------------------------------------

std::vector<SegmentSample> segments_from_results(const std::vector<QuestionResult>& results) {
    std::vector<SegmentSample> samples;
    for (const auto& result : results) {
        for (const auto& attempt : result.attempts) {
            if (const auto* u = std::get_if<UnanswerableDecision>(&attempt.parsed)) {
                samples.push_back({result.qid,
                                   {static_cast<double>(u->segment.first),
                                    static_cast<double>(u->segment.second)}});
                break; // first prediction drives retrieval; later ones are revisions
            }
        }
    }
    return samples;
}

std::vector<SegmentSample> segments_from_annotations(
    const std::vector<HumanAnnotation>& annotations, bool answerable_only) {
    std::vector<SegmentSample> samples;
    for (const auto& a : annotations) {
        if (answerable_only && !a.answerable) continue;
        if (!a.segment) continue;
        samples.push_back({a.qid,
                           {static_cast<double>(a.segment->first),
                            static_cast<double>(a.segment->second)}});
    }
    return samples;
}

std::vector<std::set<InfoCategory>> rationale_sets_from_results(
    const std::vector<QuestionResult>& results) {
    std::vector<std::set<InfoCategory>> sets;
    for (const auto& result : results) {
        if (result.attempts.empty()) continue;
        const auto& last = result.attempts.back();
        if (const auto* a = std::get_if<AnswerDecision>(&last.parsed)) {
            std::set<InfoCategory> filtered;
            for (InfoCategory c : a->rationale_categories)
                if (in_rationale_set(c)) filtered.insert(c);
            if (!filtered.empty()) sets.push_back(std::move(filtered));
        }
    }
    return sets;
}

std::vector<std::set<InfoCategory>> rationale_sets_from_annotations(
    const std::vector<HumanAnnotation>& annotations) {
    std::vector<std::set<InfoCategory>> sets;
    for (const auto& a : annotations)
        if (a.answerable && !a.categories.empty()) sets.push_back(a.categories);
    return sets;
}

std::vector<std::set<InfoCategory>> addinfo_sets_from_results(
    const std::vector<QuestionResult>& results) {
    std::vector<std::set<InfoCategory>> sets;
    for (const auto& result : results)
        for (const auto& attempt : result.attempts)
            if (const auto* u = std::get_if<UnanswerableDecision>(&attempt.parsed))
                sets.push_back({u->category});
    return sets;
}

std::vector<std::set<InfoCategory>> addinfo_sets_from_annotations(
    const std::vector<HumanAnnotation>& annotations) {
    std::vector<std::set<InfoCategory>> sets;
    for (const auto& a : annotations)
        if (!a.answerable && !a.categories.empty()) sets.push_back(a.categories);
    return sets;
}

OutcomeCounts tally_annotations(const std::vector<HumanAnnotation>& annotations,
                                const std::map<std::string, int>& correct_idx_by_qid) {
    OutcomeCounts counts;
    for (const auto& a : annotations) {
        auto it = correct_idx_by_qid.find(a.qid);
        if (it == correct_idx_by_qid.end()) continue; // not joinable to the answer key
        if (!a.answerable) {
            ++counts.unanswerable;
        } else if (a.chosen_idx && *a.chosen_idx == it->second) {
            ++counts.correct;
        } else {
            ++counts.wrong;
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

std::string format_percent(long numer, long denom) {
    if (denom <= 0) return "n/a";
    // round-half-up of 10000*numer/denom, i.e. two decimals of the percentage
    const long long scaled = (20000LL * numer + denom) / (2LL * denom);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld%%", scaled / 100, scaled % 100);
    return buf;
}

std::string format_fixed(double value, int decimals) {
    double scale = std::pow(10.0, decimals);
    double rounded = std::floor(value * scale + 0.5) / scale;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded);
    return buf;
}

} // namespace lvd
