#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "carevox/common.hpp"

namespace carevox {

struct EmptyDistribution final : Error { using Error::Error; };
struct EmptyPatient final : Error { using Error::Error; };
struct MissingOutcome final : Error { using Error::Error; };
struct EmptyGroup final : Error { using Error::Error; };
struct UnknownGroup final : Error { using Error::Error; };

struct ScoreDistribution {
    std::string label;
    std::vector<double> samples;
};

// One "document" per group: the multiset of normalized phrases pooled for that
// group and feature.
struct PhraseCorpus {
    std::map<std::string, std::vector<std::string>> groups;
};

inline std::map<std::string, double> patient_mean_scores(
    const std::map<std::string, std::vector<int>>& scores_by_patient) {
    std::map<std::string, double> means;
    for (const auto& [patient, scores] : scores_by_patient) {
        if (scores.empty()) throw EmptyPatient("patient " + patient + " has no assessments");
        double sum = 0.0;
        for (int s : scores) sum += s;
        means[patient] = sum / static_cast<double>(scores.size());
    }
    return means;
}

inline std::pair<ScoreDistribution, ScoreDistribution> split_groups(
    const std::map<std::string, double>& patient_means,
    const std::map<std::string, bool>& outcomes) {
    ScoreDistribution no_event{"No ED/HOSP", {}};
    ScoreDistribution event{"ED/HOSP", {}};
    for (const auto& [patient, mean] : patient_means) {
        auto it = outcomes.find(patient);
        if (it == outcomes.end()) throw MissingOutcome("no outcome flag for patient " + patient);
        (it->second ? event : no_event).samples.push_back(mean);
    }
    return {no_event, event};
}

// 1-Wasserstein between empirical distributions: integral of |CDF_a - CDF_b|.
// Equal sample counts reduce to the mean absolute difference of sorted
// samples; unequal counts take the piecewise-constant CDF integral.
inline double wasserstein_1d(const ScoreDistribution& a, const ScoreDistribution& b) {
    if (a.samples.empty() || b.samples.empty())
        throw EmptyDistribution("wasserstein_1d needs non-empty distributions");
    std::vector<double> sa = a.samples, sb = b.samples;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());

    if (sa.size() == sb.size()) {
        double total = 0.0;
        for (std::size_t i = 0; i < sa.size(); ++i) total += std::abs(sa[i] - sb[i]);
        return total / static_cast<double>(sa.size());
    }

    std::vector<double> points;
    points.reserve(sa.size() + sb.size());
    points.insert(points.end(), sa.begin(), sa.end());
    points.insert(points.end(), sb.begin(), sb.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    double total = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        while (ia < sa.size() && sa[ia] <= points[i]) ++ia;
        while (ib < sb.size() && sb[ib] <= points[i]) ++ib;
        double fa = static_cast<double>(ia) / static_cast<double>(sa.size());
        double fb = static_cast<double>(ib) / static_cast<double>(sb.size());
        total += std::abs(fa - fb) * (points[i + 1] - points[i]);
    }
    return total;
}

struct SummaryStats {
    double min = 0.0;
    double max = 0.0;
    double mean = 0.0;
    bool operator==(const SummaryStats&) const = default;
};

inline SummaryStats summary_stats(const ScoreDistribution& d) {
    if (d.samples.empty()) throw EmptyDistribution("summary_stats on empty distribution");
    SummaryStats s;
    s.min = *std::min_element(d.samples.begin(), d.samples.end());
    s.max = *std::max_element(d.samples.begin(), d.samples.end());
    double sum = 0.0;
    for (double v : d.samples) sum += v;
    s.mean = sum / static_cast<double>(d.samples.size());
    return s;
}

// Silverman bandwidth with interpolated quartiles. All-equal samples (and any
// degenerate spread) fall back to the 0.1 floor so the curve stays finite.
inline double silverman_bandwidth(std::vector<double> samples) {
    const std::size_t n = samples.size();
    if (n == 0) throw EmptyDistribution("bandwidth of empty sample set");
    std::sort(samples.begin(), samples.end());

    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : samples) var += (v - mean) * (v - mean);
    double sigma = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;

    auto quantile = [&](double p) {
        if (n == 1) return samples[0];
        double pos = p * static_cast<double>(n - 1);
        auto lo = static_cast<std::size_t>(pos);
        double frac = pos - static_cast<double>(lo);
        if (lo + 1 >= n) return samples[n - 1];
        return samples[lo] * (1.0 - frac) + samples[lo + 1] * frac;
    };
    double iqr = quantile(0.75) - quantile(0.25);

    double h = 0.9 * std::min(sigma, iqr / 1.34) *
               std::pow(static_cast<double>(n), -0.2);
    if (h <= 0.0) h = 0.1;
    return h;
}

// Gaussian KDE sampled on a uniform grid.
inline std::vector<std::pair<double, double>> kde_curve(const ScoreDistribution& d, double lo,
                                                        double hi, int n_points) {
    if (d.samples.empty()) throw EmptyDistribution("kde_curve on empty distribution");
    if (!(lo < hi) || n_points < 2) throw Error("kde_curve needs lo < hi and n_points >= 2");
    const double h = silverman_bandwidth(d.samples);
    const double norm =
        1.0 / (static_cast<double>(d.samples.size()) * h * std::sqrt(2.0 * M_PI));
    std::vector<std::pair<double, double>> curve;
    curve.reserve(static_cast<std::size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
        double density = 0.0;
        for (double v : d.samples) {
            double z = (x - v) / h;
            density += std::exp(-0.5 * z * z);
        }
        curve.push_back({x, density * norm});
    }
    return curve;
}

// tf = count/|doc|, idf = ln((1+N)/(1+df)) + 1. Per group, phrases sort by
// score descending, ties by raw count descending then lexicographic.
inline std::map<std::string, std::vector<std::pair<std::string, double>>> tfidf_top_phrases(
    const PhraseCorpus& corpus, std::size_t k = 3) {
    if (corpus.groups.empty()) throw EmptyGroup("corpus has no groups");
    for (const auto& [label, doc] : corpus.groups)
        if (doc.empty()) throw EmptyGroup("group " + label + " has an empty document");

    const double n_docs = static_cast<double>(corpus.groups.size());
    std::map<std::string, double> df;
    for (const auto& [_, doc] : corpus.groups) {
        std::set<std::string> uniq(doc.begin(), doc.end());
        for (const auto& p : uniq) df[p] += 1.0;
    }

    std::map<std::string, std::vector<std::pair<std::string, double>>> out;
    for (const auto& [label, doc] : corpus.groups) {
        std::map<std::string, std::size_t> counts;
        for (const auto& p : doc) ++counts[p];
        struct Row {
            std::string phrase;
            double score;
            std::size_t count;
        };
        std::vector<Row> rows;
        for (const auto& [phrase, count] : counts) {
            double tf = static_cast<double>(count) / static_cast<double>(doc.size());
            double idf = std::log((1.0 + n_docs) / (1.0 + df[phrase])) + 1.0;
            rows.push_back({phrase, tf * idf, count});
        }
        std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
            if (a.score != b.score) return a.score > b.score;
            if (a.count != b.count) return a.count > b.count;
            return a.phrase < b.phrase;
        });
        auto& list = out[label];
        for (std::size_t i = 0; i < rows.size() && i < k; ++i)
            list.push_back({rows[i].phrase, rows[i].score});
    }
    return out;
}

inline std::map<std::string, std::size_t> phrase_frequencies(const PhraseCorpus& corpus,
                                                             const std::string& group) {
    auto it = corpus.groups.find(group);
    if (it == corpus.groups.end()) throw UnknownGroup("no group " + group);
    std::map<std::string, std::size_t> counts;
    for (const auto& p : it->second) ++counts[p];
    return counts;
}

// Buckets per-visit quantified levels by illness score for violin export.
inline std::map<int, ScoreDistribution> level_by_score(
    const std::vector<std::pair<int, double>>& quantified) {
    std::map<int, ScoreDistribution> buckets;
    for (const auto& [score, level] : quantified) {
        auto& bucket = buckets[score];
        if (bucket.label.empty()) bucket.label = "score " + std::to_string(score);
        bucket.samples.push_back(level);
    }
    return buckets;
}

}  // namespace carevox
