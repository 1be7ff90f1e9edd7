// Test-only reference implementations, kept independent of the library code
// they check. Each oracle recomputes its quantity the slow, obvious way.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "carevox/diarize.hpp"

namespace oracles {

// 1-D Wasserstein by piecewise-constant CDF integration over the merged
// support. Handles unequal sample counts.
inline double wasserstein_cdf(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> points;
    points.reserve(a.size() + b.size());
    points.insert(points.end(), a.begin(), a.end());
    points.insert(points.end(), b.begin(), b.end());
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    auto cdf = [](const std::vector<double>& sorted, double x) {
        auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
        return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
    };

    double total = 0.0;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        double fa = cdf(a, points[i]);
        double fb = cdf(b, points[i]);
        total += std::abs(fa - fb) * (points[i + 1] - points[i]);
    }
    return total;
}

// Average-linkage agglomerative clustering over cosine distance, recomputing
// the mean over member pairs from scratch at every step. Ties follow the
// documented rule: merge the pair whose (smallest member key) pair is
// lexicographically least. Returns the partition in canonical form.
inline std::vector<std::vector<carevox::LocalSpeakerKey>> average_linkage(
    const std::map<carevox::LocalSpeakerKey, std::vector<double>>& embeddings, int k) {
    using carevox::LocalSpeakerKey;
    std::vector<LocalSpeakerKey> keys;
    for (const auto& [key, _] : embeddings) keys.push_back(key);

    auto cosine_dist = [&](const LocalSpeakerKey& x, const LocalSpeakerKey& y) {
        const auto& a = embeddings.at(x);
        const auto& b = embeddings.at(y);
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        return 1.0 - dot / (std::sqrt(na) * std::sqrt(nb));
    };

    std::vector<std::vector<LocalSpeakerKey>> clusters;
    for (const auto& key : keys) clusters.push_back({key});

    auto min_key = [](const std::vector<LocalSpeakerKey>& c) {
        return *std::min_element(c.begin(), c.end());
    };

    std::size_t target = std::min<std::size_t>(static_cast<std::size_t>(k), keys.size());
    while (clusters.size() > target) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 1;
        for (std::size_t i = 0; i < clusters.size(); ++i) {
            for (std::size_t j = i + 1; j < clusters.size(); ++j) {
                double sum = 0.0;
                for (const auto& x : clusters[i])
                    for (const auto& y : clusters[j]) sum += cosine_dist(x, y);
                double avg = sum / static_cast<double>(clusters[i].size() * clusters[j].size());
                auto lo = std::min(min_key(clusters[i]), min_key(clusters[j]));
                auto hi = std::max(min_key(clusters[i]), min_key(clusters[j]));
                auto cur_lo = std::min(min_key(clusters[bi]), min_key(clusters[bj]));
                auto cur_hi = std::max(min_key(clusters[bi]), min_key(clusters[bj]));
                if (avg < best || (avg == best && std::tie(lo, hi) < std::tie(cur_lo, cur_hi))) {
                    best = avg;
                    bi = i;
                    bj = j;
                }
            }
        }
        clusters[bi].insert(clusters[bi].end(), clusters[bj].begin(), clusters[bj].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    for (auto& c : clusters) std::sort(c.begin(), c.end());
    std::sort(clusters.begin(), clusters.end());
    return clusters;
}

// Canonicalize a key -> id assignment into the same form as average_linkage.
inline std::vector<std::vector<carevox::LocalSpeakerKey>> canonical_partition(
    const std::map<carevox::LocalSpeakerKey, carevox::GlobalSpeakerId>& assignment) {
    std::map<int, std::vector<carevox::LocalSpeakerKey>> by_id;
    for (const auto& [key, id] : assignment) by_id[id].push_back(key);
    std::vector<std::vector<carevox::LocalSpeakerKey>> out;
    for (auto& [_, keys] : by_id) {
        std::sort(keys.begin(), keys.end());
        out.push_back(keys);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Smoothed tf-idf, computed directly from the formula text.
inline std::map<std::string, std::vector<std::pair<std::string, double>>> tfidf_scores(
    const std::map<std::string, std::vector<std::string>>& groups) {
    double n_docs = static_cast<double>(groups.size());
    std::map<std::string, double> df;
    for (const auto& [_, doc] : groups) {
        std::set<std::string> uniq(doc.begin(), doc.end());
        for (const auto& p : uniq) df[p] += 1.0;
    }
    std::map<std::string, std::vector<std::pair<std::string, double>>> out;
    for (const auto& [label, doc] : groups) {
        std::map<std::string, double> counts;
        for (const auto& p : doc) counts[p] += 1.0;
        for (const auto& [phrase, count] : counts) {
            double tf = count / static_cast<double>(doc.size());
            double idf = std::log((1.0 + n_docs) / (1.0 + df[phrase])) + 1.0;
            out[label].push_back({phrase, tf * idf});
        }
    }
    return out;
}

}  // namespace oracles
