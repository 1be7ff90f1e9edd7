#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "carevox/audio.hpp"
#include "carevox/backends.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"

namespace carevox {

struct EmbeddingFailed final : Error { using Error::Error; };

using Embedding = std::vector<double>;

struct LocalSpeakerKey {
    int chunk_index = 0;
    std::string local_label;

    auto operator<=>(const LocalSpeakerKey&) const = default;
    std::string str() const { return std::to_string(chunk_index) + "/" + local_label; }
};

// One chunk's diarization, with segment times already in recording time.
struct ChunkDiarization {
    int chunk_index = 0;
    double chunk_start_s = 0.0;
    double chunk_end_s = 0.0;
    std::vector<std::pair<LocalSpeakerKey, std::pair<double, double>>> segments;
};

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.size() != b.size() || a.empty()) return -1.0;
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return -1.0;  // zero vectors never win
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine_distance(const Embedding& a, const Embedding& b) {
    return 1.0 - cosine_similarity(a, b);
}

inline bool is_zero_embedding(const Embedding& e) {
    for (double v : e)
        if (v != 0.0) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Chunked diarization. Each chunk is sliced per chunk_plan and sent to the
// backend independently; a failed chunk is skipped with a ChunkFailed warning
// so one bad window does not abort the visit.
// ---------------------------------------------------------------------------
inline std::vector<ChunkDiarization> diarize_recording(const AudioBuffer& audio,
                                                       DiarizerBackend& backend,
                                                       double chunk_s = 250.0,
                                                       double overlap_s = 5.0,
                                                       int max_speakers = 4,
                                                       WarningLog* warnings = nullptr) {
    std::vector<ChunkDiarization> out;
    auto plan = chunk_plan(audio.duration_s(), chunk_s, overlap_s);
    for (std::size_t ci = 0; ci < plan.size(); ++ci) {
        ChunkDiarization chunk;
        chunk.chunk_index = static_cast<int>(ci);
        chunk.chunk_start_s = plan[ci].start_s;
        chunk.chunk_end_s = plan[ci].end_s;
        try {
            auto wav = encode_wav(slice(audio, plan[ci].start_s, plan[ci].end_s));
            for (const auto& seg : backend.diarize(wav, max_speakers)) {
                LocalSpeakerKey key{chunk.chunk_index, seg.label};
                chunk.segments.push_back(
                    {key, {seg.start_s + plan[ci].start_s, seg.end_s + plan[ci].start_s}});
            }
            out.push_back(std::move(chunk));
        } catch (const std::exception& e) {
            warn(warnings, "ChunkFailed",
                 "chunk " + std::to_string(ci) + " diarization failed: " + e.what());
        }
    }
    return out;
}

// One embedding per local speaker, computed from the concatenation of that
// speaker's segments. A zero vector counts as extraction failure and drops
// the local speaker with a warning.
inline std::map<LocalSpeakerKey, Embedding> embed_local_speakers(
    const AudioBuffer& audio, const std::vector<ChunkDiarization>& chunks,
    SpeakerEmbedderBackend& backend, WarningLog* warnings = nullptr) {
    std::map<LocalSpeakerKey, std::vector<AudioBuffer>> pieces;
    for (const auto& chunk : chunks)
        for (const auto& [key, span] : chunk.segments) {
            double s = std::max(0.0, span.first);
            double e = std::min(audio.duration_s(), span.second);
            if (s < e) pieces[key].push_back(slice(audio, s, e));
        }

    std::map<LocalSpeakerKey, Embedding> out;
    for (auto& [key, segs] : pieces) {
        try {
            auto joined = concat_with_silence(segs, 0.0);
            auto emb = backend.embed(encode_wav(joined));
            if (emb.empty() || is_zero_embedding(emb))
                throw EmbeddingFailed("zero embedding for " + key.str());
            out[key] = std::move(emb);
        } catch (const std::exception& e) {
            warn(warnings, "EmbeddingFailed",
                 "local speaker " + key.str() + " dropped: " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Agglomerative hierarchical clustering, average linkage over cosine distance,
// cut at min(k, n) clusters. Deterministic: equal-distance merges pick the
// pair with the lexicographically smallest (smallest member key) pair, and
// global ids 0..k-1 are ordered by total speech duration descending (ties by
// smallest member key).
// ---------------------------------------------------------------------------
inline std::map<LocalSpeakerKey, GlobalSpeakerId> cluster_speakers(
    const std::map<LocalSpeakerKey, Embedding>& embeddings,
    const std::map<LocalSpeakerKey, double>& speech_durations, int k = 4) {
    if (embeddings.empty()) throw Error("cluster_speakers: no embeddings");
    if (k < 1) throw InvalidParams("cluster_speakers: k must be >= 1");

    std::vector<LocalSpeakerKey> keys;
    keys.reserve(embeddings.size());
    for (const auto& [key, _] : embeddings) keys.push_back(key);
    const std::size_t n = keys.size();

    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] =
                cosine_distance(embeddings.at(keys[i]), embeddings.at(keys[j]));

    struct Cluster {
        std::vector<std::size_t> members;
        LocalSpeakerKey min_key;
    };
    std::vector<Cluster> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({{i}, keys[i]});

    // pairwise distance sums between clusters; average = sum / (|A|*|B|)
    std::vector<std::vector<double>> sums(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sums[i][j] = dist[i][j];

    const std::size_t target = std::min<std::size_t>(static_cast<std::size_t>(k), n);
    while (clusters.size() > target) {
        std::size_t best_a = 0, best_b = 1;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                double avg = sums[a][b] / (static_cast<double>(clusters[a].members.size()) *
                                           static_cast<double>(clusters[b].members.size()));
                auto lo = std::min(clusters[a].min_key, clusters[b].min_key);
                auto hi = std::max(clusters[a].min_key, clusters[b].min_key);
                auto best_lo = std::min(clusters[best_a].min_key, clusters[best_b].min_key);
                auto best_hi = std::max(clusters[best_a].min_key, clusters[best_b].min_key);
                bool better = avg < best_d ||
                              (avg == best_d && std::tie(lo, hi) < std::tie(best_lo, best_hi));
                if (better) {
                    best_d = avg;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        // merge best_b into best_a
        auto& A = clusters[best_a];
        auto& B = clusters[best_b];
        A.members.insert(A.members.end(), B.members.begin(), B.members.end());
        A.min_key = std::min(A.min_key, B.min_key);
        for (std::size_t c = 0; c < clusters.size(); ++c) {
            if (c == best_a || c == best_b) continue;
            sums[best_a][c] += sums[best_b][c];
            sums[c][best_a] = sums[best_a][c];
        }
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
        for (auto& row : sums) row.erase(row.begin() + static_cast<std::ptrdiff_t>(best_b));
        sums.erase(sums.begin() + static_cast<std::ptrdiff_t>(best_b));
    }

    // order clusters: total speech duration descending, ties by smallest key
    std::vector<std::size_t> order(clusters.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<double> totals(clusters.size(), 0.0);
    for (std::size_t c = 0; c < clusters.size(); ++c)
        for (std::size_t m : clusters[c].members) {
            auto it = speech_durations.find(keys[m]);
            totals[c] += it == speech_durations.end() ? 0.0 : it->second;
        }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (totals[a] != totals[b]) return totals[a] > totals[b];
        return clusters[a].min_key < clusters[b].min_key;
    });

    std::map<LocalSpeakerKey, GlobalSpeakerId> result;
    for (std::size_t rank = 0; rank < order.size(); ++rank)
        for (std::size_t m : clusters[order[rank]].members)
            result[keys[m]] = static_cast<GlobalSpeakerId>(rank);
    return result;
}

inline std::map<LocalSpeakerKey, double> speech_durations(
    const std::vector<ChunkDiarization>& chunks) {
    std::map<LocalSpeakerKey, double> out;
    for (const auto& chunk : chunks)
        for (const auto& [key, span] : chunk.segments) out[key] += span.second - span.first;
    return out;
}

// ---------------------------------------------------------------------------
// Relabels chunk segments to global ids and reconciles the overlap windows:
// a segment from the later chunk whose midpoint lies inside the overlap is
// discarded in favor of the earlier chunk's output. Segments straddling the
// window (midpoint outside) survive. Same-speaker segments nested inside a
// longer one are removed afterwards.
// ---------------------------------------------------------------------------
inline std::vector<SpeakerSegment> unify_labels(
    const std::vector<ChunkDiarization>& chunks,
    const std::map<LocalSpeakerKey, GlobalSpeakerId>& cluster_map,
    WarningLog* warnings = nullptr) {
    // chunk_index -> end of the previous chunk (start of this chunk's overlap)
    std::map<int, double> prev_end;
    {
        std::map<int, double> ends;
        for (const auto& chunk : chunks) ends[chunk.chunk_index] = chunk.chunk_end_s;
        for (const auto& chunk : chunks) {
            auto it = ends.find(chunk.chunk_index - 1);
            if (it != ends.end()) prev_end[chunk.chunk_index] = it->second;
        }
    }

    std::vector<SpeakerSegment> out;
    for (const auto& chunk : chunks) {
        for (const auto& [key, span] : chunk.segments) {
            auto mapped = cluster_map.find(key);
            if (mapped == cluster_map.end()) {
                warn(warnings, "UnmappedLocalSpeaker",
                     "segment of " + key.str() + " dropped: no cluster assignment");
                continue;
            }
            if (auto it = prev_end.find(chunk.chunk_index); it != prev_end.end()) {
                double mid = 0.5 * (span.first + span.second);
                if (mid >= chunk.chunk_start_s && mid < it->second) continue;
            }
            out.push_back({mapped->second, span.first, span.second, chunk.chunk_index});
        }
    }

    std::sort(out.begin(), out.end(), [](const SpeakerSegment& a, const SpeakerSegment& b) {
        return std::tie(a.start_s, a.end_s, a.speaker) < std::tie(b.start_s, b.end_s, b.speaker);
    });

    // drop same-speaker segments nested inside another segment
    std::vector<SpeakerSegment> cleaned;
    for (const auto& seg : out) {
        bool nested = false;
        for (const auto& other : out) {
            if (other == seg || other.speaker != seg.speaker) continue;
            bool contains = other.start_s <= seg.start_s && seg.end_s <= other.end_s;
            bool longer = (other.end_s - other.start_s) > (seg.end_s - seg.start_s);
            if (contains && longer) {
                nested = true;
                break;
            }
        }
        if (!nested) cleaned.push_back(seg);
    }
    // exact duplicates: keep one
    cleaned.erase(std::unique(cleaned.begin(), cleaned.end()), cleaned.end());
    return cleaned;
}

}  // namespace carevox
