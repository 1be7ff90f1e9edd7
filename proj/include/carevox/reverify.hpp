#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "carevox/audio.hpp"
#include "carevox/backends.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"
#include "carevox/diarize.hpp"

namespace carevox {

struct EmptyMeans final : Error { using Error::Error; };
struct NoUsableSpeech final : Error { using Error::Error; };

// Pass-through when no enhancer is configured; on backend failure the
// original audio is kept and a warning recorded.
inline AudioBuffer enhance(const AudioBuffer& audio, EnhancerBackend* backend,
                           WarningLog* warnings = nullptr) {
    if (!backend) return audio;
    try {
        return decode_wav(backend->enhance(encode_wav(audio)));
    } catch (const std::exception& e) {
        warn(warnings, "EnhancementFailed",
             std::string("enhancement failed, using original audio: ") + e.what());
        return audio;
    }
}

// One embedding per sentence, cut from the (enhanced) audio. A failed or zero
// embedding drops the sentence from re-verification with a warning; the
// returned lists stay parallel.
struct SentenceEmbeddings {
    std::vector<Sentence> sentences;
    std::vector<Embedding> embeddings;
};

inline SentenceEmbeddings embed_sentences(const AudioBuffer& audio,
                                          const std::vector<Sentence>& sentences,
                                          SpeakerEmbedderBackend& backend,
                                          WarningLog* warnings = nullptr) {
    SentenceEmbeddings out;
    for (const auto& sentence : sentences) {
        double s = std::max(0.0, sentence.start_s());
        double e = std::min(audio.duration_s(), sentence.end_s());
        if (!(s < e)) {
            warn(warnings, "EmbeddingFailed", "sentence outside audio at " +
                                                  std::to_string(sentence.start_s()) + "s");
            continue;
        }
        try {
            auto emb = backend.embed(encode_wav(slice(audio, s, e)));
            if (emb.empty() || is_zero_embedding(emb))
                throw EmbeddingFailed("zero embedding");
            out.sentences.push_back(sentence);
            out.embeddings.push_back(std::move(emb));
        } catch (const std::exception& ex) {
            warn(warnings, "EmbeddingFailed",
                 "sentence at " + std::to_string(sentence.start_s()) + "s dropped: " + ex.what());
        }
    }
    return out;
}

// Arithmetic mean embedding per diarization-era speaker label. Speakers with
// no sentences are absent from the map.
inline std::map<GlobalSpeakerId, Embedding> mean_embeddings(
    const std::vector<Sentence>& sentences, const std::vector<Embedding>& embeddings) {
    std::map<GlobalSpeakerId, std::pair<Embedding, std::size_t>> acc;
    for (std::size_t i = 0; i < sentences.size() && i < embeddings.size(); ++i) {
        auto& [sum, count] = acc[sentences[i].speaker];
        if (sum.empty()) sum.assign(embeddings[i].size(), 0.0);
        for (std::size_t d = 0; d < sum.size() && d < embeddings[i].size(); ++d)
            sum[d] += embeddings[i][d];
        ++count;
    }
    std::map<GlobalSpeakerId, Embedding> means;
    for (auto& [speaker, pair] : acc) {
        auto& [sum, count] = pair;
        for (auto& v : sum) v /= static_cast<double>(count);
        means[speaker] = std::move(sum);
    }
    return means;
}

// Most-similar speaker mean by cosine similarity; exact ties go to the lower
// speaker id (map iteration order).
inline std::pair<GlobalSpeakerId, double> reassign(
    const Embedding& embedding, const std::map<GlobalSpeakerId, Embedding>& means) {
    if (means.empty()) throw EmptyMeans("no speaker means available");
    GlobalSpeakerId best_id = means.begin()->first;
    double best_sim = -2.0;
    for (const auto& [speaker, mean] : means) {
        double sim = cosine_similarity(embedding, mean);
        if (sim > best_sim) {
            best_sim = sim;
            best_id = speaker;
        }
    }
    return {best_id, best_sim};
}

// Keeps exactly the sentences whose re-inferred speaker matches the
// diarization label. Means are computed beforehand from the pre-filter set
// and held fixed; this is a single verification pass.
inline std::vector<Sentence> verify_filter(const std::vector<Sentence>& sentences,
                                           const std::vector<Embedding>& embeddings,
                                           const std::map<GlobalSpeakerId, Embedding>& means) {
    std::vector<Sentence> kept;
    for (std::size_t i = 0; i < sentences.size() && i < embeddings.size(); ++i) {
        auto [speaker, sim] = reassign(embeddings[i], means);
        if (speaker == sentences[i].speaker) kept.push_back(sentences[i]);
    }
    return kept;
}

// Assembles one speaker's analysis clip: sentences strictly longer than
// min_sentence_s are cut from the original audio in chronological order,
// joined with gap_s of silence, and capped at cap_s.
inline AudioBuffer build_speaker_clip(const std::vector<Sentence>& speaker_sentences,
                                      const AudioBuffer& audio, double min_sentence_s = 0.5,
                                      double gap_s = 0.5, double cap_s = 30.0) {
    std::vector<Sentence> ordered = speaker_sentences;
    std::sort(ordered.begin(), ordered.end(), [](const Sentence& a, const Sentence& b) {
        return a.start_s() < b.start_s();
    });
    std::vector<AudioBuffer> pieces;
    for (const auto& sentence : ordered) {
        if (!(sentence.duration_s() > min_sentence_s)) continue;
        double s = std::max(0.0, sentence.start_s());
        double e = std::min(audio.duration_s(), sentence.end_s());
        if (s < e) pieces.push_back(slice(audio, s, e));
    }
    if (pieces.empty()) throw NoUsableSpeech("no verified sentence longer than " +
                                             std::to_string(min_sentence_s) + "s");
    return truncate(concat_with_silence(pieces, gap_s), cap_s);
}

}  // namespace carevox
