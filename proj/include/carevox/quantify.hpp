#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "carevox/backends.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"
#include "carevox/diarize.hpp"

namespace carevox {

struct NoPhrases final : Error { using Error::Error; };

struct QuantifiedFeature {
    AcousticFeature feature = AcousticFeature::energy;
    std::vector<int> phrase_levels;
    double visit_level = 0.0;
};

inline void to_json(json& j, const QuantifiedFeature& q) {
    j = json{{"feature", to_string(q.feature)},
             {"phrase_levels", q.phrase_levels},
             {"visit_level", q.visit_level}};
}

inline void from_json(const json& j, QuantifiedFeature& q) {
    auto f = acoustic_feature_from_string(j.at("feature").get<std::string>());
    if (!f) throw Error("unknown feature: " + j.at("feature").get<std::string>());
    q.feature = *f;
    q.phrase_levels = j.at("phrase_levels").get<std::vector<int>>();
    q.visit_level = j.at("visit_level").get<double>();
}

// Anchor phrases written "a/b" in prose denote two anchors sharing a level.
inline std::map<AcousticFeature, AnchorScale> builtin_scales() {
    std::map<AcousticFeature, AnchorScale> scales;
    scales[AcousticFeature::energy] = AnchorScale{
        "energy",
        {{1, {"low", "soft"}},
         {2, {"soft to moderate"}},
         {3, {"moderate"}},
         {4, {"consistent", "steady"}}}};
    scales[AcousticFeature::discomfort_fatigue] = AnchorScale{
        "discomfort_fatigue",
        {{1, {"no evident", "no apparent"}},
         {2, {"mild discomfort", "mild fatigue"}},
         {3, {"moderate discomfort", "moderate fatigue"}},
         {4, {"noticeable discomfort", "noticeable fatigue"}}}};
    return scales;
}

// Per-run embedding cache so repeated phrases and the anchor set cost one
// backend call each. Safe for concurrent use.
class CachingTextEmbedder final : public TextEmbedderBackend {
  public:
    explicit CachingTextEmbedder(std::shared_ptr<TextEmbedderBackend> inner)
        : inner_(std::move(inner)) {}

    int dimension() override { return inner_->dimension(); }

    std::vector<double> embed(const std::string& text) override {
        {
            std::lock_guard lk(m_);
            auto it = cache_.find(text);
            if (it != cache_.end()) return it->second;
        }
        auto vec = inner_->embed(text);
        std::lock_guard lk(m_);
        cache_[text] = vec;
        return vec;
    }

    std::size_t cache_size() const {
        std::lock_guard lk(m_);
        return cache_.size();
    }

  private:
    std::shared_ptr<TextEmbedderBackend> inner_;
    mutable std::mutex m_;
    std::map<std::string, std::vector<double>> cache_;
};

// Level of the anchor with maximal cosine similarity to the phrase; exact
// ties resolve to the lower level.
inline int anchor_score(const std::string& phrase, const AnchorScale& scale,
                        TextEmbedderBackend& embedder) {
    if (!scale.valid()) throw Error("invalid anchor scale " + scale.name);
    auto phrase_vec = embedder.embed(phrase);
    if (phrase_vec.empty() || is_zero_embedding(phrase_vec))
        throw EmbeddingFailed("phrase embedding failed: " + phrase);
    int best_level = scale.levels.front().first;
    double best_sim = -2.0;
    for (const auto& [level, anchors] : scale.levels) {
        for (const auto& anchor : anchors) {
            auto anchor_vec = embedder.embed(anchor);
            if (anchor_vec.empty() || is_zero_embedding(anchor_vec))
                throw EmbeddingFailed("anchor embedding failed: " + anchor);
            double sim = cosine_similarity(phrase_vec, anchor_vec);
            if (sim > best_sim) {
                best_sim = sim;
                best_level = level;
            }
        }
    }
    return best_level;
}

// Per-phrase anchor levels aggregated to the visit level by arithmetic mean.
inline QuantifiedFeature quantify_visit(const AcousticDescription& description,
                                        const AnchorScale& scale,
                                        TextEmbedderBackend& embedder) {
    if (description.phrases.empty())
        throw NoPhrases("no phrases to quantify for " + to_string(description.feature));
    QuantifiedFeature out;
    out.feature = description.feature;
    double sum = 0.0;
    for (const auto& phrase : description.phrases) {
        int level = anchor_score(phrase, scale, embedder);
        out.phrase_levels.push_back(level);
        sum += level;
    }
    out.visit_level = sum / static_cast<double>(out.phrase_levels.size());
    return out;
}

}  // namespace carevox
