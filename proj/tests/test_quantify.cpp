#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "carevox/quantify.hpp"

using namespace carevox;

namespace {

// Embeds each known string as its own one-hot axis; unknown strings embed to a
// shared distinct axis.
class OneHotEmbedder : public TextEmbedderBackend {
  public:
    std::map<std::string, std::size_t> axis;
    std::size_t calls = 0;

    explicit OneHotEmbedder(const std::vector<std::string>& vocabulary) {
        for (const auto& word : vocabulary) axis.emplace(word, axis.size());
    }
    int dimension() override { return static_cast<int>(axis.size() + 1); }
    std::vector<double> embed(const std::string& text) override {
        ++calls;
        std::vector<double> v(axis.size() + 1, 0.0);
        auto it = axis.find(text);
        v[it == axis.end() ? axis.size() : it->second] = 1.0;
        return v;
    }
};

std::vector<std::string> scale_vocabulary(const AnchorScale& scale) {
    std::vector<std::string> vocab;
    for (const auto& [_, anchors] : scale.levels)
        vocab.insert(vocab.end(), anchors.begin(), anchors.end());
    return vocab;
}

}  // namespace

TEST_CASE("builtin scales match the anchor definitions") {
    auto scales = builtin_scales();
    REQUIRE(scales.size() == 2);

    const auto& energy = scales.at(AcousticFeature::energy);
    CHECK(energy.valid());
    REQUIRE(energy.levels.size() == 4);
    CHECK(energy.levels[0].second == std::vector<std::string>{"low", "soft"});
    CHECK(energy.levels[1].second == std::vector<std::string>{"soft to moderate"});
    CHECK(energy.levels[2].second == std::vector<std::string>{"moderate"});
    CHECK(energy.levels[3].second == std::vector<std::string>{"consistent", "steady"});

    const auto& disc = scales.at(AcousticFeature::discomfort_fatigue);
    CHECK(disc.valid());
    REQUIRE(disc.levels.size() == 4);
    CHECK(disc.levels[0].second == std::vector<std::string>{"no evident", "no apparent"});
    CHECK(disc.levels[1].second == std::vector<std::string>{"mild discomfort", "mild fatigue"});
    CHECK(disc.levels[2].second ==
          std::vector<std::string>{"moderate discomfort", "moderate fatigue"});
    CHECK(disc.levels[3].second ==
          std::vector<std::string>{"noticeable discomfort", "noticeable fatigue"});
}

TEST_CASE("anchor_score self-match: every anchor maps to its own level") {
    for (const auto& [feature, scale] : builtin_scales()) {
        OneHotEmbedder embedder(scale_vocabulary(scale));
        for (const auto& [level, anchors] : scale.levels)
            for (const auto& anchor : anchors)
                CHECK(anchor_score(anchor, scale, embedder) == level);
    }
}

TEST_CASE("phrase equidistant between two levels takes the lower one") {
    AnchorScale scale{"x", {{1, {"a"}}, {2, {"b"}}, {3, {"c"}}}};
    OneHotEmbedder embedder({"a", "b", "c"});
    // unknown phrase is orthogonal to every anchor: all similarities tie at 0
    CHECK(anchor_score("mystery", scale, embedder) == 1);
}

TEST_CASE("anchor_score is invariant under positive scaling of all embeddings") {
    struct ScalingEmbedder : TextEmbedderBackend {
        std::mt19937_64 rng{123};
        std::map<std::string, std::vector<double>> memo;
        double factor = 1.0;
        int dimension() override { return 6; }
        std::vector<double> embed(const std::string& text) override {
            auto it = memo.find(text);
            if (it == memo.end()) {
                std::normal_distribution<double> gauss;
                std::vector<double> v(6);
                for (auto& x : v) x = gauss(rng);
                it = memo.emplace(text, std::move(v)).first;
            }
            auto v = it->second;
            for (auto& x : v) x *= factor;
            return v;
        }
    };

    auto scale = builtin_scales().at(AcousticFeature::energy);
    ScalingEmbedder embedder;
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        std::string phrase = "phrase-" + std::to_string(trial);
        embedder.factor = 1.0;
        int base = anchor_score(phrase, scale, embedder);
        embedder.factor = 0.001 + (rng() % 10000) / 100.0;
        CHECK(anchor_score(phrase, scale, embedder) == base);
    }
}

TEST_CASE("quantify_visit averages per-phrase levels") {
    auto scale = builtin_scales().at(AcousticFeature::energy);
    OneHotEmbedder embedder(scale_vocabulary(scale));

    AcousticDescription d{AcousticFeature::energy, {"low", "soft to moderate"}};
    auto q = quantify_visit(d, scale, embedder);
    CHECK(q.phrase_levels == std::vector<int>{1, 2});
    CHECK(q.visit_level == Catch::Approx(1.5));

    AcousticDescription single{AcousticFeature::energy, {"steady"}};
    auto qs = quantify_visit(single, scale, embedder);
    CHECK(qs.visit_level == Catch::Approx(4.0));

    AcousticDescription empty{AcousticFeature::energy, {}};
    CHECK_THROWS_AS(quantify_visit(empty, scale, embedder), NoPhrases);
}

TEST_CASE("visit level stays within the per-phrase level range") {
    auto scale = builtin_scales().at(AcousticFeature::discomfort_fatigue);
    std::mt19937_64 rng(13);
    struct HashEmbedder : TextEmbedderBackend {
        int dimension() override { return 8; }
        std::vector<double> embed(const std::string& text) override {
            std::uint64_t state = fnv1a64(text);
            std::vector<double> v(8);
            for (auto& x : v) x = splitmix_unit(state) * 2.0 - 1.0;
            return v;
        }
    } embedder;
    for (int trial = 0; trial < 100; ++trial) {
        AcousticDescription d{AcousticFeature::discomfort_fatigue, {}};
        int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i)
            d.phrases.push_back("p" + std::to_string(rng() % 40));
        auto q = quantify_visit(d, scale, embedder);
        auto [lo, hi] = std::minmax_element(q.phrase_levels.begin(), q.phrase_levels.end());
        CHECK(q.visit_level >= *lo);
        CHECK(q.visit_level <= *hi);
        CHECK(q.visit_level >= 1.0);
        CHECK(q.visit_level <= 4.0);
    }
}

TEST_CASE("caching embedder calls the backend once per unique string") {
    auto scale = builtin_scales().at(AcousticFeature::energy);
    auto inner = std::make_shared<OneHotEmbedder>(scale_vocabulary(scale));
    CachingTextEmbedder cached(inner);

    AcousticDescription d{AcousticFeature::energy, {"moderate", "moderate", "low"}};
    // normalize_phrases would have deduplicated; feed duplicates deliberately
    quantify_visit(d, scale, cached);
    quantify_visit(d, scale, cached);
    // 2 unique phrases + 6 anchors
    CHECK(inner->calls == 8);
    CHECK(cached.cache_size() == 8);
}

TEST_CASE("invalid scales are rejected") {
    OneHotEmbedder embedder({"a"});
    AnchorScale bad{"bad", {{2, {"a"}}}};
    CHECK_THROWS_AS(anchor_score("a", bad, embedder), Error);
}
