#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "carevox/align.hpp"

using namespace carevox;

namespace {

class FakeAsr : public AsrBackend {
  public:
    std::vector<AsrWord> words;
    std::vector<AsrWord> transcribe(const std::vector<std::uint8_t>&) override { return words; }
};

TimedWord w(const std::string& text, double a, double b,
            std::optional<GlobalSpeakerId> spk = std::nullopt) {
    return {text, a, b, spk};
}

}  // namespace

TEST_CASE("transcribe returns ordered words without speakers") {
    AudioBuffer silence;
    silence.sample_rate_hz = 8000;
    silence.samples.assign(8000, 0.0f);

    FakeAsr asr;
    SECTION("silence gives an empty list") {
        CHECK(transcribe(silence, asr).empty());
    }
    SECTION("single word passes through") {
        asr.words = {{"hello.", 0.0, 0.4}};
        auto out = transcribe(silence, asr);
        REQUIRE(out.size() == 1);
        CHECK(out[0].text == "hello.");
        CHECK_FALSE(out[0].speaker.has_value());
    }
    SECTION("out-of-order backend output is re-sorted by start time") {
        asr.words = {{"you?", 1.0, 1.2}, {"are", 0.5, 0.9}, {"How", 0.0, 0.4}};
        auto out = transcribe(silence, asr);
        REQUIRE(out.size() == 3);
        CHECK(out[0].text == "How");
        CHECK(out[1].text == "are");
        CHECK(out[2].text == "you?");
    }
    SECTION("whitespace-only words are dropped, text is trimmed") {
        asr.words = {{"  hi. ", 0.0, 0.2}, {"   ", 0.3, 0.4}};
        auto out = transcribe(silence, asr);
        REQUIRE(out.size() == 1);
        CHECK(out[0].text == "hi.");
    }
}

TEST_CASE("assign_word_speakers picks the maximal-overlap speaker") {
    std::vector<SpeakerSegment> segs = {{0, 0.0, 10.0, 0}};
    auto out = assign_word_speakers({w("x", 1.0, 1.5)}, segs);
    REQUIRE(out[0].speaker.has_value());
    CHECK(*out[0].speaker == 0);
}

TEST_CASE("equal-overlap ties go to the lower speaker id") {
    std::vector<SpeakerSegment> segs = {{0, 0.0, 5.0, 0}, {1, 5.0, 10.0, 0}};
    auto out = assign_word_speakers({w("x", 4.9, 5.1)}, segs);
    REQUIRE(out[0].speaker.has_value());
    CHECK(*out[0].speaker == 0);

    // and with ids listed in the other order
    std::vector<SpeakerSegment> reversed = {{1, 0.0, 5.0, 0}, {0, 5.0, 10.0, 0}};
    auto out2 = assign_word_speakers({w("x", 4.9, 5.1)}, reversed);
    CHECK(*out2[0].speaker == 0);
}

TEST_CASE("words without overlap stay unassigned") {
    std::vector<SpeakerSegment> segs = {{0, 0.0, 10.0, 0}};
    auto out = assign_word_speakers({w("x", 20.0, 21.0)}, segs);
    CHECK_FALSE(out[0].speaker.has_value());

    // zero-length word has zero overlap by definition
    auto point = assign_word_speakers({w("x", 3.0, 3.0)}, segs);
    CHECK_FALSE(point[0].speaker.has_value());
}

TEST_CASE("overlap is summed across a speaker's segments") {
    // speaker 1 touches the word twice for 0.3 total, speaker 0 once for 0.25
    std::vector<SpeakerSegment> segs = {
        {1, 0.0, 0.2, 0}, {0, 0.2, 0.45, 0}, {1, 0.45, 1.0, 0}};
    auto out = assign_word_speakers({w("x", 0.1, 0.55)}, segs);
    REQUIRE(out[0].speaker.has_value());
    CHECK(*out[0].speaker == 1);
}

TEST_CASE("assign_word_speakers never invents a speaker id") {
    std::mt19937_64 rng(31);
    std::vector<SpeakerSegment> segs;
    std::set<GlobalSpeakerId> known;
    for (int i = 0; i < 10; ++i) {
        GlobalSpeakerId id = static_cast<int>(rng() % 4);
        double a = (rng() % 600) / 10.0;
        segs.push_back({id, a, a + 1.0 + (rng() % 30) / 10.0, 0});
        known.insert(id);
    }
    std::vector<TimedWord> words;
    for (int i = 0; i < 200; ++i) {
        double a = (rng() % 700) / 10.0;
        words.push_back(w("t", a, a + (rng() % 10) / 10.0));
    }
    for (const auto& word : assign_word_speakers(words, segs))
        if (word.speaker) CHECK(known.count(*word.speaker) == 1);
}

TEST_CASE("group_sentences splits on end-of-sentence punctuation") {
    auto c1 = group_sentences({w("I", 0, 1), w("feel", 1, 2), w("fine.", 2, 3)});
    REQUIRE(c1.size() == 1);
    CHECK(c1[0].words.size() == 3);
    CHECK(c1[0].terminated);

    auto c2 = group_sentences({w("Hello.", 0, 1), w("How", 1, 2), w("are", 2, 3), w("you?", 3, 4)});
    REQUIRE(c2.size() == 2);
    CHECK(c2[0].words.size() == 1);
    CHECK(c2[1].words.size() == 3);
    CHECK(c2[1].terminated);

    auto c3 = group_sentences({w("well", 0, 1), w("ok", 1, 2)});
    REQUIRE(c3.size() == 1);
    CHECK_FALSE(c3[0].terminated);
}

TEST_CASE("terminators tolerate trailing quotes and brackets") {
    auto c = group_sentences({w("said", 0, 1), w("\"stop.\"", 1, 2), w("Go!", 2, 3),
                              w("(now?)", 3, 4), w("um", 4, 5)});
    REQUIRE(c.size() == 4);
    CHECK(c[0].terminated);
    CHECK(c[1].terminated);
    CHECK(c[2].terminated);
    CHECK_FALSE(c[3].terminated);
}

TEST_CASE("group_sentences partitions the input exactly") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TimedWord> words;
        int n = static_cast<int>(rng() % 40);
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            std::string text = "w" + std::to_string(i);
            switch (rng() % 5) {
                case 0: text += "."; break;
                case 1: text += "?"; break;
                case 2: text += "!"; break;
                default: break;
            }
            words.push_back(w(text, t, t + 0.3));
            t += 0.4;
        }
        std::vector<TimedWord> flattened;
        for (const auto& cand : group_sentences(words))
            flattened.insert(flattened.end(), cand.words.begin(), cand.words.end());
        REQUIRE(flattened == words);
    }
}

TEST_CASE("filter_sentences keeps single-speaker terminated sentences") {
    std::vector<SentenceCandidate> cands = {
        {{w("all", 0, 1, 0), w("good.", 1, 2, 0)}, true}};
    auto out = filter_sentences(cands);
    REQUIRE(out.size() == 1);
    CHECK(out[0].speaker == 0);
    CHECK(out[0].words.size() == 2);
}

TEST_CASE("filter_sentences drops sentences with unassigned words") {
    std::vector<SentenceCandidate> cands = {
        {{w("a", 0, 1, 1), w("b", 1, 2, 1), w("c", 2, 3), w("d.", 3, 4, 1)}, true}};
    CHECK(filter_sentences(cands).empty());
}

TEST_CASE("filter_sentences drops mixed-speaker sentences") {
    std::vector<SentenceCandidate> cands = {
        {{w("a", 0, 1, 0), w("b", 1, 2, 0), w("c.", 2, 3, 1)}, true}};
    CHECK(filter_sentences(cands).empty());
}

TEST_CASE("filter_sentences drops unterminated candidates") {
    std::vector<SentenceCandidate> cands = {{{w("a", 0, 1, 0), w("b", 1, 2, 0)}, false}};
    CHECK(filter_sentences(cands).empty());
}

TEST_CASE("filtered sentences satisfy the sentence invariants") {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<TimedWord> words;
        int n = 1 + static_cast<int>(rng() % 30);
        double t = 0.0;
        for (int i = 0; i < n; ++i) {
            std::string text = "w" + std::to_string(i) + (rng() % 3 == 0 ? "." : "");
            std::optional<GlobalSpeakerId> spk;
            if (rng() % 4 != 0) spk = static_cast<int>(rng() % 3);
            words.push_back(w(text, t, t + 0.2 + (rng() % 5) / 10.0));
            words.back().speaker = spk;
            t += 0.6;
        }
        auto candidates = group_sentences(words);
        auto kept = filter_sentences(candidates);

        // brute-force filter: terminated, no unassigned word, single speaker
        std::size_t expected = 0;
        for (const auto& cand : candidates) {
            if (!cand.terminated || cand.words.empty()) continue;
            bool ok = cand.words.front().speaker.has_value();
            for (const auto& word : cand.words)
                ok = ok && word.speaker && *word.speaker == *cand.words.front().speaker;
            if (ok) ++expected;
        }
        REQUIRE(kept.size() == expected);

        for (const auto& s : kept) {
            CHECK(detail::ends_sentence(s.words.back().text));
            CHECK(s.duration_s() >= 0.0);
            for (const auto& word : s.words) {
                REQUIRE(word.speaker.has_value());
                CHECK(*word.speaker == s.speaker);
            }
        }
    }
}
