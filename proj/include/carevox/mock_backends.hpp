#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carevox/audio.hpp"
#include "carevox/backends.hpp"
#include "carevox/common.hpp"

namespace carevox {

// A scripted model backend refuses to fabricate: a prompt with no scripted
// reply fails loudly.
struct ScriptMiss final : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Deterministic audio fingerprinting shared by the mock ASR, diarizer and
// speaker embedder. Windows are classified by RMS (voiced/silent) and by
// zero-crossing rate bucketed into coarse bands, so two slices of the same
// synthetic tone land in the same band.
// ---------------------------------------------------------------------------

namespace mockdet {

inline constexpr double kWindowS = 0.2;
inline constexpr double kVoicedRms = 0.01;
inline constexpr double kBandWidthHz = 700.0;  // zero-crossings per second per band

struct VoicedRun {
    double start_s = 0.0;
    double end_s = 0.0;
    int band = -1;
};

inline int window_band(const AudioBuffer& audio, std::size_t i0, std::size_t i1) {
    if (i1 <= i0 + 1) return -1;
    double energy = 0.0;
    std::size_t crossings = 0;
    for (std::size_t i = i0; i < i1; ++i) {
        double s = audio.samples[i];
        energy += s * s;
        if (i > i0) {
            bool prev_neg = audio.samples[i - 1] < 0.0f;
            bool cur_neg = audio.samples[i] < 0.0f;
            if (prev_neg != cur_neg) ++crossings;
        }
    }
    double rms = std::sqrt(energy / static_cast<double>(i1 - i0));
    if (rms < kVoicedRms) return -1;
    double dur = static_cast<double>(i1 - i0) / audio.sample_rate_hz;
    double zcr = static_cast<double>(crossings) / dur;
    return static_cast<int>(std::floor(zcr / kBandWidthHz));
}

inline std::vector<VoicedRun> voiced_runs(const AudioBuffer& audio) {
    std::vector<VoicedRun> runs;
    const auto win = static_cast<std::size_t>(sample_index(kWindowS, audio.sample_rate_hz));
    if (win == 0 || audio.samples.empty()) return runs;
    for (std::size_t i0 = 0; i0 < audio.samples.size(); i0 += win) {
        std::size_t i1 = std::min(i0 + win, audio.samples.size());
        int band = window_band(audio, i0, i1);
        double ws = static_cast<double>(i0) / audio.sample_rate_hz;
        double we = static_cast<double>(i1) / audio.sample_rate_hz;
        if (band < 0) continue;
        if (!runs.empty() && runs.back().band == band &&
            std::abs(runs.back().end_s - ws) < 1e-9) {
            runs.back().end_s = we;
        } else {
            runs.push_back({ws, we, band});
        }
    }
    return runs;
}

// Band carrying the most voiced time, or nullopt for silence-only audio.
inline std::optional<int> dominant_band(const AudioBuffer& audio) {
    std::map<int, double> dur;
    for (const auto& run : voiced_runs(audio)) dur[run.band] += run.end_s - run.start_s;
    if (dur.empty()) return std::nullopt;
    auto best = dur.begin();
    for (auto it = dur.begin(); it != dur.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

inline std::vector<double> unit_vector(std::uint64_t seed, int dim) {
    std::uint64_t state = seed;
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& x : v) {
            x = splitmix_unit(state) * 2.0 - 1.0;
            norm += x * x;
        }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

}  // namespace mockdet

// ---------------------------------------------------------------------------
// Scripted reply store for the chat and audio LMs. Rules match either an exact
// prompt fingerprint or a set of substrings; the first matching rule wins and
// its replies are consumed in order (the last one repeats).
// ---------------------------------------------------------------------------

struct ScriptRule {
    std::vector<std::string> contains;
    std::optional<std::string> fingerprint;  // hex fnv1a64 of the full match target
    std::vector<std::string> replies;
    std::size_t next = 0;
};

class ScriptBook {
  public:
    void add(ScriptRule rule) {
        std::lock_guard lk(m_);
        rules_.push_back(std::move(rule));
    }

    std::string reply_for(const std::string& target, const std::string& what) {
        const std::string fp = to_hex(fnv1a64(target));
        std::lock_guard lk(m_);
        for (auto& rule : rules_) {
            if (rule.fingerprint) {
                if (*rule.fingerprint != fp) continue;
            } else {
                bool all = true;
                for (const auto& needle : rule.contains)
                    if (target.find(needle) == std::string::npos) { all = false; break; }
                if (!all) continue;
            }
            if (rule.replies.empty()) break;
            std::size_t i = std::min(rule.next, rule.replies.size() - 1);
            ++rule.next;
            return rule.replies[i];
        }
        throw ScriptMiss(what + " prompt fingerprint " + fp + " has no scripted reply; prompt starts: \"" +
                         target.substr(0, 120) + "\"");
    }

  private:
    std::mutex m_;
    std::vector<ScriptRule> rules_;
};

inline std::vector<ScriptRule> parse_script_rules(const nlohmann::json& arr) {
    std::vector<ScriptRule> rules;
    for (const auto& r : arr) {
        ScriptRule rule;
        if (r.contains("contains")) rule.contains = r.at("contains").get<std::vector<std::string>>();
        if (r.contains("fingerprint")) rule.fingerprint = r.at("fingerprint").get<std::string>();
        if (r.at("replies").is_string())
            rule.replies.push_back(r.at("replies").get<std::string>());
        else
            rule.replies = r.at("replies").get<std::vector<std::string>>();
        rules.push_back(std::move(rule));
    }
    return rules;
}

// ---------------------------------------------------------------------------
// Mock backends
// ---------------------------------------------------------------------------

class MockAsr final : public AsrBackend {
  public:
    explicit MockAsr(std::uint64_t seed) : seed_(seed) {}

    std::vector<AsrWord> transcribe(const std::vector<std::uint8_t>& wav) override {
        static const char* lexicon[] = {"note",  "level", "steady", "update", "check", "rest",
                                        "daily", "walk",  "breath", "calm",   "meal",  "sleep"};
        AudioBuffer audio = decode_wav(wav);
        std::vector<AsrWord> words;
        int run_index = 0;
        for (const auto& run : mockdet::voiced_runs(audio)) {
            double run_dur = run.end_s - run.start_s;
            int n_sentences = std::max(1, static_cast<int>(std::floor(run_dur / 1.2)));
            double sent_dur = run_dur / n_sentences;
            for (int s = 0; s < n_sentences; ++s) {
                double s0 = run.start_s + s * sent_dur;
                std::uint64_t h = seed_ ^ fnv1a64("asr:" + std::to_string(run.band) + ":" +
                                                  std::to_string(run_index) + ":" + std::to_string(s));
                std::string mid = lexicon[splitmix64(h) % 12];
                const std::string texts[3] = {"band" + std::to_string(run.band), mid, "mark."};
                for (int w = 0; w < 3; ++w) {
                    words.push_back({texts[w], s0 + w * sent_dur / 3.0, s0 + (w + 1) * sent_dur / 3.0});
                }
            }
            ++run_index;
        }
        return words;
    }

  private:
    std::uint64_t seed_;
};

class MockDiarizer final : public DiarizerBackend {
  public:
    explicit MockDiarizer(std::uint64_t seed) : seed_(seed) { (void)seed_; }

    std::vector<DiarSegment> diarize(const std::vector<std::uint8_t>& wav,
                                     int max_speakers) override {
        AudioBuffer audio = decode_wav(wav);
        auto runs = mockdet::voiced_runs(audio);
        // keep the max_speakers most talkative bands
        std::map<int, double> dur;
        for (const auto& r : runs) dur[r.band] += r.end_s - r.start_s;
        std::vector<std::pair<double, int>> ranked;
        for (const auto& [band, d] : dur) ranked.push_back({d, band});
        std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        std::vector<int> kept;
        for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(max_speakers); ++i)
            kept.push_back(ranked[i].second);

        std::vector<DiarSegment> segs;
        for (const auto& r : runs) {
            if (std::find(kept.begin(), kept.end(), r.band) == kept.end()) continue;
            segs.push_back({"band" + std::to_string(r.band), r.start_s, r.end_s});
        }
        return segs;
    }

  private:
    std::uint64_t seed_;
};

class MockSpeakerEmbedder final : public SpeakerEmbedderBackend {
  public:
    explicit MockSpeakerEmbedder(std::uint64_t seed, int dim = 16) : seed_(seed), dim_(dim) {}

    int dimension() override { return dim_; }

    // Same dominant band => identical vector; silence => zero vector, which the
    // pipeline treats as extraction failure.
    std::vector<double> embed(const std::vector<std::uint8_t>& wav) override {
        AudioBuffer audio = decode_wav(wav);
        auto band = mockdet::dominant_band(audio);
        if (!band) return std::vector<double>(static_cast<std::size_t>(dim_), 0.0);
        std::uint64_t key = seed_ ^ fnv1a64("spk-band:" + std::to_string(*band));
        return mockdet::unit_vector(key, dim_);
    }

  private:
    std::uint64_t seed_;
    int dim_;
};

class MockEnhancer final : public EnhancerBackend {
  public:
    std::vector<std::uint8_t> enhance(const std::vector<std::uint8_t>& wav) override {
        return wav;
    }
};

class MockChatLlm final : public ChatLlmBackend {
  public:
    explicit MockChatLlm(std::shared_ptr<ScriptBook> book) : book_(std::move(book)) {}

    std::string complete(const std::vector<ChatMessage>& messages) override {
        std::string target;
        for (const auto& m : messages) target += m.role + ": " + m.content + "\n";
        return book_->reply_for(target, "chat");
    }
    std::string model_id() const override { return "mock-chat"; }

  private:
    std::shared_ptr<ScriptBook> book_;
};

class MockAudioLm final : public AudioLmBackend {
  public:
    explicit MockAudioLm(std::shared_ptr<ScriptBook> book) : book_(std::move(book)) {}

    // The match target carries the dominant band of the clip so scripts can
    // address speakers of synthetic fixtures ("[audio band=3]").
    std::string query(const std::vector<std::uint8_t>& wav,
                      const std::string& instruction) override {
        AudioBuffer audio = decode_wav(wav);
        auto band = mockdet::dominant_band(audio);
        std::string target = instruction + "\n[audio band=" +
                             (band ? std::to_string(*band) : std::string("none")) + "]";
        return book_->reply_for(target, "audio_lm");
    }

  private:
    std::shared_ptr<ScriptBook> book_;
};

class MockTextEmbedder final : public TextEmbedderBackend {
  public:
    explicit MockTextEmbedder(std::uint64_t seed, int dim = 16) : seed_(seed), dim_(dim) {}

    int dimension() override { return dim_; }

    // Identical strings map to identical unit vectors.
    std::vector<double> embed(const std::string& text) override {
        return mockdet::unit_vector(seed_ ^ fnv1a64("text:" + text), dim_);
    }

  private:
    std::uint64_t seed_;
    int dim_;
};

// ---------------------------------------------------------------------------
// Mock suite
// ---------------------------------------------------------------------------

struct MockSuite {
    std::shared_ptr<MockAsr> asr;
    std::shared_ptr<MockDiarizer> diarizer;
    std::shared_ptr<MockSpeakerEmbedder> speaker_embedder;
    std::shared_ptr<MockEnhancer> enhancer;
    std::shared_ptr<MockChatLlm> chat_llm;
    std::shared_ptr<MockAudioLm> audio_lm;
    std::shared_ptr<MockTextEmbedder> text_embedder;
    std::shared_ptr<ScriptBook> chat_script;
    std::shared_ptr<ScriptBook> audio_lm_script;
};

inline MockSuite mock_suite(std::uint64_t seed) {
    MockSuite s;
    s.chat_script = std::make_shared<ScriptBook>();
    s.audio_lm_script = std::make_shared<ScriptBook>();
    s.asr = std::make_shared<MockAsr>(seed);
    s.diarizer = std::make_shared<MockDiarizer>(seed);
    s.speaker_embedder = std::make_shared<MockSpeakerEmbedder>(seed);
    s.enhancer = std::make_shared<MockEnhancer>();
    s.chat_llm = std::make_shared<MockChatLlm>(s.chat_script);
    s.audio_lm = std::make_shared<MockAudioLm>(s.audio_lm_script);
    s.text_embedder = std::make_shared<MockTextEmbedder>(seed);
    return s;
}

// Script file: {"chat": [rule...], "audio_lm": [rule...]} where each rule is
// {"contains": [...] | "fingerprint": "hex", "replies": "..."|[...]}.
inline void load_mock_script(MockSuite& suite, const nlohmann::json& doc) {
    if (doc.contains("chat"))
        for (auto& r : parse_script_rules(doc.at("chat"))) suite.chat_script->add(std::move(r));
    if (doc.contains("audio_lm"))
        for (auto& r : parse_script_rules(doc.at("audio_lm")))
            suite.audio_lm_script->add(std::move(r));
}

}  // namespace carevox
