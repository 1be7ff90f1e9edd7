#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "carevox/audio.hpp"
#include "carevox/backends.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"

namespace carevox {

// A sentence candidate may still mix speakers; the final terminator may be
// missing for the trailing words of a recording.
struct SentenceCandidate {
    std::vector<TimedWord> words;
    bool terminated = false;
};

inline std::vector<TimedWord> transcribe(const AudioBuffer& audio, AsrBackend& backend) {
    auto raw = backend.transcribe(encode_wav(audio));
    std::vector<TimedWord> words;
    words.reserve(raw.size());
    for (auto& w : raw) {
        std::string text = w.text;
        auto first = text.find_first_not_of(" \t\r\n");
        auto last = text.find_last_not_of(" \t\r\n");
        if (first == std::string::npos) continue;  // whitespace-only output
        words.push_back({text.substr(first, last - first + 1), w.start_s, w.end_s, std::nullopt});
    }
    std::stable_sort(words.begin(), words.end(), [](const TimedWord& a, const TimedWord& b) {
        return std::tie(a.start_s, a.end_s, a.text) < std::tie(b.start_s, b.end_s, b.text);
    });
    return words;
}

// Each word gets the speaker whose segments overlap it the most (summed over
// that speaker's segments). No positive overlap anywhere leaves the word
// unassigned; exact ties go to the lower speaker id.
inline std::vector<TimedWord> assign_word_speakers(std::vector<TimedWord> words,
                                                   const std::vector<SpeakerSegment>& segments) {
    for (auto& word : words) {
        std::map<GlobalSpeakerId, double> overlap;
        for (const auto& seg : segments) {
            double lo = std::max(word.start_s, seg.start_s);
            double hi = std::min(word.end_s, seg.end_s);
            if (hi > lo) overlap[seg.speaker] += hi - lo;
        }
        word.speaker.reset();
        double best = 0.0;
        for (const auto& [id, amount] : overlap) {  // map order: lower id first on ties
            if (amount > best) {
                best = amount;
                word.speaker = id;
            }
        }
    }
    return words;
}

namespace detail {

// Trailing closers that may follow the end-of-sentence mark.
inline const std::vector<std::string>& closing_marks() {
    static const std::vector<std::string> marks = {"\"", "'", ")", "]", "}",
                                                   "”", "’", "»"};
    return marks;
}

inline bool ends_sentence(const std::string& text) {
    std::string t = text;
    bool stripped = true;
    while (stripped && !t.empty()) {
        stripped = false;
        for (const auto& mark : closing_marks()) {
            if (t.size() >= mark.size() && t.compare(t.size() - mark.size(), mark.size(), mark) == 0) {
                t.erase(t.size() - mark.size());
                stripped = true;
                break;
            }
        }
    }
    if (t.empty()) return false;
    char last = t.back();
    return last == '.' || last == '!' || last == '?';
}

}  // namespace detail

// Splits the word stream at end-of-sentence punctuation. The output is an
// exact partition of the input; trailing words without a terminator form one
// final unterminated candidate.
inline std::vector<SentenceCandidate> group_sentences(const std::vector<TimedWord>& words) {
    std::vector<SentenceCandidate> out;
    SentenceCandidate current;
    for (const auto& word : words) {
        current.words.push_back(word);
        if (detail::ends_sentence(word.text)) {
            current.terminated = true;
            out.push_back(std::move(current));
            current = {};
        }
    }
    if (!current.words.empty()) out.push_back(std::move(current));
    return out;
}

// Keeps only terminated candidates where every word carries the same speaker.
// Sentences with unassigned words are removed; mixed-speaker sentences are
// the same class of ambiguity and are dropped rather than split.
inline std::vector<Sentence> filter_sentences(const std::vector<SentenceCandidate>& candidates) {
    std::vector<Sentence> out;
    for (const auto& cand : candidates) {
        if (!cand.terminated || cand.words.empty()) continue;
        if (!cand.words.front().speaker) continue;
        GlobalSpeakerId speaker = *cand.words.front().speaker;
        bool uniform = true;
        for (const auto& word : cand.words) {
            if (!word.speaker || *word.speaker != speaker) {
                uniform = false;
                break;
            }
        }
        if (!uniform) continue;
        out.push_back({cand.words, speaker});
    }
    return out;
}

}  // namespace carevox
