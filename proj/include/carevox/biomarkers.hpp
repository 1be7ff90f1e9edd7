#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carevox/audio.hpp"
#include "carevox/backends.hpp"
#include "carevox/clinical.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"

namespace carevox {

struct InvalidClipDuration final : Error { using Error::Error; };

// lowercase, collapse whitespace, strip surrounding punctuation, drop empties,
// order-preserving de-duplication. Idempotent.
inline std::vector<std::string> normalize_phrases(const std::vector<std::string>& raw) {
    auto is_strippable = [](char c) {
        static const std::string set = ".,;:!?\"'()[]{}";
        return set.find(c) != std::string::npos || std::isspace(static_cast<unsigned char>(c));
    };
    std::vector<std::string> out;
    std::map<std::string, bool> seen;
    for (const auto& phrase : raw) {
        std::string t;
        bool in_space = false;
        for (char c : phrase) {
            char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (std::isspace(static_cast<unsigned char>(lc))) {
                in_space = true;
                continue;
            }
            if (in_space && !t.empty()) t += ' ';
            in_space = false;
            t += lc;
        }
        while (!t.empty() && is_strippable(t.front())) t.erase(t.begin());
        while (!t.empty() && is_strippable(t.back())) t.pop_back();
        if (t.empty() || seen.count(t)) continue;
        seen[t] = true;
        out.push_back(t);
    }
    return out;
}

namespace detail {

// Reply labels the model might use per feature.
inline const std::vector<std::pair<AcousticFeature, std::vector<std::string>>>&
feature_labels() {
    static const std::vector<std::pair<AcousticFeature, std::vector<std::string>>> labels = {
        {AcousticFeature::emotion, {"emotion"}},
        {AcousticFeature::voice_quality, {"voice quality", "voice_quality"}},
        {AcousticFeature::prosody, {"prosody"}},
        {AcousticFeature::fluency, {"fluency"}},
        {AcousticFeature::articulation, {"articulation"}},
        {AcousticFeature::energy, {"energy level", "energy"}},
        {AcousticFeature::discomfort_fatigue,
         {"discomfort/fatigue", "discomfort or fatigue", "discomfort and fatigue",
          "signs of discomfort or fatigue", "discomfort_fatigue", "discomfort", "fatigue"}},
    };
    return labels;
}

inline std::optional<std::pair<AcousticFeature, std::string>> feature_line(
    const std::string& line) {
    std::string t = trim(line);
    while (!t.empty() && (t.front() == '-' || t.front() == '*' || t.front() == '#' ||
                          t.front() == ' ' || t.front() == '\xe2'))
        t.erase(t.begin());  // leading bullets (utf-8 bullets start with 0xe2)
    std::string lowered = lower(t);
    for (const auto& [feature, names] : feature_labels()) {
        for (const auto& name : names) {
            if (lowered.compare(0, name.size(), name) != 0) continue;
            std::size_t i = name.size();
            while (i < t.size() && t[i] == ' ') ++i;
            if (i < t.size() && t[i] == ':')
                return std::make_pair(feature, trim(t.substr(i + 1)));
        }
    }
    return std::nullopt;
}

inline std::vector<std::string> split_phrase_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : text) {
        if (c == ';') {
            parts.push_back(current);
            current.clear();
        } else {
            current += c;
        }
    }
    parts.push_back(current);
    return parts;
}

inline bool is_bullet_line(const std::string& line) {
    std::string t = trim(line);
    return !t.empty() && (t.front() == '-' || t.front() == '*');
}

}  // namespace detail

inline void check_clip_duration(const AudioBuffer& clip, double cap_s = 30.0) {
    double dur = clip.duration_s();
    if (!(dur > 0.0) || dur > cap_s + 1e-9)
        throw InvalidClipDuration("clip duration " + std::to_string(dur) +
                                  "s outside (0, " + std::to_string(cap_s) + "]");
}

// Parses the ALM reply into per-feature phrase lists. Exactly seven entries
// come back in enum order; a feature absent from the reply yields an empty
// list with a warning. A reply with no recognizable feature at all is
// retried, then rejected.
inline std::vector<AcousticDescription> describe_voice(const AudioBuffer& clip,
                                                       AudioLmBackend& backend,
                                                       const std::string& instruction,
                                                       int retry_budget = kDefaultRetryBudget,
                                                       WarningLog* warnings = nullptr) {
    check_clip_duration(clip);
    auto wav = encode_wav(clip);

    std::string reply;
    std::map<AcousticFeature, std::vector<std::string>> found;
    bool parsed = false;
    for (int attempt = 1; attempt <= retry_budget && !parsed; ++attempt) {
        reply = backend.query(wav, instruction);
        found.clear();
        std::istringstream in(reply);
        std::string line;
        std::optional<AcousticFeature> current;
        while (std::getline(in, line)) {
            if (auto header = detail::feature_line(line)) {
                current = header->first;
                for (auto& p : detail::split_phrase_list(header->second))
                    found[*current].push_back(p);
                continue;
            }
            if (current && detail::is_bullet_line(line)) {
                std::string t = detail::trim(line);
                t.erase(t.begin());
                found[*current].push_back(t);
            }
        }
        parsed = !found.empty();
        if (!parsed)
            warn(warnings, "UnparseableDescription",
                 "attempt " + std::to_string(attempt) + " had no feature lines");
    }
    if (!parsed)
        throw UnparseableReply("voice description unparseable after " +
                               std::to_string(retry_budget) + " attempts; last reply: " +
                               reply.substr(0, 160));

    std::vector<AcousticDescription> out;
    for (AcousticFeature feature : all_acoustic_features()) {
        AcousticDescription d;
        d.feature = feature;
        auto it = found.find(feature);
        if (it != found.end()) {
            d.phrases = normalize_phrases(it->second);
        } else {
            warn(warnings, "FeatureMissing",
                 "reply has no " + to_string(feature) + " line");
        }
        out.push_back(std::move(d));
    }
    return out;
}

// Maps a free-text reply onto the gender and age enums; anything unmappable
// becomes unknown with a warning.
inline SpeakerProfilePrediction predict_gender_age(const AudioBuffer& clip,
                                                   AudioLmBackend& backend,
                                                   const std::string& instruction,
                                                   WarningLog* warnings = nullptr) {
    check_clip_duration(clip);
    std::string reply = detail::lower(backend.query(encode_wav(clip), instruction));

    SpeakerProfilePrediction pred;
    bool male = reply.find("male") != std::string::npos;
    bool female = reply.find("female") != std::string::npos;
    // "female" contains "male"; count a male hit only outside female matches
    if (female) {
        pred.gender = Gender::female;
        std::string stripped = reply;
        std::size_t pos;
        while ((pos = stripped.find("female")) != std::string::npos) stripped.erase(pos, 6);
        if (stripped.find("male") != std::string::npos) pred.gender = Gender::unknown;
    } else if (male) {
        pred.gender = Gender::male;
    }

    // longest labels first so "middle-aged to older" wins over "middle-aged"
    static const std::vector<std::pair<std::string, AgeCategory>> ages = {
        {"middle-aged to older", AgeCategory::middle_aged_to_older},
        {"middle aged to older", AgeCategory::middle_aged_to_older},
        {"young adult", AgeCategory::young_adult},
        {"older adult", AgeCategory::older_adult},
        {"middle-aged", AgeCategory::middle_aged},
        {"middle aged", AgeCategory::middle_aged},
        {"adult", AgeCategory::adult},
    };
    for (const auto& [label, category] : ages) {
        if (reply.find(label) != std::string::npos) {
            pred.age_category = category;
            break;
        }
    }

    if (pred.gender == Gender::unknown || pred.age_category == AgeCategory::unknown)
        warn(warnings, "ProfileUnmapped", "reply \"" + reply.substr(0, 80) +
                                              "\" did not map onto both enums");
    return pred;
}

}  // namespace carevox
