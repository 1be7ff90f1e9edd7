#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carevox/common.hpp"

namespace carevox {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Domain enums and their wire spellings
// ---------------------------------------------------------------------------

enum class VitalKind {
    bmi,
    bp_diastolic,
    bp_systolic,
    height,
    weight,
    pulse,
    respiration_rate,
    temperature,
    oxygen_saturation,
    blood_sugar,
    pain_level,
};

inline const std::vector<std::pair<VitalKind, std::string>>& vital_kind_names() {
    static const std::vector<std::pair<VitalKind, std::string>> names = {
        {VitalKind::bmi, "bmi"},
        {VitalKind::bp_diastolic, "bp_diastolic"},
        {VitalKind::bp_systolic, "bp_systolic"},
        {VitalKind::height, "height"},
        {VitalKind::weight, "weight"},
        {VitalKind::pulse, "pulse"},
        {VitalKind::respiration_rate, "respiration_rate"},
        {VitalKind::temperature, "temperature"},
        {VitalKind::oxygen_saturation, "oxygen_saturation"},
        {VitalKind::blood_sugar, "blood_sugar"},
        {VitalKind::pain_level, "pain_level"},
    };
    return names;
}

inline std::string to_string(VitalKind k) {
    for (const auto& [kind, name] : vital_kind_names())
        if (kind == k) return name;
    return "unknown";
}

inline std::optional<VitalKind> vital_kind_from_string(const std::string& s) {
    for (const auto& [kind, name] : vital_kind_names())
        if (name == s) return kind;
    return std::nullopt;
}

enum class SpeakerRole { unknown, clinician, patient, third_party };

inline std::string to_string(SpeakerRole r) {
    switch (r) {
        case SpeakerRole::clinician: return "clinician";
        case SpeakerRole::patient: return "patient";
        case SpeakerRole::third_party: return "third_party";
        default: return "unknown";
    }
}

inline SpeakerRole speaker_role_from_string(const std::string& s) {
    if (s == "clinician") return SpeakerRole::clinician;
    if (s == "patient") return SpeakerRole::patient;
    if (s == "third_party") return SpeakerRole::third_party;
    return SpeakerRole::unknown;
}

enum class InputMode { vital_only, soap_only, soap_vital };

inline std::string to_string(InputMode m) {
    switch (m) {
        case InputMode::vital_only: return "vital_only";
        case InputMode::soap_only: return "soap_only";
        default: return "soap_vital";
    }
}

inline std::optional<InputMode> input_mode_from_string(const std::string& s) {
    if (s == "vital_only") return InputMode::vital_only;
    if (s == "soap_only") return InputMode::soap_only;
    if (s == "soap_vital") return InputMode::soap_vital;
    return std::nullopt;
}

enum class AcousticFeature {
    emotion,
    voice_quality,
    prosody,
    fluency,
    articulation,
    energy,
    discomfort_fatigue,
};

inline const std::vector<AcousticFeature>& all_acoustic_features() {
    static const std::vector<AcousticFeature> fs = {
        AcousticFeature::emotion,       AcousticFeature::voice_quality,
        AcousticFeature::prosody,       AcousticFeature::fluency,
        AcousticFeature::articulation,  AcousticFeature::energy,
        AcousticFeature::discomfort_fatigue,
    };
    return fs;
}

inline std::string to_string(AcousticFeature f) {
    switch (f) {
        case AcousticFeature::emotion: return "emotion";
        case AcousticFeature::voice_quality: return "voice_quality";
        case AcousticFeature::prosody: return "prosody";
        case AcousticFeature::fluency: return "fluency";
        case AcousticFeature::articulation: return "articulation";
        case AcousticFeature::energy: return "energy";
        default: return "discomfort_fatigue";
    }
}

inline std::optional<AcousticFeature> acoustic_feature_from_string(const std::string& s) {
    for (AcousticFeature f : all_acoustic_features())
        if (to_string(f) == s) return f;
    return std::nullopt;
}

enum class Gender { male, female, unknown };

inline std::string to_string(Gender g) {
    switch (g) {
        case Gender::male: return "male";
        case Gender::female: return "female";
        default: return "unknown";
    }
}

inline Gender gender_from_string(const std::string& s) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    return Gender::unknown;
}

enum class AgeCategory {
    young_adult,
    adult,
    middle_aged,
    middle_aged_to_older,
    older_adult,
    unknown,
};

inline std::string to_string(AgeCategory a) {
    switch (a) {
        case AgeCategory::young_adult: return "young_adult";
        case AgeCategory::adult: return "adult";
        case AgeCategory::middle_aged: return "middle_aged";
        case AgeCategory::middle_aged_to_older: return "middle_aged_to_older";
        case AgeCategory::older_adult: return "older_adult";
        default: return "unknown";
    }
}

inline AgeCategory age_category_from_string(const std::string& s) {
    if (s == "young_adult") return AgeCategory::young_adult;
    if (s == "adult") return AgeCategory::adult;
    if (s == "middle_aged") return AgeCategory::middle_aged;
    if (s == "middle_aged_to_older") return AgeCategory::middle_aged_to_older;
    if (s == "older_adult") return AgeCategory::older_adult;
    return AgeCategory::unknown;
}

// ---------------------------------------------------------------------------
// Domain value types
// ---------------------------------------------------------------------------

// Global speaker ids are small integers (0..3 after clustering). Ids are
// assigned by total speech duration, most talkative first.
using GlobalSpeakerId = int;

struct VitalMeasurement {
    VitalKind kind = VitalKind::pulse;
    double value = 0.0;
    std::string unit;
    std::optional<std::string> taken_at;  // ISO-8601; optional

    bool operator==(const VitalMeasurement&) const = default;
};

struct EDHospOutcome {
    bool had_event = false;
    bool operator==(const EDHospOutcome&) const = default;
};

struct VisitManifest {
    std::string visit_id;
    std::string patient_id;
    std::string clinician_id;
    std::string audio_ref;
    std::string recorded_date;  // calendar date, ISO-8601
    std::vector<VitalMeasurement> vitals;
    EDHospOutcome patient_outcome;

    bool operator==(const VisitManifest&) const = default;
};

struct SpeakerSegment {
    GlobalSpeakerId speaker = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    int source_chunk = 0;

    double midpoint() const { return 0.5 * (start_s + end_s); }
    bool operator==(const SpeakerSegment&) const = default;
};

struct TimedWord {
    std::string text;
    double start_s = 0.0;
    double end_s = 0.0;
    std::optional<GlobalSpeakerId> speaker;

    bool operator==(const TimedWord&) const = default;
};

struct Sentence {
    std::vector<TimedWord> words;
    GlobalSpeakerId speaker = 0;

    double start_s() const { return words.empty() ? 0.0 : words.front().start_s; }
    double end_s() const { return words.empty() ? 0.0 : words.back().end_s; }
    double duration_s() const { return end_s() - start_s(); }
    std::string text() const {
        std::string out;
        for (const auto& w : words) {
            if (!out.empty()) out += ' ';
            out += w.text;
        }
        return out;
    }
    bool operator==(const Sentence&) const = default;
};

struct SoapNote {
    std::string subjective;
    std::string objective;
    std::string assessment;
    std::string plan;

    bool operator==(const SoapNote&) const = default;
};

inline constexpr const char* kSectionMissing = "none documented";

struct IllnessAssessment {
    int score = 1;  // 1 = good health, 5 = critical
    std::string rationale;
    InputMode input_mode = InputMode::soap_vital;
    std::string model_id;

    bool operator==(const IllnessAssessment&) const = default;
};

struct AcousticDescription {
    AcousticFeature feature = AcousticFeature::emotion;
    std::vector<std::string> phrases;  // normalized; may be empty

    bool operator==(const AcousticDescription&) const = default;
};

struct SpeakerProfilePrediction {
    Gender gender = Gender::unknown;
    AgeCategory age_category = AgeCategory::unknown;

    bool operator==(const SpeakerProfilePrediction&) const = default;
};

struct AnchorScale {
    std::string name;
    // (level, anchor phrases); levels strictly increasing, contiguous from 1.
    std::vector<std::pair<int, std::vector<std::string>>> levels;

    bool valid() const {
        if (levels.empty()) return false;
        int expect = 1;
        for (const auto& [level, anchors] : levels) {
            if (level != expect++) return false;
            if (anchors.empty()) return false;
            for (const auto& a : anchors)
                if (a.empty()) return false;
        }
        return true;
    }
    bool operator==(const AnchorScale&) const = default;
};

// ---------------------------------------------------------------------------
// JSON encoding (wire fields are the snake_case names above)
// ---------------------------------------------------------------------------

inline void to_json(json& j, const VitalMeasurement& v) {
    j = json{{"kind", to_string(v.kind)}, {"value", v.value}, {"unit", v.unit}};
    if (v.taken_at) j["taken_at"] = *v.taken_at;
}

inline void from_json(const json& j, VitalMeasurement& v) {
    auto kind = vital_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error("unknown vital kind: " + j.at("kind").get<std::string>());
    v.kind = *kind;
    v.value = j.at("value").get<double>();
    v.unit = j.value("unit", "");
    if (j.contains("taken_at") && !j.at("taken_at").is_null())
        v.taken_at = j.at("taken_at").get<std::string>();
    else
        v.taken_at.reset();
}

inline void to_json(json& j, const EDHospOutcome& o) { j = json{{"had_event", o.had_event}}; }
inline void from_json(const json& j, EDHospOutcome& o) { o.had_event = j.at("had_event").get<bool>(); }

inline void to_json(json& j, const VisitManifest& m) {
    j = json{{"visit_id", m.visit_id},
             {"patient_id", m.patient_id},
             {"clinician_id", m.clinician_id},
             {"audio_ref", m.audio_ref},
             {"recorded_date", m.recorded_date},
             {"vitals", m.vitals},
             {"patient_outcome", m.patient_outcome}};
}

inline void from_json(const json& j, VisitManifest& m) {
    m.visit_id = j.at("visit_id").get<std::string>();
    m.patient_id = j.at("patient_id").get<std::string>();
    m.clinician_id = j.at("clinician_id").get<std::string>();
    m.audio_ref = j.at("audio_ref").get<std::string>();
    m.recorded_date = j.at("recorded_date").get<std::string>();
    m.vitals = j.value("vitals", std::vector<VitalMeasurement>{});
    m.patient_outcome = j.value("patient_outcome", EDHospOutcome{});
}

inline void to_json(json& j, const SpeakerSegment& s) {
    j = json{{"speaker", s.speaker}, {"start_s", s.start_s}, {"end_s", s.end_s}, {"source_chunk", s.source_chunk}};
}

inline void from_json(const json& j, SpeakerSegment& s) {
    s.speaker = j.at("speaker").get<int>();
    s.start_s = j.at("start_s").get<double>();
    s.end_s = j.at("end_s").get<double>();
    s.source_chunk = j.value("source_chunk", 0);
}

inline void to_json(json& j, const TimedWord& w) {
    j = json{{"text", w.text}, {"start_s", w.start_s}, {"end_s", w.end_s}};
    if (w.speaker) j["speaker"] = *w.speaker;
}

inline void from_json(const json& j, TimedWord& w) {
    w.text = j.at("text").get<std::string>();
    w.start_s = j.at("start_s").get<double>();
    w.end_s = j.at("end_s").get<double>();
    if (j.contains("speaker") && !j.at("speaker").is_null())
        w.speaker = j.at("speaker").get<int>();
    else
        w.speaker.reset();
}

inline void to_json(json& j, const Sentence& s) {
    j = json{{"speaker", s.speaker}, {"words", s.words}};
}

inline void from_json(const json& j, Sentence& s) {
    s.speaker = j.at("speaker").get<int>();
    s.words = j.at("words").get<std::vector<TimedWord>>();
}

inline void to_json(json& j, const SoapNote& n) {
    j = json{{"subjective", n.subjective},
             {"objective", n.objective},
             {"assessment", n.assessment},
             {"plan", n.plan}};
}

inline void from_json(const json& j, SoapNote& n) {
    n.subjective = j.at("subjective").get<std::string>();
    n.objective = j.at("objective").get<std::string>();
    n.assessment = j.at("assessment").get<std::string>();
    n.plan = j.at("plan").get<std::string>();
}

inline void to_json(json& j, const IllnessAssessment& a) {
    j = json{{"score", a.score},
             {"rationale", a.rationale},
             {"input_mode", to_string(a.input_mode)},
             {"model_id", a.model_id}};
}

inline void from_json(const json& j, IllnessAssessment& a) {
    a.score = j.at("score").get<int>();
    a.rationale = j.at("rationale").get<std::string>();
    auto mode = input_mode_from_string(j.at("input_mode").get<std::string>());
    if (!mode) throw Error("unknown input_mode: " + j.at("input_mode").get<std::string>());
    a.input_mode = *mode;
    a.model_id = j.at("model_id").get<std::string>();
}

inline void to_json(json& j, const AcousticDescription& d) {
    j = json{{"feature", to_string(d.feature)}, {"phrases", d.phrases}};
}

inline void from_json(const json& j, AcousticDescription& d) {
    auto f = acoustic_feature_from_string(j.at("feature").get<std::string>());
    if (!f) throw Error("unknown acoustic feature: " + j.at("feature").get<std::string>());
    d.feature = *f;
    d.phrases = j.at("phrases").get<std::vector<std::string>>();
}

inline void to_json(json& j, const SpeakerProfilePrediction& p) {
    j = json{{"gender", to_string(p.gender)}, {"age_category", to_string(p.age_category)}};
}

inline void from_json(const json& j, SpeakerProfilePrediction& p) {
    p.gender = gender_from_string(j.at("gender").get<std::string>());
    p.age_category = age_category_from_string(j.at("age_category").get<std::string>());
}

inline void to_json(json& j, const AnchorScale& s) {
    json levels = json::array();
    for (const auto& [level, anchors] : s.levels)
        levels.push_back(json{{"level", level}, {"anchors", anchors}});
    j = json{{"name", s.name}, {"levels", levels}};
}

inline void from_json(const json& j, AnchorScale& s) {
    s.name = j.at("name").get<std::string>();
    s.levels.clear();
    for (const auto& entry : j.at("levels"))
        s.levels.emplace_back(entry.at("level").get<int>(),
                              entry.at("anchors").get<std::vector<std::string>>());
}

// ---------------------------------------------------------------------------
// Manifest validation
// ---------------------------------------------------------------------------

enum class ValidationCode { duplicate_visit_id, missing_audio_ref, vital_out_of_range, parse_error };

inline std::string to_string(ValidationCode c) {
    switch (c) {
        case ValidationCode::duplicate_visit_id: return "DuplicateVisitId";
        case ValidationCode::missing_audio_ref: return "MissingAudioRef";
        case ValidationCode::vital_out_of_range: return "VitalOutOfRange";
        default: return "ParseError";
    }
}

struct ValidationIssue {
    ValidationCode code = ValidationCode::parse_error;
    std::string visit_id;  // empty when the record could not be parsed
    std::string detail;
    std::optional<VitalKind> kind;
    std::optional<double> value;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

struct ValidatedManifest {
    std::vector<VisitManifest> accepted;
    ValidationReport report;
};

// Checks per-entry invariants and cross-entry visit_id uniqueness. The first
// occurrence of a duplicated id is kept, later ones are rejected, so running
// validation on its own accepted output reports nothing.
inline ValidatedManifest validate_manifest(const std::vector<VisitManifest>& entries) {
    ValidatedManifest out;
    std::set<std::string> seen;
    for (const auto& entry : entries) {
        std::vector<ValidationIssue> entry_issues;
        if (seen.count(entry.visit_id)) {
            entry_issues.push_back({ValidationCode::duplicate_visit_id, entry.visit_id,
                                    "duplicate visit_id \"" + entry.visit_id + "\"", {}, {}});
        }
        if (entry.audio_ref.empty()) {
            entry_issues.push_back(
                {ValidationCode::missing_audio_ref, entry.visit_id, "audio_ref is empty", {}, {}});
        }
        for (const auto& vital : entry.vitals) {
            bool bad = !std::isfinite(vital.value);
            if (vital.kind == VitalKind::pain_level && (vital.value < 0.0 || vital.value > 10.0))
                bad = true;
            if (vital.kind == VitalKind::oxygen_saturation &&
                (vital.value <= 0.0 || vital.value > 100.0))
                bad = true;
            if (bad) {
                entry_issues.push_back({ValidationCode::vital_out_of_range, entry.visit_id,
                                        to_string(vital.kind) + " = " + std::to_string(vital.value),
                                        vital.kind, vital.value});
            }
        }
        if (entry_issues.empty()) {
            seen.insert(entry.visit_id);
            out.accepted.push_back(entry);
        } else {
            for (auto& issue : entry_issues) out.report.issues.push_back(std::move(issue));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manifest file: one JSON record per line
// ---------------------------------------------------------------------------

struct ManifestFile {
    std::vector<VisitManifest> entries;
    std::vector<ValidationIssue> parse_issues;  // lines that were not valid records
};

inline ManifestFile parse_manifest_lines(std::istream& in) {
    ManifestFile out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            VisitManifest m = json::parse(line).get<VisitManifest>();
            out.entries.push_back(std::move(m));
        } catch (const std::exception& e) {
            out.parse_issues.push_back({ValidationCode::parse_error, "",
                                        "line " + std::to_string(line_no) + ": " + e.what(), {}, {}});
        }
    }
    return out;
}

inline ManifestFile read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path);
    return parse_manifest_lines(in);
}

inline void write_manifest(std::ostream& out, const std::vector<VisitManifest>& entries) {
    for (const auto& m : entries) out << json(m).dump() << '\n';
}

}  // namespace carevox
