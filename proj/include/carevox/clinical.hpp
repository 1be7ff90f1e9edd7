#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carevox/backends.hpp"
#include "carevox/common.hpp"
#include "carevox/core.hpp"

namespace carevox {

struct ModeInputMissing final : Error { using Error::Error; };
struct MalformedScore final : Error { using Error::Error; };
struct UnparseableReply final : Error { using Error::Error; };
struct RoleConflict final : Error { using Error::Error; };
struct UnlistedSpeaker final : Error { using Error::Error; };

inline constexpr int kDefaultRetryBudget = 3;  // total attempts per LLM call

enum class TemplateName { soap, illness, roles };

inline std::string to_string(TemplateName n) {
    switch (n) {
        case TemplateName::soap: return "soap";
        case TemplateName::illness: return "illness";
        default: return "roles";
    }
}

struct PromptTemplate {
    TemplateName name = TemplateName::soap;
    std::string system_text;
    std::string user_text;

    // every placeholder the template's mode consumes must be present
    bool valid() const {
        auto has = [&](const char* slot) {
            return system_text.find(slot) != std::string::npos ||
                   user_text.find(slot) != std::string::npos;
        };
        switch (name) {
            case TemplateName::soap: return has("{transcript}");
            case TemplateName::illness: return has("{soap}") && has("{vitals}");
            case TemplateName::roles: return has("{transcript}");
        }
        return false;
    }
};

// Template files hold an optional "[system]" section followed by a "[user]"
// section; a file without markers is all user text.
inline PromptTemplate load_template(TemplateName name, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open prompt template: " + path);
    std::string line, section = "user", system_text, user_text;
    bool saw_marker = false;
    while (std::getline(in, line)) {
        if (line == "[system]") { section = "system"; saw_marker = true; continue; }
        if (line == "[user]") { section = "user"; saw_marker = true; continue; }
        auto& target = section == "system" ? system_text : user_text;
        target += line;
        target += '\n';
    }
    (void)saw_marker;
    PromptTemplate tmpl{name, system_text, user_text};
    if (!tmpl.valid())
        throw Error("template " + to_string(name) + " at " + path + " is missing a placeholder");
    return tmpl;
}

inline std::string fill_slots(std::string text, const std::map<std::string, std::string>& slots) {
    for (const auto& [key, value] : slots) {
        const std::string needle = "{" + key + "}";
        std::size_t pos = 0;
        while ((pos = text.find(needle, pos)) != std::string::npos) {
            text.replace(pos, needle.size(), value);
            pos += value.size();
        }
    }
    return text;
}

inline std::vector<ChatMessage> render_messages(const PromptTemplate& tmpl,
                                                const std::map<std::string, std::string>& slots) {
    std::vector<ChatMessage> messages;
    if (!tmpl.system_text.empty()) messages.push_back({"system", fill_slots(tmpl.system_text, slots)});
    messages.push_back({"user", fill_slots(tmpl.user_text, slots)});
    return messages;
}

namespace detail {

inline std::string fmt_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::string trim(const std::string& s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

// One line per measurement, kinds in enum order, repeats in time order.
inline std::string render_vitals(std::vector<VitalMeasurement> vitals) {
    if (vitals.empty()) return "no vital signs recorded";
    std::stable_sort(vitals.begin(), vitals.end(),
                     [](const VitalMeasurement& a, const VitalMeasurement& b) {
                         if (a.kind != b.kind) return a.kind < b.kind;
                         if (a.taken_at && b.taken_at) return *a.taken_at < *b.taken_at;
                         return false;
                     });
    std::string out;
    for (const auto& v : vitals) {
        if (!out.empty()) out += '\n';
        out += to_string(v.kind) + ": " + detail::fmt_number(v.value);
        if (!v.unit.empty()) out += " " + v.unit;
        if (v.taken_at) out += " (at " + *v.taken_at + ")";
    }
    return out;
}

inline std::string render_soap_text(const SoapNote& note) {
    return "Subjective: " + note.subjective + "\nObjective: " + note.objective +
           "\nAssessment: " + note.assessment + "\nPlan: " + note.plan;
}

// "Speaker k:" tagged transcript used for role assignment.
inline std::string tagged_transcript(const std::vector<Sentence>& sentences) {
    std::string out;
    for (const auto& s : sentences) {
        out += "Speaker " + std::to_string(s.speaker) + ": " + s.text() + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// SOAP note generation
// ---------------------------------------------------------------------------

namespace detail {

// Section headers tolerate leading markdown decoration and a ':' or '-'.
inline std::optional<std::string> section_label(const std::string& line) {
    std::string t = lower(trim(line));
    while (!t.empty() && (t.front() == '#' || t.front() == '*' || t.front() == '-' ||
                          t.front() == ' '))
        t.erase(t.begin());
    for (const char* label : {"subjective", "objective", "assessment", "plan"}) {
        std::size_t len = std::strlen(label);
        if (t.compare(0, len, label) != 0) continue;
        std::string rest = t.substr(len);
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.erase(rest.begin());
        if (rest.empty() || rest.front() == ':' || rest.front() == '-') return std::string(label);
    }
    return std::nullopt;
}

inline std::optional<std::map<std::string, std::string>> parse_soap_reply(
    const std::string& reply) {
    std::map<std::string, std::string> sections;
    std::istringstream in(reply);
    std::string line, current;
    while (std::getline(in, line)) {
        if (auto label = section_label(line)) {
            current = *label;
            auto pos = line.find(':');
            std::string rest = pos == std::string::npos ? "" : trim(line.substr(pos + 1));
            sections[current] = rest;
            continue;
        }
        if (current.empty()) continue;
        std::string content = trim(line);
        if (content.empty()) continue;
        if (!sections[current].empty()) sections[current] += ' ';
        sections[current] += content;
    }
    if (sections.empty()) return std::nullopt;
    return sections;
}

}  // namespace detail

inline SoapNote generate_soap(const std::string& transcript, const PromptTemplate& tmpl,
                              ChatLlmBackend& backend, int retry_budget = kDefaultRetryBudget,
                              WarningLog* warnings = nullptr) {
    if (transcript.empty()) throw Error("generate_soap: empty transcript");
    auto messages = render_messages(tmpl, {{"transcript", transcript}});
    std::string last_reply;
    for (int attempt = 1; attempt <= retry_budget; ++attempt) {
        last_reply = backend.complete(messages);
        auto sections = detail::parse_soap_reply(last_reply);
        if (!sections) {
            messages.push_back({"assistant", last_reply});
            messages.push_back({"user",
                                "That reply had no Subjective/Objective/Assessment/Plan sections. "
                                "Reply again with exactly those four labeled sections."});
            continue;
        }
        SoapNote note;
        auto take = [&](const char* key, std::string& field) {
            auto it = sections->find(key);
            if (it == sections->end() || detail::trim(it->second).empty()) {
                field = kSectionMissing;
                warn(warnings, "MissingSoapSection",
                     std::string(key) + " absent from the model reply");
            } else {
                field = it->second;
            }
        };
        take("subjective", note.subjective);
        take("objective", note.objective);
        take("assessment", note.assessment);
        take("plan", note.plan);
        return note;
    }
    throw UnparseableReply("SOAP reply unparseable after " + std::to_string(retry_budget) +
                           " attempts; last reply: " + last_reply.substr(0, 160));
}

// ---------------------------------------------------------------------------
// Illness scoring
// ---------------------------------------------------------------------------

namespace detail {

// Rigid reply shape: first non-blank line "Score: <int>", then a line starting
// "Rationale:" with non-empty text. Prose-wrapped replies do not parse.
inline std::optional<std::pair<int, std::string>> parse_score_reply(const std::string& reply) {
    std::istringstream in(reply);
    std::string line;
    std::optional<int> score;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        if (lower(t).compare(0, 6, "score:") != 0) return std::nullopt;
        std::string value = trim(t.substr(6));
        if (value.empty()) return std::nullopt;
        std::size_t i = value[0] == '+' || value[0] == '-' ? 1 : 0;
        if (i >= value.size()) return std::nullopt;
        for (std::size_t k = i; k < value.size(); ++k)
            if (!std::isdigit(static_cast<unsigned char>(value[k]))) return std::nullopt;
        try {
            score = std::stoi(value);
        } catch (...) {
            return std::nullopt;
        }
        break;
    }
    if (!score) return std::nullopt;
    std::string rationale;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        if (rationale.empty()) {
            if (lower(t).compare(0, 10, "rationale:") != 0) return std::nullopt;
            rationale = trim(t.substr(10));
        } else {
            rationale += ' ';
            rationale += t;
        }
    }
    if (rationale.empty()) return std::nullopt;
    return std::make_pair(*score, rationale);
}

}  // namespace detail

inline IllnessAssessment score_illness(const std::optional<SoapNote>& soap,
                                       const std::optional<std::string>& vitals_text,
                                       InputMode mode, const PromptTemplate& tmpl,
                                       ChatLlmBackend& backend,
                                       int retry_budget = kDefaultRetryBudget,
                                       WarningLog* warnings = nullptr) {
    if ((mode == InputMode::vital_only || mode == InputMode::soap_vital) && !vitals_text)
        throw ModeInputMissing("mode " + to_string(mode) + " requires vitals text");
    if ((mode == InputMode::soap_only || mode == InputMode::soap_vital) && !soap)
        throw ModeInputMissing("mode " + to_string(mode) + " requires a SOAP note");

    std::map<std::string, std::string> slots;
    slots["soap"] = (mode != InputMode::vital_only && soap) ? render_soap_text(*soap)
                                                            : "(not provided)";
    slots["vitals"] = (mode != InputMode::soap_only && vitals_text) ? *vitals_text
                                                                    : "(not provided)";
    auto messages = render_messages(tmpl, slots);

    std::string last_reply;
    for (int attempt = 1; attempt <= retry_budget; ++attempt) {
        last_reply = backend.complete(messages);
        auto parsed = detail::parse_score_reply(last_reply);
        if (parsed && parsed->first >= 1 && parsed->first <= 5) {
            return {parsed->first, parsed->second, mode, backend.model_id()};
        }
        if (attempt < retry_budget)
            warn(warnings, "ScoreRetry",
                 "attempt " + std::to_string(attempt) + " malformed: " + last_reply.substr(0, 80));
        messages.push_back({"assistant", last_reply});
        messages.push_back(
            {"user",
             "That reply was malformed. Respond with exactly two lines:\n"
             "Score: <integer between 1 and 5>\nRationale: <brief explanation>"});
    }
    throw MalformedScore("no valid score after " + std::to_string(retry_budget) +
                         " attempts; last reply: " + last_reply.substr(0, 160));
}

// ---------------------------------------------------------------------------
// Role assignment
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<SpeakerRole> role_from_reply_token(std::string token) {
    token = lower(trim(token));
    for (auto& c : token)
        if (c == '-' || c == ' ') c = '_';
    while (!token.empty() && (token.back() == '.' || token.back() == ',' || token.back() == ';'))
        token.pop_back();
    if (token.rfind("clinician", 0) == 0) return SpeakerRole::clinician;
    if (token.rfind("patient", 0) == 0) return SpeakerRole::patient;
    if (token.rfind("third_party", 0) == 0) return SpeakerRole::third_party;
    if (token.rfind("unknown", 0) == 0) return SpeakerRole::unknown;
    return std::nullopt;
}

// Accepts "0: clinician", "Speaker 1 - patient", "2 = third party" on one or
// several lines, comma-separated or not.
inline std::map<GlobalSpeakerId, SpeakerRole> parse_roles_reply(const std::string& reply) {
    std::map<GlobalSpeakerId, SpeakerRole> roles;
    std::string text = reply;
    for (auto& c : text)
        if (c == ',' || c == ';') c = '\n';
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.empty()) continue;
        std::string lowered = lower(t);
        if (lowered.rfind("speaker", 0) == 0) t = trim(t.substr(7));
        std::size_t i = 0;
        while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
        if (i == 0) continue;
        int id = std::stoi(t.substr(0, i));
        while (i < t.size() && (t[i] == ' ' || t[i] == ':' || t[i] == '=' || t[i] == '-')) ++i;
        if (auto role = role_from_reply_token(t.substr(i))) roles[id] = *role;
    }
    return roles;
}

}  // namespace detail

// Every speaker in the transcript gets exactly one role; at most one
// clinician and at most one patient. A violating reply earns one
// clarification retry, then the call fails.
inline std::map<GlobalSpeakerId, SpeakerRole> assign_roles(
    const std::string& transcript, const std::vector<GlobalSpeakerId>& speakers,
    const PromptTemplate& tmpl, ChatLlmBackend& backend, WarningLog* warnings = nullptr) {
    auto messages = render_messages(tmpl, {{"transcript", transcript}});
    std::string failure;
    for (int attempt = 0; attempt < 2; ++attempt) {
        std::string reply = backend.complete(messages);
        auto parsed = detail::parse_roles_reply(reply);

        std::map<GlobalSpeakerId, SpeakerRole> roles;
        for (const auto& [id, role] : parsed) {
            if (std::find(speakers.begin(), speakers.end(), id) == speakers.end()) {
                warn(warnings, "UnknownSpeakerInReply",
                     "reply labels speaker " + std::to_string(id) + " absent from transcript");
                continue;
            }
            roles[id] = role;
        }

        std::vector<GlobalSpeakerId> missing;
        for (GlobalSpeakerId id : speakers)
            if (!roles.count(id)) missing.push_back(id);
        int clinicians = 0, patients = 0;
        for (const auto& [_, role] : roles) {
            clinicians += role == SpeakerRole::clinician;
            patients += role == SpeakerRole::patient;
        }

        if (missing.empty() && clinicians <= 1 && patients <= 1) return roles;

        if (!missing.empty()) {
            failure = "UnlistedSpeaker: speaker " + std::to_string(missing.front()) +
                      " received no role";
        } else {
            failure = "RoleConflict: " + std::to_string(clinicians) + " clinicians, " +
                      std::to_string(patients) + " patients";
        }
        messages.push_back({"assistant", reply});
        messages.push_back(
            {"user",
             "That assignment was invalid (" + failure +
                 "). List every speaker exactly once as \"k: role\" using clinician and "
                 "patient at most once each; other speakers are third_party."});
    }
    if (failure.rfind("UnlistedSpeaker", 0) == 0) throw UnlistedSpeaker(failure);
    throw RoleConflict(failure);
}

}  // namespace carevox
