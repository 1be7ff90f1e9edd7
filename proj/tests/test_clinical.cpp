#include <catch2/catch_amalgamated.hpp>

#include "carevox/clinical.hpp"

using namespace carevox;

namespace {

// Replays a fixed reply sequence; the last reply repeats.
class QueueChat : public ChatLlmBackend {
  public:
    std::vector<std::string> replies;
    std::vector<std::vector<ChatMessage>> seen;

    std::string complete(const std::vector<ChatMessage>& messages) override {
        seen.push_back(messages);
        std::size_t i = std::min(seen.size() - 1, replies.size() - 1);
        return replies[i];
    }
    std::string model_id() const override { return "fake-llm"; }
};

PromptTemplate soap_template() {
    return {TemplateName::soap, "You summarize clinical conversations.",
            "Summarize into a SOAP note:\n{transcript}\n"};
}

PromptTemplate illness_template() {
    return {TemplateName::illness, "",
            "Rate 1-5.\nSOAP note:\n{soap}\n\nVital signs:\n{vitals}\n\n"
            "Reply as:\nScore: <int>\nRationale: <text>\n"};
}

PromptTemplate roles_template() {
    return {TemplateName::roles, "", "Classify speakers:\n{transcript}\n"};
}

const std::string kGoodSoapReply =
    "Subjective: reports mild pain\n"
    "Objective: bp 120/80\n"
    "Assessment: stable\n"
    "Plan: follow up next week\n";

}  // namespace

TEST_CASE("render_vitals formats in enum order with chronological repeats") {
    CHECK(render_vitals({}) == "no vital signs recorded");

    std::vector<VitalMeasurement> v = {
        {VitalKind::temperature, 98.1, "F", std::nullopt},
        {VitalKind::pulse, 69.0, "bpm", std::nullopt},
    };
    auto text = render_vitals(v);
    CHECK(text == "pulse: 69 bpm\ntemperature: 98.1 F");

    std::vector<VitalMeasurement> repeated = {
        {VitalKind::pulse, 72.0, "bpm", std::string("2024-07-01T11:00:00")},
        {VitalKind::pulse, 70.0, "bpm", std::string("2024-07-01T10:00:00")},
    };
    auto text2 = render_vitals(repeated);
    CHECK(text2.find("70") < text2.find("72"));
}

TEST_CASE("prompt templates validate their placeholders") {
    CHECK(soap_template().valid());
    CHECK(illness_template().valid());
    CHECK(roles_template().valid());
    PromptTemplate broken{TemplateName::illness, "", "no slots here"};
    CHECK_FALSE(broken.valid());
}

TEST_CASE("fill_slots substitutes every occurrence") {
    auto out = fill_slots("a {x} b {x} c {y}", {{"x", "1"}, {"y", "2"}});
    CHECK(out == "a 1 b 1 c 2");
}

TEST_CASE("generate_soap parses a well-formed reply") {
    QueueChat chat;
    chat.replies = {kGoodSoapReply};
    auto note = generate_soap("transcript text", soap_template(), chat);
    CHECK(note.subjective == "reports mild pain");
    CHECK(note.objective == "bp 120/80");
    CHECK(note.assessment == "stable");
    CHECK(note.plan == "follow up next week");
}

TEST_CASE("generate_soap tolerates markdown headers and multi-line sections") {
    QueueChat chat;
    chat.replies = {
        "## Subjective\nfeels tired\nand weak\n**Objective:** temp 98.6\n"
        "Assessment: improving\nPlan: rest\n"};
    auto note = generate_soap("t", soap_template(), chat);
    CHECK(note.subjective == "feels tired and weak");
    CHECK(note.objective == "temp 98.6");
}

TEST_CASE("a missing section becomes the sentinel with a warning") {
    QueueChat chat;
    chat.replies = {"Subjective: ok\nObjective: ok\nAssessment: ok\n"};
    WarningLog log;
    auto note = generate_soap("t", soap_template(), chat, kDefaultRetryBudget, &log);
    CHECK(note.plan == kSectionMissing);
    REQUIRE(log.size() == 1);
    CHECK(log.entries()[0].code == "MissingSoapSection");
}

TEST_CASE("generate_soap gives up after the retry budget") {
    QueueChat chat;
    chat.replies = {"no sections at all", "still nothing", "nope"};
    CHECK_THROWS_AS(generate_soap("t", soap_template(), chat), UnparseableReply);
    CHECK(chat.seen.size() == 3);
}

TEST_CASE("generate_soap repairs on a second attempt") {
    QueueChat chat;
    chat.replies = {"gibberish", kGoodSoapReply};
    auto note = generate_soap("t", soap_template(), chat);
    CHECK(note.assessment == "stable");
    // the repair prompt echoes the malformed reply back
    REQUIRE(chat.seen.size() == 2);
    bool echoed = false;
    for (const auto& m : chat.seen[1]) echoed = echoed || m.content == "gibberish";
    CHECK(echoed);
}

TEST_CASE("score_illness parses the rigid reply shape") {
    QueueChat chat;
    chat.replies = {"Score: 3\nRationale: stable chronic condition"};
    SoapNote soap{"s", "o", "a", "p"};
    auto out = score_illness(soap, std::string("pulse: 70"), InputMode::soap_vital,
                             illness_template(), chat);
    CHECK(out.score == 3);
    CHECK(out.rationale == "stable chronic condition");
    CHECK(out.input_mode == InputMode::soap_vital);
    CHECK(out.model_id == "fake-llm");
}

TEST_CASE("score_illness rejects out-of-range and non-integer scores") {
    SoapNote soap{"s", "o", "a", "p"};
    SECTION("score six exhausts retries") {
        QueueChat chat;
        chat.replies = {"Score: 6\nRationale: x"};
        CHECK_THROWS_AS(score_illness(soap, std::nullopt, InputMode::soap_only,
                                      illness_template(), chat),
                        MalformedScore);
        CHECK(chat.seen.size() == 3);  // R = 3 total attempts
    }
    SECTION("fractional score is malformed") {
        QueueChat chat;
        chat.replies = {"Score: 3.5\nRationale: x"};
        CHECK_THROWS_AS(score_illness(soap, std::nullopt, InputMode::soap_only,
                                      illness_template(), chat),
                        MalformedScore);
    }
    SECTION("prose-wrapped reply is malformed") {
        QueueChat chat;
        chat.replies = {"I think the Score: 3 because\nRationale: x"};
        CHECK_THROWS_AS(score_illness(soap, std::nullopt, InputMode::soap_only,
                                      illness_template(), chat),
                        MalformedScore);
    }
    SECTION("missing rationale is malformed") {
        QueueChat chat;
        chat.replies = {"Score: 2"};
        CHECK_THROWS_AS(score_illness(soap, std::nullopt, InputMode::soap_only,
                                      illness_template(), chat),
                        MalformedScore);
    }
    SECTION("malformed then valid reply repairs within budget") {
        QueueChat chat;
        chat.replies = {"Score: 9\nRationale: x", "Score: 4\nRationale: recovered"};
        auto out = score_illness(soap, std::nullopt, InputMode::soap_only,
                                 illness_template(), chat);
        CHECK(out.score == 4);
        CHECK(chat.seen.size() == 2);
    }
}

TEST_CASE("score_illness enforces mode prerequisites") {
    QueueChat chat;
    chat.replies = {"Score: 1\nRationale: fine"};
    SoapNote soap{"s", "o", "a", "p"};
    CHECK_THROWS_AS(score_illness(soap, std::nullopt, InputMode::soap_vital,
                                  illness_template(), chat),
                    ModeInputMissing);
    CHECK_THROWS_AS(score_illness(std::nullopt, std::string("v"), InputMode::soap_only,
                                  illness_template(), chat),
                    ModeInputMissing);
    CHECK_THROWS_AS(score_illness(std::nullopt, std::nullopt, InputMode::vital_only,
                                  illness_template(), chat),
                    ModeInputMissing);
}

TEST_CASE("vital_only prompts do not leak the soap note") {
    QueueChat chat;
    chat.replies = {"Score: 2\nRationale: vitals nominal"};
    SoapNote soap{"SECRET", "o", "a", "p"};
    auto out = score_illness(soap, std::string("pulse: 70"), InputMode::vital_only,
                             illness_template(), chat);
    CHECK(out.score == 2);
    REQUIRE(chat.seen.size() == 1);
    for (const auto& m : chat.seen[0]) CHECK(m.content.find("SECRET") == std::string::npos);
}

TEST_CASE("assign_roles maps every speaker") {
    QueueChat chat;
    chat.replies = {"0: clinician, 1: patient"};
    auto roles = assign_roles("Speaker 0: hi.\nSpeaker 1: hello.\n", {0, 1},
                              roles_template(), chat);
    REQUIRE(roles.size() == 2);
    CHECK(roles.at(0) == SpeakerRole::clinician);
    CHECK(roles.at(1) == SpeakerRole::patient);
}

TEST_CASE("assign_roles accepts formatting variants") {
    QueueChat chat;
    chat.replies = {"Speaker 0 - third party\nspeaker 1: Patient\nSpeaker 2 = Clinician"};
    auto roles = assign_roles("t", {0, 1, 2}, roles_template(), chat);
    CHECK(roles.at(0) == SpeakerRole::third_party);
    CHECK(roles.at(1) == SpeakerRole::patient);
    CHECK(roles.at(2) == SpeakerRole::clinician);
}

TEST_CASE("duplicate clinician or patient raises RoleConflict after one retry") {
    QueueChat chat;
    chat.replies = {"0: patient, 1: patient"};
    CHECK_THROWS_AS(assign_roles("t", {0, 1}, roles_template(), chat), RoleConflict);
    CHECK(chat.seen.size() == 2);  // one clarification retry
}

TEST_CASE("an omitted speaker raises UnlistedSpeaker after one retry") {
    QueueChat chat;
    chat.replies = {"0: clinician, 1: patient"};
    CHECK_THROWS_AS(assign_roles("t", {0, 1, 2}, roles_template(), chat), UnlistedSpeaker);
}

TEST_CASE("a conflicted reply repaired on retry succeeds") {
    QueueChat chat;
    chat.replies = {"0: patient, 1: patient", "0: clinician, 1: patient"};
    auto roles = assign_roles("t", {0, 1}, roles_template(), chat);
    CHECK(roles.at(0) == SpeakerRole::clinician);
}

TEST_CASE("speakers outside the transcript are ignored with a warning") {
    QueueChat chat;
    chat.replies = {"0: clinician, 1: patient, 7: third_party"};
    WarningLog log;
    auto roles = assign_roles("t", {0, 1}, roles_template(), chat, &log);
    CHECK(roles.size() == 2);
    REQUIRE(log.size() == 1);
    CHECK(log.entries()[0].code == "UnknownSpeakerInReply");
}

TEST_CASE("tagged transcript lines carry speaker tags") {
    std::vector<Sentence> sents = {
        {{{"How", 0, 1, 0}, {"now?", 1, 2, 0}}, 0},
        {{{"Fine.", 3, 4, 1}}, 1},
    };
    CHECK(tagged_transcript(sents) == "Speaker 0: How now?\nSpeaker 1: Fine.\n");
}
