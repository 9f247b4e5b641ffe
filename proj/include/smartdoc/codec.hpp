#ifndef SMARTDOC_CODEC_HPP
#define SMARTDOC_CODEC_HPP

// JSON interchange encoding shared by the HTTP service and the session store.

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <json.hpp>

#include "engine.hpp"
#include "kb_model.hpp"
#include "matcher.hpp"
#include "scheduler.hpp"
#include "timestamp.hpp"

namespace smartdoc {

using Json = nlohmann::json;

/// Malformed interchange document.
class DecodeError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace codec {

inline Json encode(Timestamp t) { return format_rfc3339(t); }

inline Timestamp decode_timestamp(const Json& j) {
    if (!j.is_string()) throw DecodeError("timestamp must be a string");
    auto t = parse_rfc3339(j.get<std::string>());
    if (!t) throw DecodeError("bad timestamp '" + j.get<std::string>() + "'");
    return *t;
}

inline Json encode(const MedicineDirective& m) {
    return {{"name", m.name}, {"interval_hours", m.interval.count()}, {"duration_hours", m.duration.count()}};
}

inline MedicineDirective decode_medicine(const Json& j) {
    return {j.at("name").get<std::string>(), Hours{j.at("interval_hours").get<std::int64_t>()},
            Hours{j.at("duration_hours").get<std::int64_t>()}};
}

inline Json encode(const Prompt& p) {
    if (const auto* q = std::get_if<QuestionPrompt>(&p))
        return {{"type", "question"}, {"node_id", q->node_id}, {"text", q->text}, {"answers", q->answers}};
    const auto& r = std::get<RecommendationPrompt>(p);
    Json meds = Json::array();
    for (const auto& m : r.medicines) meds.push_back(encode(m));
    return {{"type", "recommendation"}, {"leaf_id", r.leaf_id}, {"advice", r.advice}, {"medicines", meds}};
}

inline Prompt decode_prompt(const Json& j) {
    const auto type = j.at("type").get<std::string>();
    if (type == "question")
        return QuestionPrompt{j.at("node_id").get<std::string>(), j.at("text").get<std::string>(),
                              j.at("answers").get<std::vector<std::string>>()};
    if (type == "recommendation") {
        RecommendationPrompt r{j.at("leaf_id").get<std::string>(), j.at("advice").get<std::string>(), {}};
        for (const auto& m : j.at("medicines")) r.medicines.push_back(decode_medicine(m));
        return r;
    }
    throw DecodeError("unknown prompt type '" + type + "'");
}

inline Json encode(const MatchCandidate& c) {
    return {{"disease", c.disease}, {"entry", c.entry}, {"score", c.score}, {"matched", c.matched}};
}

inline Json encode(const Transcript& t) {
    Json steps = Json::array();
    for (const auto& s : t.steps)
        steps.push_back({{"node_id", s.node_id},
                         {"question", s.question},
                         {"answer", s.answer},
                         {"answered_at", encode(s.answered_at)}});
    return {{"complaint", t.complaint}, {"steps", steps}};
}

inline Transcript decode_transcript(const Json& j) {
    Transcript t{j.at("complaint").get<std::string>(), {}};
    for (const auto& s : j.at("steps"))
        t.steps.push_back({s.at("node_id").get<std::string>(), s.at("question").get<std::string>(),
                           s.at("answer").get<std::string>(), decode_timestamp(s.at("answered_at"))});
    return t;
}

inline SessionState decode_state(const Json& j) {
    const auto s = j.get<std::string>();
    if (s == "active") return SessionState::Active;
    if (s == "completed") return SessionState::Completed;
    throw DecodeError("unknown session state '" + s + "'");
}

/// Session header without the transcript.
inline Json encode_header(const Session& s) {
    return {{"session_id", s.id},
            {"disease", s.disease},
            {"entry", s.entry},
            {"cursor", s.cursor},
            {"state", to_string(s.state)},
            {"started_at", encode(s.started_at)}};
}

inline Json encode(const Session& s) {
    auto j = encode_header(s);
    j["transcript"] = encode(s.transcript);
    return j;
}

inline Session decode_session(const Json& j) {
    Session s;
    s.id = j.at("session_id").get<std::string>();
    s.disease = j.at("disease").get<std::string>();
    s.entry = j.at("entry").get<std::size_t>();
    s.cursor = j.at("cursor").get<std::string>();
    s.state = decode_state(j.at("state"));
    s.started_at = decode_timestamp(j.at("started_at"));
    s.transcript = decode_transcript(j.at("transcript"));
    return s;
}

inline Json encode(const DoseEvent& d) {
    return {{"medicine", d.medicine},
            {"due", encode(d.due)},
            {"sequence", d.sequence},
            {"acknowledged", d.acknowledged}};
}

inline Json encode(const std::vector<DoseEvent>& doses) {
    Json out = Json::array();
    for (const auto& d : doses) out.push_back(encode(d));
    return out;
}

inline Json encode(const ReminderPlan& p) { return {{"session_id", p.session_id}, {"doses", encode(p.doses)}}; }

inline ReminderPlan decode_plan(const Json& j) {
    ReminderPlan p{j.at("session_id").get<std::string>(), {}};
    for (const auto& d : j.at("doses"))
        p.doses.push_back({d.at("medicine").get<std::string>(), decode_timestamp(d.at("due")),
                           d.at("sequence").get<std::int64_t>(), d.at("acknowledged").get<bool>()});
    return p;
}

inline Json encode(const Finding& f) {
    Json j = {{"severity", to_string(f.severity)},
              {"code", f.code},
              {"disease", f.location.disease},
              {"node", f.location.node ? Json(*f.location.node) : Json(nullptr)},
              {"message", f.message}};
    return j;
}

} // namespace codec

/// Wraps nlohmann exceptions so callers only see DecodeError.
template <typename F>
auto decoding(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw DecodeError(e.what());
    }
}

} // namespace smartdoc

#endif // SMARTDOC_CODEC_HPP
