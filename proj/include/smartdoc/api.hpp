#ifndef SMARTDOC_API_HPP
#define SMARTDOC_API_HPP

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "codec.hpp"
#include "engine.hpp"
#include "kb_model.hpp"
#include "kb_parser.hpp"
#include "matcher.hpp"
#include "scheduler.hpp"
#include "store.hpp"
#include "text.hpp"
#include "timestamp.hpp"

namespace smartdoc::api {

/// Error codes and their fixed HTTP statuses.
enum class ErrorCode { NoMatch, InvalidAnswer, SessionCompleted, NotFound, Conflict, BadRequest };

inline std::string_view code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::NoMatch: return "NO_MATCH";
        case ErrorCode::InvalidAnswer: return "INVALID_ANSWER";
        case ErrorCode::SessionCompleted: return "SESSION_COMPLETED";
        case ErrorCode::NotFound: return "NOT_FOUND";
        case ErrorCode::Conflict: return "CONFLICT";
        case ErrorCode::BadRequest: return "BAD_REQUEST";
    }
    return "?";
}

inline int status_for(ErrorCode c) {
    switch (c) {
        case ErrorCode::NoMatch: return 422;
        case ErrorCode::InvalidAnswer: return 422;
        case ErrorCode::SessionCompleted: return 409;
        case ErrorCode::NotFound: return 404;
        case ErrorCode::Conflict: return 409;
        case ErrorCode::BadRequest: return 400;
    }
    return 500;
}

class ApiError : public std::runtime_error {
public:
    ApiError(ErrorCode code, std::string detail, Json extras = nullptr)
        : std::runtime_error(detail), code_(code), detail_(std::move(detail)), extras_(std::move(extras)) {}

    ErrorCode code() const noexcept { return code_; }
    int status() const noexcept { return status_for(code_); }
    const std::string& detail() const noexcept { return detail_; }
    const Json& extras() const noexcept { return extras_; }

    Json body() const {
        Json j = {{"status", status()}, {"code", code_name(code_)}, {"detail", detail_}};
        if (!extras_.is_null()) j["extras"] = extras_;
        return j;
    }

private:
    ErrorCode code_;
    std::string detail_;
    Json extras_;
};

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
};

struct Response {
    int status = 200;
    Json body;
};

inline constexpr std::string_view kContentType = "application/json; charset=utf-8";

/// Request handling over one immutable knowledge base. Thread-safe: requests for distinct
/// sessions run concurrently, mutations of one session are serialized.
class Service {
public:
    using Clock = std::function<Timestamp()>;

    Service(KnowledgeBase kb, SessionStore& store, Clock clock = utc_now)
        : kb_(std::move(kb)), index_(build_index(kb_)), store_(store), clock_(std::move(clock)) {}

    const KnowledgeBase& knowledge_base() const noexcept { return kb_; }

    Response handle(const Request& req) {
        try {
            return route(req);
        } catch (const ApiError& e) {
            return {e.status(), e.body()};
        }
    }

private:
    static const std::regex& session_path() {
        static const std::regex re(R"(^/api/v1/sessions/([^/]+)(/answers|/reminders|/reminders/acknowledge)?$)");
        return re;
    }

    Response route(const Request& req) {
        const auto& path = req.path;
        if (path == "/api/v1/sessions" && req.method == "POST") return create_session(req);
        if (path == "/api/v1/kb/validate" && req.method == "POST") return validate(req);
        if (path == "/api/v1/kb/summary" && req.method == "GET") return summary();
        std::smatch m;
        if (std::regex_match(path, m, session_path())) {
            const std::string id = m[1];
            const std::string tail = m[2];
            if (tail.empty() && req.method == "GET") return get_session(id);
            if (tail == "/answers" && req.method == "POST") return post_answer(id, req);
            if (tail == "/reminders" && req.method == "GET") return reminders(id, req);
            if (tail == "/reminders/acknowledge" && req.method == "POST") return acknowledge_dose(id, req);
        }
        throw ApiError(ErrorCode::NotFound, "no route for " + req.method + " " + path);
    }

    static Json parse_body(const Request& req) {
        if (!is_valid_utf8(req.body)) throw ApiError(ErrorCode::BadRequest, "body is not UTF-8");
        auto body = Json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) throw ApiError(ErrorCode::BadRequest, "body must be a JSON object");
        return body;
    }

    static std::string string_field(const Json& body, const char* name) {
        auto it = body.find(name);
        if (it == body.end() || !it->is_string())
            throw ApiError(ErrorCode::BadRequest, std::string("field '") + name + "' must be a string");
        return it->get<std::string>();
    }

    std::mutex& lock_for(const std::string& id) {
        std::lock_guard guard(locks_mutex_);
        auto& slot = locks_[id];
        if (!slot) slot = std::make_unique<std::mutex>();
        return *slot;
    }

    SessionRecord load(const std::string& id) const {
        try {
            return store_.load(id);
        } catch (const SessionNotFound&) {
            throw ApiError(ErrorCode::NotFound, "no session '" + id + "'");
        }
    }

    std::uint64_t save(const SessionRecord& record) {
        try {
            return store_.save(record);
        } catch (const RevisionConflict& e) {
            throw ApiError(ErrorCode::Conflict, e.what());
        }
    }

    Response create_session(const Request& req) {
        const auto body = parse_body(req);
        const auto complaint = string_field(body, "complaint");
        if (complaint.find_first_not_of(" \t\r\n") == std::string::npos)
            throw ApiError(ErrorCode::BadRequest, "complaint must not be empty");

        const auto now = clock_();
        SessionStart start;
        try {
            start = start_session(kb_, index_, complaint, now);
        } catch (const NoMatch& e) {
            throw ApiError(ErrorCode::NoMatch, "no entry point matches the complaint", {{"tokens", e.tokens()}});
        }
        SessionRecord record{start.session, std::nullopt, 0};
        if (auto* rec = std::get_if<RecommendationPrompt>(&start.prompt))
            record.plan = build_plan(rec->medicines, now, record.session.id);
        std::lock_guard guard(lock_for(record.session.id));
        save(record);

        Json candidates = Json::array();
        for (const auto& c : start.candidates) candidates.push_back(codec::encode(c));
        return {201,
                {{"session_id", record.session.id},
                 {"candidates", candidates},
                 {"prompt", codec::encode(start.prompt)},
                 {"state", to_string(record.session.state)}}};
    }

    Response post_answer(const std::string& id, const Request& req) {
        const auto body = parse_body(req);
        const auto label = string_field(body, "answer");
        std::lock_guard guard(lock_for(id));
        auto record = load(id);
        Prompt prompt;
        try {
            prompt = answer(kb_, record.session, label, clock_());
        } catch (const SessionCompleted& e) {
            throw ApiError(ErrorCode::SessionCompleted, e.what());
        } catch (const InvalidAnswer& e) {
            throw ApiError(ErrorCode::InvalidAnswer, e.what(), {{"valid", e.valid()}});
        } catch (const SessionMismatch& e) {
            throw ApiError(ErrorCode::Conflict, e.what());
        }
        if (auto* rec = std::get_if<RecommendationPrompt>(&prompt))
            record.plan = build_plan(rec->medicines, clock_(), record.session.id);
        save(record);
        return {200, {{"prompt", codec::encode(prompt)}, {"state", to_string(record.session.state)}}};
    }

    Prompt prompt_of(const Session& s) const {
        try {
            return current_prompt(kb_, s);
        } catch (const SessionMismatch& e) {
            throw ApiError(ErrorCode::Conflict, e.what());
        }
    }

    Response get_session(const std::string& id) {
        const auto record = load(id);
        return {200,
                {{"session", codec::encode_header(record.session)},
                 {"transcript", codec::encode(record.session.transcript)},
                 {"prompt", codec::encode(prompt_of(record.session))}}};
    }

    Timestamp query_now(const Request& req) const {
        auto it = req.query.find("now");
        if (it == req.query.end()) return clock_();
        auto t = parse_rfc3339(it->second);
        if (!t) throw ApiError(ErrorCode::BadRequest, "unparseable 'now': " + it->second);
        return *t;
    }

    static Json reminder_view(const std::optional<ReminderPlan>& plan, Timestamp now) {
        if (!plan) return {{"due", Json::array()}, {"upcoming", Json::array()}};
        return {{"due", codec::encode(due_reminders(*plan, now))},
                {"upcoming", codec::encode(upcoming_reminders(*plan, now, 3))}};
    }

    Response reminders(const std::string& id, const Request& req) {
        const auto now = query_now(req);
        const auto record = load(id);
        return {200, reminder_view(record.plan, now)};
    }

    Response acknowledge_dose(const std::string& id, const Request& req) {
        const auto body = parse_body(req);
        const auto medicine = string_field(body, "medicine");
        auto seq = body.find("sequence");
        if (seq == body.end() || !seq->is_number_integer())
            throw ApiError(ErrorCode::BadRequest, "field 'sequence' must be an integer");
        const auto now = query_now(req);
        std::lock_guard guard(lock_for(id));
        auto record = load(id);
        if (!record.plan) throw ApiError(ErrorCode::NotFound, "session has no reminder plan");
        try {
            record.plan = acknowledge(*record.plan, medicine, seq->get<std::int64_t>());
        } catch (const UnknownDose& e) {
            throw ApiError(ErrorCode::NotFound, e.what());
        }
        save(record);
        return {200, reminder_view(record.plan, now)};
    }

    Response validate(const Request& req) {
        if (!is_valid_utf8(req.body)) throw ApiError(ErrorCode::BadRequest, "body is not UTF-8");
        int max_depth = kDefaultMaxDepth;
        if (auto it = req.query.find("max_depth"); it != req.query.end()) {
            try {
                std::size_t used = 0;
                max_depth = std::stoi(it->second, &used);
                if (used != it->second.size() || max_depth < 1) throw std::invalid_argument("range");
            } catch (const std::exception&) {
                throw ApiError(ErrorCode::BadRequest, "max_depth must be a positive integer");
            }
        }
        Json findings = Json::array();
        try {
            const auto report = validate_kb(parse_kb(req.body), max_depth);
            for (const auto& f : report.findings) findings.push_back(codec::encode(f));
        } catch (const ParseError& e) {
            findings.push_back({{"severity", "ERROR"},
                                {"code", "PARSE_ERROR"},
                                {"disease", ""},
                                {"node", nullptr},
                                {"message", e.what()},
                                {"line", e.position().line},
                                {"column", e.position().column}});
        }
        return {200, {{"findings", findings}}};
    }

    Response summary() const {
        Json diseases = Json::array();
        for (const auto& s : tree_stats(kb_))
            diseases.push_back({{"id", s.disease},
                                {"entries", s.entries},
                                {"max_depth", s.max_depth},
                                {"nodes", s.nodes},
                                {"leaves", s.leaves}});
        return {200, {{"title", kb_.title()}, {"version", kb_.version()}, {"diseases", diseases}}};
    }

    KnowledgeBase kb_;
    ComplaintIndex index_;
    SessionStore& store_;
    Clock clock_;
    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

} // namespace smartdoc::api

#endif // SMARTDOC_API_HPP
