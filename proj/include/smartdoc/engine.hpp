#ifndef SMARTDOC_ENGINE_HPP
#define SMARTDOC_ENGINE_HPP

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kb_model.hpp"
#include "matcher.hpp"
#include "timestamp.hpp"

namespace smartdoc {

struct QuestionPrompt {
    std::string node_id;
    std::string text;
    std::vector<std::string> answers;  // edge labels, declaration order

    friend bool operator==(const QuestionPrompt&, const QuestionPrompt&) = default;
};

struct RecommendationPrompt {
    std::string leaf_id;
    std::string advice;
    std::vector<MedicineDirective> medicines;

    friend bool operator==(const RecommendationPrompt&, const RecommendationPrompt&) = default;
};

/// What the engine shows next: a question with labeled answers, or the final advice.
using Prompt = std::variant<QuestionPrompt, RecommendationPrompt>;

inline bool is_question(const Prompt& p) { return std::holds_alternative<QuestionPrompt>(p); }
inline bool is_recommendation(const Prompt& p) { return std::holds_alternative<RecommendationPrompt>(p); }

enum class SessionState { Active, Completed };

inline std::string_view to_string(SessionState s) { return s == SessionState::Active ? "active" : "completed"; }

struct TranscriptStep {
    std::string node_id;
    std::string question;
    std::string answer;
    Timestamp answered_at;

    friend bool operator==(const TranscriptStep&, const TranscriptStep&) = default;
};

struct Transcript {
    std::string complaint;
    std::vector<TranscriptStep> steps;

    std::vector<std::string> labels() const {
        std::vector<std::string> out;
        out.reserve(steps.size());
        for (const auto& s : steps) out.push_back(s.answer);
        return out;
    }

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

/// One live dialogue. Completed exactly when the cursor sits on a leaf.
struct Session {
    std::string id;
    std::string disease;
    std::size_t entry = 0;
    std::string cursor;
    SessionState state = SessionState::Active;
    Transcript transcript;
    Timestamp started_at;

    friend bool operator==(const Session&, const Session&) = default;
};

class EngineError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class NoMatch : public EngineError {
public:
    NoMatch(std::string complaint, std::vector<std::string> tokens)
        : EngineError("no entry point matches the complaint"),
          complaint_(std::move(complaint)), tokens_(std::move(tokens)) {}

    const std::string& complaint() const noexcept { return complaint_; }
    /// Normalized tokens of the complaint.
    const std::vector<std::string>& tokens() const noexcept { return tokens_; }

private:
    std::string complaint_;
    std::vector<std::string> tokens_;
};

class InvalidAnswer : public EngineError {
public:
    InvalidAnswer(std::string label, std::vector<std::string> valid, std::optional<std::size_t> step = std::nullopt)
        : EngineError(describe(label, valid, step)), label_(std::move(label)), valid_(std::move(valid)), step_(step) {}

    const std::string& label() const noexcept { return label_; }
    const std::vector<std::string>& valid() const noexcept { return valid_; }
    /// 0-based position in the label list (batch replay only).
    std::optional<std::size_t> step() const noexcept { return step_; }

private:
    static std::string describe(const std::string& label, const std::vector<std::string>& valid,
                                std::optional<std::size_t> step) {
        std::string msg = "answer '" + label + "' is not one of:";
        for (const auto& v : valid) msg += " " + v;
        if (step) msg += " (step " + std::to_string(*step) + ")";
        return msg;
    }

    std::string label_;
    std::vector<std::string> valid_;
    std::optional<std::size_t> step_;
};

class SessionCompleted : public EngineError {
public:
    SessionCompleted() : EngineError("session already reached a recommendation") {}
};

class TooManyAnswers : public EngineError {
public:
    explicit TooManyAnswers(std::size_t step)
        : EngineError("answer at step " + std::to_string(step) + " given after the recommendation was reached"),
          step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Session refers to a disease or node the knowledge base does not have.
class SessionMismatch : public EngineError {
    using EngineError::EngineError;
};

/// 32 hex digits from the system entropy source.
inline std::string new_session_id() {
    static thread_local std::mt19937_64 gen{[] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd(), rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }()};
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                  static_cast<unsigned long long>(gen()));
    return buf;
}

/// Prompt for whatever the cursor points at, without touching the session.
inline Prompt current_prompt(const KnowledgeBase& kb, const Session& session) {
    if (const auto* node = kb.find_node(session.disease, session.cursor)) {
        QuestionPrompt q{node->id, node->question, {}};
        q.answers.reserve(node->answers.size());
        for (const auto& a : node->answers) q.answers.push_back(a.label);
        return q;
    }
    if (const auto* leaf = kb.find_leaf(session.disease, session.cursor))
        return RecommendationPrompt{leaf->id, leaf->advice, leaf->medicines};
    throw SessionMismatch("no node '" + session.cursor + "' in disease '" + session.disease + "'");
}

struct SessionStart {
    Session session;
    Prompt prompt;
    std::vector<MatchCandidate> candidates;
};

/// Matches the complaint and opens a session on the best candidate's entry root.
/// A leaf root completes the session immediately. Throws NoMatch.
inline SessionStart start_session(const KnowledgeBase& kb, const ComplaintIndex& index, std::string_view complaint,
                                  Timestamp now, std::string session_id = new_session_id()) {
    auto candidates = match_complaint(index, complaint);
    if (candidates.empty()) throw NoMatch(std::string(complaint), normalize(complaint));

    const auto& best = candidates.front();
    const auto* disease = kb.find_disease(best.disease);
    if (!disease || best.entry >= disease->entries.size())
        throw SessionMismatch("index refers to unknown entry of '" + best.disease + "'");

    Session s;
    s.id = std::move(session_id);
    s.disease = best.disease;
    s.entry = best.entry;
    s.cursor = disease->entries[best.entry].root;
    s.transcript.complaint = std::string(complaint);
    s.started_at = now;
    auto prompt = current_prompt(kb, s);
    if (is_recommendation(prompt)) s.state = SessionState::Completed;
    return {std::move(s), std::move(prompt), std::move(candidates)};
}

/// Consumes one answer label. On failure the session is left untouched.
inline Prompt answer(const KnowledgeBase& kb, Session& session, std::string_view label, Timestamp now) {
    if (session.state == SessionState::Completed) throw SessionCompleted();
    const auto* node = kb.find_node(session.disease, session.cursor);
    if (!node) throw SessionMismatch("cursor '" + session.cursor + "' is not a question of '" + session.disease + "'");

    const AnswerEdge* edge = nullptr;
    for (const auto& a : node->answers)
        if (a.label == label) edge = &a;
    if (!edge) {
        std::vector<std::string> valid;
        for (const auto& a : node->answers) valid.push_back(a.label);
        throw InvalidAnswer(std::string(label), std::move(valid));
    }

    Session next = session;
    next.transcript.steps.push_back({node->id, node->question, edge->label, now});
    next.cursor = edge->target;
    auto prompt = current_prompt(kb, next);
    if (is_recommendation(prompt)) next.state = SessionState::Completed;
    session = std::move(next);
    return prompt;
}

/// Batch form of a dialogue: start on `complaint`, apply `labels` in order.
/// Stopping short of a leaf is fine and yields the pending question.
inline Prompt replay(const KnowledgeBase& kb, const ComplaintIndex& index, std::string_view complaint,
                     std::span<const std::string> labels) {
    const Timestamp epoch{};
    auto [session, prompt, candidates] = start_session(kb, index, complaint, epoch, "replay");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (session.state == SessionState::Completed) throw TooManyAnswers(i);
        try {
            prompt = answer(kb, session, labels[i], epoch);
        } catch (const InvalidAnswer& e) {
            throw InvalidAnswer(e.label(), e.valid(), i);
        }
    }
    return prompt;
}

inline Prompt replay(const KnowledgeBase& kb, std::string_view complaint, std::span<const std::string> labels) {
    return replay(kb, build_index(kb), complaint, labels);
}

} // namespace smartdoc

#endif // SMARTDOC_ENGINE_HPP
