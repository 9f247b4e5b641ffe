#ifndef SMARTDOC_KB_MODEL_HPP
#define SMARTDOC_KB_MODEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "text.hpp"
#include "timestamp.hpp"

namespace smartdoc {

struct MedicineDirective {
    std::string name;
    Hours interval{1};
    Hours duration{1};

    friend bool operator==(const MedicineDirective&, const MedicineDirective&) = default;
};

struct AnswerEdge {
    std::string label;
    std::string target;

    friend bool operator==(const AnswerEdge&, const AnswerEdge&) = default;
};

struct QuestionNode {
    std::string id;
    std::string question;
    std::vector<AnswerEdge> answers;

    friend bool operator==(const QuestionNode&, const QuestionNode&) = default;
};

struct LeafRecommendation {
    std::string id;
    std::string advice;
    std::vector<MedicineDirective> medicines;

    friend bool operator==(const LeafRecommendation&, const LeafRecommendation&) = default;
};

struct EntryPoint {
    std::string complaint;
    std::vector<std::string> keywords;  // declaration order
    std::string root;

    friend bool operator==(const EntryPoint&, const EntryPoint&) = default;
};

/// One decision tree. Nodes and leaves keep declaration order and share one id namespace.
struct Disease {
    std::string id;
    std::vector<EntryPoint> entries;
    std::vector<QuestionNode> nodes;
    std::vector<LeafRecommendation> leaves;

    friend bool operator==(const Disease&, const Disease&) = default;
};

/// Unvalidated knowledge base, as produced by the parser or built in code.
struct KbDocument {
    std::string title;
    std::int64_t version = 1;
    std::vector<Disease> diseases;

    friend bool operator==(const KbDocument&, const KbDocument&) = default;
};

inline constexpr int kDefaultMaxDepth = 7;

/// Upper bound on doses one directive may expand to.
inline constexpr std::int64_t kMaxDosesPerDirective = 10'000;

enum class Severity { Error, Warning, Info };

inline std::string_view to_string(Severity s) {
    switch (s) {
        case Severity::Error: return "ERROR";
        case Severity::Warning: return "WARNING";
        case Severity::Info: return "INFO";
    }
    return "?";
}

struct Location {
    std::string disease;
    std::optional<std::string> node;

    friend bool operator==(const Location&, const Location&) = default;
};

struct Finding {
    Severity severity = Severity::Info;
    std::string code;
    Location location;
    std::string message;

    friend bool operator==(const Finding&, const Finding&) = default;
};

struct ValidationReport {
    std::vector<Finding> findings;

    std::size_t count(Severity s) const {
        return static_cast<std::size_t>(std::count_if(
            findings.begin(), findings.end(), [s](const Finding& f) { return f.severity == s; }));
    }
    std::size_t count(std::string_view code) const {
        return static_cast<std::size_t>(std::count_if(
            findings.begin(), findings.end(), [code](const Finding& f) { return f.code == code; }));
    }
    bool loadable() const { return count(Severity::Error) == 0; }

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

namespace detail {

struct DepthRange {
    int max = 0;
    int min = 0;
};

/// Id lookup over one disease. Pointers refer into the disease passed in.
struct DiseaseLookup {
    std::unordered_map<std::string_view, const QuestionNode*> nodes;
    std::unordered_map<std::string_view, const LeafRecommendation*> leaves;

    explicit DiseaseLookup(const Disease& d) {
        for (const auto& n : d.nodes) nodes.emplace(n.id, &n);
        for (const auto& l : d.leaves) leaves.emplace(l.id, &l);
    }
    bool contains(std::string_view id) const { return nodes.count(id) || leaves.count(id); }
};

/// Longest and shortest question-count over root-to-leaf paths. Requires an acyclic disease.
/// Dangling edges are skipped; a node with no resolvable edge counts as depth 1.
class DepthAnalyzer {
public:
    explicit DepthAnalyzer(const DiseaseLookup& lookup) : lookup_(lookup) {}

    DepthRange depth_of(const std::string& id) {
        if (auto it = memo_.find(id); it != memo_.end()) return it->second;
        DepthRange result{};
        if (auto node = lookup_.nodes.find(id); node != lookup_.nodes.end()) {
            bool any = false;
            for (const auto& edge : node->second->answers) {
                if (!lookup_.contains(edge.target)) continue;
                const auto child = depth_of(edge.target);
                if (!any) {
                    result = {child.max + 1, child.min + 1};
                    any = true;
                } else {
                    result.max = std::max(result.max, child.max + 1);
                    result.min = std::min(result.min, child.min + 1);
                }
            }
            if (!any) result = {1, 1};
        }
        memo_.emplace(id, result);
        return result;
    }

private:
    const DiseaseLookup& lookup_;
    std::unordered_map<std::string, DepthRange> memo_;
};

inline void check_text(std::vector<Finding>& out, const std::string& disease,
                       const std::optional<std::string>& node, std::string_view what,
                       std::string_view text) {
    if (!is_valid_utf8(text) || has_control_chars(text))
        out.push_back({Severity::Error, "BAD_TEXT", {disease, node},
                       std::string(what) + " contains control characters or invalid UTF-8"});
}

inline void validate_disease(const Disease& d, int max_depth, std::vector<Finding>& out) {
    const auto& did = d.id;
    auto at = [&](const std::string& node) { return Location{did, node}; };

    if (!is_identifier(did))
        out.push_back({Severity::Error, "BAD_IDENT", {did, std::nullopt},
                       "disease id '" + did + "' is not a lowercase identifier"});
    if (d.entries.empty())
        out.push_back({Severity::Error, "NO_ENTRY", {did, std::nullopt}, "disease has no entry point"});

    // Shared id namespace for nodes and leaves.
    std::map<std::string, int> id_uses;
    for (const auto& n : d.nodes) ++id_uses[n.id];
    for (const auto& l : d.leaves) ++id_uses[l.id];
    for (const auto& [id, uses] : id_uses) {
        if (uses > 1)
            out.push_back({Severity::Error, "DUP_ID", at(id),
                           "id '" + id + "' declared " + std::to_string(uses) + " times"});
        if (!is_identifier(id))
            out.push_back({Severity::Error, "BAD_IDENT", at(id), "node id '" + id + "' is not a lowercase identifier"});
    }
    const DiseaseLookup lookup(d);

    for (std::size_t i = 0; i < d.entries.size(); ++i) {
        const auto& e = d.entries[i];
        const auto where = "entry #" + std::to_string(i + 1);
        check_text(out, did, std::nullopt, where + " complaint", e.complaint);
        if (!lookup.contains(e.root))
            out.push_back({Severity::Error, "DANGLING_REF", {did, std::nullopt},
                           where + " root '" + e.root + "' does not exist"});
        if (e.keywords.empty())
            out.push_back({Severity::Error, "NO_KEYWORDS", {did, std::nullopt}, where + " has no keywords"});
        std::set<std::string_view> seen;
        for (const auto& kw : e.keywords) {
            if (!is_identifier(kw))
                out.push_back({Severity::Error, "BAD_KEYWORD", {did, std::nullopt},
                               where + " keyword '" + kw + "' is not a lowercase token"});
            else if (is_stopword(kw))
                out.push_back({Severity::Error, "BAD_KEYWORD", {did, std::nullopt},
                               where + " keyword '" + kw + "' is a stopword"});
            else if (kw.find('_') != std::string::npos)
                out.push_back({Severity::Warning, "UNMATCHABLE_KEYWORD", {did, std::nullopt},
                               where + " keyword '" + kw + "' contains '_' and can never match a complaint"});
            if (!seen.insert(kw).second)
                out.push_back({Severity::Warning, "DUP_KEYWORD", {did, std::nullopt},
                               where + " repeats keyword '" + kw + "'"});
        }
    }

    std::map<std::string, int> inbound;
    for (const auto& n : d.nodes) {
        check_text(out, did, n.id, "question", n.question);
        if (n.question.empty())
            out.push_back({Severity::Error, "EMPTY_QUESTION", at(n.id), "question text is empty"});
        if (n.answers.size() < 2)
            out.push_back({Severity::Error, "FEW_ANSWERS", at(n.id),
                           "question has " + std::to_string(n.answers.size()) + " answer(s), needs at least 2"});
        std::set<std::string_view> labels;
        for (const auto& a : n.answers) {
            if (!is_identifier(a.label))
                out.push_back({Severity::Error, "BAD_IDENT", at(n.id),
                               "answer label '" + a.label + "' is not a lowercase identifier"});
            if (!labels.insert(a.label).second)
                out.push_back({Severity::Error, "DUP_LABEL", at(n.id), "answer label '" + a.label + "' repeated"});
            if (!lookup.contains(a.target))
                out.push_back({Severity::Error, "DANGLING_REF", at(n.id),
                               "answer '" + a.label + "' targets missing node '" + a.target + "'"});
            else
                ++inbound[a.target];
        }
    }
    for (const auto& [id, count] : inbound)
        if (count > 1)
            out.push_back({Severity::Error, "MULTI_PARENT", at(id),
                           "reached by " + std::to_string(count) + " answer edges"});

    for (const auto& l : d.leaves) {
        check_text(out, did, l.id, "advice", l.advice);
        if (l.advice.empty())
            out.push_back({Severity::Error, "EMPTY_ADVICE", at(l.id), "advice text is empty"});
        std::set<std::string_view> medicine_names;
        for (const auto& m : l.medicines) {
            check_text(out, did, l.id, "medicine name", m.name);
            if (!medicine_names.insert(m.name).second)
                out.push_back({Severity::Error, "DUP_MEDICINE", at(l.id), "medicine '" + m.name + "' listed twice"});
            if (m.name.empty())
                out.push_back({Severity::Error, "BAD_MEDICINE", at(l.id), "medicine name is empty"});
            if (m.interval.count() < 1 || m.duration.count() < 1) {
                out.push_back({Severity::Error, "BAD_MEDICINE", at(l.id),
                               "medicine '" + m.name + "' needs interval and duration of at least 1h"});
            } else if ((m.duration.count() + m.interval.count() - 1) / m.interval.count() >
                       kMaxDosesPerDirective) {
                out.push_back({Severity::Error, "EXCESSIVE_DOSES", at(l.id),
                               "medicine '" + m.name + "' expands to more than " +
                                   std::to_string(kMaxDosesPerDirective) + " doses"});
            }
        }
    }

    // Cycle search: white/grey/black DFS, starting points in lexicographic id order.
    enum class Mark { White, Grey, Black };
    std::map<std::string, Mark> mark;
    for (const auto& n : d.nodes) mark[n.id] = Mark::White;
    std::set<std::string> cycle_at;
    for (const auto& [start, m] : mark) {
        if (mark[start] != Mark::White) continue;
        std::vector<std::pair<const QuestionNode*, std::size_t>> stack;
        mark[start] = Mark::Grey;
        stack.emplace_back(lookup.nodes.at(start), 0);
        while (!stack.empty()) {
            auto& [node, next] = stack.back();
            if (next == node->answers.size()) {
                mark[node->id] = Mark::Black;
                stack.pop_back();
                continue;
            }
            const auto& target = node->answers[next++].target;
            auto child = lookup.nodes.find(target);
            if (child == lookup.nodes.end()) continue;
            const auto state = mark[target];
            if (state == Mark::Grey) {
                cycle_at.insert(target);
            } else if (state == Mark::White) {
                mark[target] = Mark::Grey;
                stack.emplace_back(child->second, 0);
            }
        }
    }
    for (const auto& id : cycle_at)
        out.push_back({Severity::Error, "CYCLE", at(id), "answer edges loop back to '" + id + "'"});

    // Reachability from every entry root.
    std::set<std::string_view> reached;
    std::vector<std::string_view> frontier;
    for (const auto& e : d.entries)
        if (lookup.contains(e.root) && reached.insert(e.root).second) frontier.push_back(e.root);
    while (!frontier.empty()) {
        const auto id = frontier.back();
        frontier.pop_back();
        if (auto n = lookup.nodes.find(id); n != lookup.nodes.end())
            for (const auto& a : n->second->answers)
                if (lookup.contains(a.target) && reached.insert(a.target).second)
                    frontier.push_back(a.target);
    }
    for (const auto& [id, uses] : id_uses)
        if (!reached.count(id))
            out.push_back({Severity::Warning, "UNREACHABLE_NODE", at(id), "not reachable from any entry point"});

    if (!cycle_at.empty()) return;
    DepthAnalyzer depths(lookup);
    int deepest = 0;
    std::string deepest_root;
    bool any_root = false;
    for (const auto& e : d.entries) {
        if (!lookup.contains(e.root)) continue;
        const int depth = depths.depth_of(e.root).max;
        if (!any_root || depth > deepest) {
            deepest = depth;
            deepest_root = e.root;
        }
        any_root = true;
    }
    if (!any_root) return;
    if (deepest > max_depth)
        out.push_back({Severity::Error, "DEPTH_EXCEEDED", {did, std::nullopt},
                       "question depth " + std::to_string(deepest) + " below root '" + deepest_root +
                           "' exceeds limit " + std::to_string(max_depth)});
    out.push_back({Severity::Info, "DEPTH_REPORT", {did, std::nullopt},
                   "max question depth " + std::to_string(deepest)});
}

} // namespace detail

/// Runs every structural and lint check. Never throws on bad content: each problem is a finding.
/// Findings are ordered by disease declaration order, then node id (disease-level findings first).
inline ValidationReport validate_kb(const KbDocument& raw, int max_depth = kDefaultMaxDepth) {
    struct Keyed {
        std::ptrdiff_t disease;
        Finding finding;
    };
    std::vector<Keyed> keyed;
    std::vector<Finding> scratch;

    auto drain = [&](std::ptrdiff_t ordinal) {
        for (auto& f : scratch) keyed.push_back({ordinal, std::move(f)});
        scratch.clear();
    };

    detail::check_text(scratch, "", std::nullopt, "title", raw.title);
    if (raw.version < 1)
        scratch.push_back({Severity::Error, "BAD_VERSION", {"", std::nullopt},
                           "version " + std::to_string(raw.version) + " is not a positive integer"});
    if (raw.diseases.empty())
        scratch.push_back({Severity::Error, "NO_DISEASE", {"", std::nullopt}, "knowledge base declares no disease"});
    drain(-1);

    std::set<std::string_view> disease_ids;
    for (std::size_t i = 0; i < raw.diseases.size(); ++i) {
        const auto& d = raw.diseases[i];
        if (!disease_ids.insert(d.id).second)
            scratch.push_back({Severity::Error, "DUP_ID", {d.id, std::nullopt},
                               "disease id '" + d.id + "' declared more than once"});
        detail::validate_disease(d, max_depth, scratch);
        drain(static_cast<std::ptrdiff_t>(i));
    }

    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.disease != b.disease) return a.disease < b.disease;
        const auto& an = a.finding.location.node;
        const auto& bn = b.finding.location.node;
        if (an.has_value() != bn.has_value()) return !an.has_value();
        return an.has_value() && *an < *bn;
    });
    ValidationReport report;
    report.findings.reserve(keyed.size());
    for (auto& k : keyed) report.findings.push_back(std::move(k.finding));
    return report;
}

/// Thrown when a document with Error findings is loaded.
class InvalidKnowledgeBase : public std::runtime_error {
public:
    explicit InvalidKnowledgeBase(ValidationReport report)
        : std::runtime_error(describe(report)), report_(std::move(report)) {}

    const ValidationReport& report() const noexcept { return report_; }

private:
    static std::string describe(const ValidationReport& r) {
        std::string msg = "knowledge base has " + std::to_string(r.count(Severity::Error)) + " error(s)";
        for (const auto& f : r.findings) {
            if (f.severity != Severity::Error) continue;
            msg += "; " + f.code + " " + f.location.disease;
            if (f.location.node) msg += "/" + *f.location.node;
            break;
        }
        return msg;
    }

    ValidationReport report_;
};

/// Validated, immutable knowledge base. Copies share one underlying document, so a
/// KnowledgeBase can be handed to any number of sessions and threads.
class KnowledgeBase {
public:
    /// Validates `doc`; throws InvalidKnowledgeBase on any Error finding.
    static KnowledgeBase load(KbDocument doc, int max_depth = kDefaultMaxDepth) {
        auto report = validate_kb(doc, max_depth);
        if (!report.loadable()) throw InvalidKnowledgeBase(std::move(report));
        return KnowledgeBase(std::make_shared<const State>(std::move(doc), std::move(report), max_depth));
    }

    const KbDocument& document() const noexcept { return state_->doc; }
    const std::string& title() const noexcept { return state_->doc.title; }
    std::int64_t version() const noexcept { return state_->doc.version; }
    const std::vector<Disease>& diseases() const noexcept { return state_->doc.diseases; }
    /// Warnings and Info findings from load time.
    const ValidationReport& report() const noexcept { return state_->report; }
    int max_depth() const noexcept { return state_->max_depth; }

    const Disease* find_disease(std::string_view id) const {
        auto it = state_->by_id.find(id);
        return it == state_->by_id.end() ? nullptr : &state_->doc.diseases[it->second];
    }
    const QuestionNode* find_node(std::string_view disease, std::string_view id) const {
        const auto* lookup = lookup_for(disease);
        if (!lookup) return nullptr;
        auto it = lookup->nodes.find(id);
        return it == lookup->nodes.end() ? nullptr : it->second;
    }
    const LeafRecommendation* find_leaf(std::string_view disease, std::string_view id) const {
        const auto* lookup = lookup_for(disease);
        if (!lookup) return nullptr;
        auto it = lookup->leaves.find(id);
        return it == lookup->leaves.end() ? nullptr : it->second;
    }

    friend bool operator==(const KnowledgeBase& a, const KnowledgeBase& b) {
        return a.state_ == b.state_ || a.document() == b.document();
    }

private:
    struct State {
        KbDocument doc;
        ValidationReport report;
        int max_depth;
        std::unordered_map<std::string_view, std::size_t> by_id;
        std::vector<detail::DiseaseLookup> lookups;

        State(KbDocument d, ValidationReport r, int depth)
            : doc(std::move(d)), report(std::move(r)), max_depth(depth) {
            lookups.reserve(doc.diseases.size());
            for (std::size_t i = 0; i < doc.diseases.size(); ++i) {
                by_id.emplace(doc.diseases[i].id, i);
                lookups.emplace_back(doc.diseases[i]);
            }
        }
    };

    explicit KnowledgeBase(std::shared_ptr<const State> state) : state_(std::move(state)) {}

    const detail::DiseaseLookup* lookup_for(std::string_view disease) const {
        auto it = state_->by_id.find(disease);
        return it == state_->by_id.end() ? nullptr : &state_->lookups[it->second];
    }

    std::shared_ptr<const State> state_;
};

struct TreeStats {
    std::string disease;
    std::size_t nodes = 0;
    std::size_t leaves = 0;
    int max_depth = 0;
    int min_depth = 0;
    std::size_t entries = 0;

    friend bool operator==(const TreeStats&, const TreeStats&) = default;
};

/// Per-disease census in declaration order. Depths are question counts on root-to-leaf paths.
inline std::vector<TreeStats> tree_stats(const KnowledgeBase& kb) {
    std::vector<TreeStats> out;
    out.reserve(kb.diseases().size());
    for (const auto& d : kb.diseases()) {
        const detail::DiseaseLookup lookup(d);
        detail::DepthAnalyzer depths(lookup);
        TreeStats s{d.id, d.nodes.size(), d.leaves.size(), 0, 0, d.entries.size()};
        bool first = true;
        for (const auto& e : d.entries) {
            const auto r = depths.depth_of(e.root);
            s.max_depth = first ? r.max : std::max(s.max_depth, r.max);
            s.min_depth = first ? r.min : std::min(s.min_depth, r.min);
            first = false;
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace smartdoc

#endif // SMARTDOC_KB_MODEL_HPP
