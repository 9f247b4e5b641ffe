#ifndef SMARTDOC_TESTS_FIXTURES_HPP
#define SMARTDOC_TESTS_FIXTURES_HPP

// Shared test fixtures, seeded generators and brute-force oracles. The oracles here work
// on the raw Disease structure with linear searches and never call engine or validator code.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "smartdoc/kb_model.hpp"

namespace smartdoc::testing {

inline constexpr const char* kFixture =
    "KB \"general-physician\" VERSION 1\n"
    "DISEASE migraine\n"
    "  ENTRY \"I have pain in my neck\" KEYWORDS pain neck ROOT q_vomit\n"
    "  NODE q_vomit ASK \"Do you have vomiting too\"\n"
    "    ANSWER yes -> l_migraine\n"
    "    ANSWER no  -> l_tension\n"
    "  LEAF l_migraine SAY \"You have migraine pain and I prescribe you to take Desprine and Bruefen and cream for "
    "massage.\"\n"
    "    MEDICINE \"Bruefen\" EVERY 8h FOR 3d\n"
    "  LEAF l_tension SAY \"Rest and hydrate; return if pain persists.\"\n"
    "END\n";

inline constexpr const char* kMigraineAdvice =
    "You have migraine pain and I prescribe you to take Desprine and Bruefen and cream for massage.";

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string data_path(const std::string& name) { return std::string(SMARTDOC_TEST_DATA_DIR) + "/" + name; }

inline std::string core_text() { return read_text(data_path("core.kb")); }
inline std::string sample_text() { return read_text(data_path("sample.kb")); }

/// Portable bounded draw (std distributions differ across standard libraries).
inline std::uint64_t below(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

inline std::int64_t between(std::mt19937_64& gen, std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(gen, static_cast<std::uint64_t>(hi - lo + 1)));
}

inline Disease single_leaf_disease(const std::string& id = "bruise", const std::string& keyword = "bruise") {
    Disease d;
    d.id = id;
    d.entries.push_back({"I have a " + keyword, {keyword}, "l_only"});
    d.leaves.push_back({"l_only", "Apply a cold pack.", {}});
    return d;
}

inline KbDocument single_leaf_kb() {
    return {"single", 1, {single_leaf_disease()}};
}

/// Full binary tree with `depth` question levels; labels yes/no; leaves l_<path>.
inline Disease full_binary_disease(int depth, const std::string& id = "deep", const std::string& keyword = "deep") {
    Disease d;
    d.id = id;
    d.entries.push_back({"deep trouble", {keyword}, depth == 0 ? "l_" : "q_"});
    std::vector<std::string> frontier{""};
    for (int level = 0; level < depth; ++level) {
        std::vector<std::string> next;
        for (const auto& path : frontier) {
            const bool last = level + 1 == depth;
            const auto yes = path + "y";
            const auto no = path + "n";
            d.nodes.push_back({"q_" + path,
                               "question " + path,
                               {{"yes", (last ? "l_" : "q_") + yes}, {"no", (last ? "l_" : "q_") + no}}});
            next.push_back(yes);
            next.push_back(no);
        }
        frontier = std::move(next);
    }
    for (const auto& path : frontier) d.leaves.push_back({"l_" + path, "advice " + path, {}});
    return d;
}

struct GenOptions {
    int min_branch = 2;
    int max_branch = 4;
    int min_depth = 1;
    int max_depth = 7;
    int max_diseases = 3;
    int max_entries = 2;
};

/// Random display text including quotes, backslashes and multi-byte characters.
inline std::string random_text(std::mt19937_64& gen) {
    static const std::vector<std::string> pieces = {"pain", "rest", "take", "\"quoted\"", "back\\slash", "é",
                                                    "…",    "水",   "#hash", "->",        "END",         "a  b"};
    std::string out = pieces[below(gen, pieces.size())];
    const auto extra = below(gen, 5);
    for (std::uint64_t i = 0; i < extra; ++i) out += " " + pieces[below(gen, pieces.size())];
    return out;
}

namespace detail {

inline void grow(std::mt19937_64& gen, const GenOptions& opt, Disease& d, const std::string& id, int remaining,
                 bool spine, int& counter) {
    static const std::vector<std::string> label_pool = {"yes", "no", "mild", "severe", "sometimes", "never", "unsure"};
    const auto branches = static_cast<std::size_t>(between(gen, opt.min_branch, opt.max_branch));
    std::vector<std::string> labels = label_pool;
    std::shuffle(labels.begin(), labels.end(), gen);
    labels.resize(branches);

    QuestionNode node{id, random_text(gen), {}};
    const auto spine_child = below(gen, branches);
    std::vector<std::pair<std::string, std::pair<int, bool>>> children;
    for (std::size_t b = 0; b < branches; ++b) {
        const bool on_spine = spine && b == spine_child;
        int child_depth = 0;
        if (on_spine) {
            child_depth = remaining - 1;
        } else if (remaining > 1 && below(gen, 100) < 40) {
            child_depth = static_cast<int>(between(gen, 1, remaining - 1));
        }
        const auto child_id = (child_depth > 0 ? "q" : "l") + std::to_string(counter++);
        node.answers.push_back({labels[b], child_id});
        children.push_back({child_id, {child_depth, on_spine}});
    }
    d.nodes.push_back(std::move(node));
    for (const auto& [child_id, info] : children) {
        if (info.first > 0) {
            grow(gen, opt, d, child_id, info.first, info.second, counter);
        } else {
            LeafRecommendation leaf{child_id, random_text(gen), {}};
            const auto meds = below(gen, 3);
            for (std::uint64_t m = 0; m < meds; ++m)
                leaf.medicines.push_back({"Med" + std::to_string(m) + " " + random_text(gen),
                                          Hours{between(gen, 1, 48)}, Hours{between(gen, 1, 240)}});
            d.leaves.push_back(std::move(leaf));
        }
    }
}

} // namespace detail

/// A valid knowledge base: every disease is a tree of the requested shape whose deepest
/// path has exactly the drawn depth. Entry keywords are unique per entry (`k<d>e<n>`).
inline KbDocument random_kb(std::mt19937_64& gen, const GenOptions& opt = {}) {
    KbDocument kb{random_text(gen), between(gen, 1, 9), {}};
    const auto diseases = between(gen, 1, opt.max_diseases);
    for (std::int64_t di = 0; di < diseases; ++di) {
        Disease d;
        d.id = "d" + std::to_string(di) + "_x";
        int counter = 0;
        const int depth = static_cast<int>(between(gen, opt.min_depth, opt.max_depth));
        detail::grow(gen, opt, d, "q" + std::to_string(counter++), depth, true, counter);
        const auto entries = between(gen, 1, opt.max_entries);
        for (std::int64_t e = 0; e < entries; ++e) {
            // first entry at the tree root; others anywhere in the tree
            std::string root = d.nodes.front().id;
            if (e > 0) {
                const auto pick = below(gen, d.nodes.size() + d.leaves.size());
                root = pick < d.nodes.size() ? d.nodes[pick].id : d.leaves[pick - d.nodes.size()].id;
            }
            const auto kw = "k" + std::to_string(di) + "e" + std::to_string(e);
            d.entries.push_back({random_text(gen), {kw}, root});
        }
        // shuffle declaration order of nodes and leaves; the tree is unaffected
        std::shuffle(d.nodes.begin(), d.nodes.end(), gen);
        std::shuffle(d.leaves.begin(), d.leaves.end(), gen);
        kb.diseases.push_back(std::move(d));
    }
    return kb;
}

// ---- oracles -------------------------------------------------------------------------

inline const QuestionNode* oracle_node(const Disease& d, const std::string& id) {
    for (const auto& n : d.nodes)
        if (n.id == id) return &n;
    return nullptr;
}

inline const LeafRecommendation* oracle_leaf(const Disease& d, const std::string& id) {
    for (const auto& l : d.leaves)
        if (l.id == id) return &l;
    return nullptr;
}

struct OraclePath {
    std::vector<std::string> labels;
    std::string leaf;
};

/// Every answer-label path from `root` to a leaf, by exhaustive recursion.
inline void oracle_paths(const Disease& d, const std::string& root, std::vector<std::string>& prefix,
                         std::vector<OraclePath>& out) {
    if (oracle_leaf(d, root)) {
        out.push_back({prefix, root});
        return;
    }
    const auto* node = oracle_node(d, root);
    if (!node) return;
    for (const auto& a : node->answers) {
        prefix.push_back(a.label);
        oracle_paths(d, a.target, prefix, out);
        prefix.pop_back();
    }
}

inline std::vector<OraclePath> oracle_paths(const Disease& d, const std::string& root) {
    std::vector<OraclePath> out;
    std::vector<std::string> prefix;
    oracle_paths(d, root, prefix, out);
    return out;
}

/// Longest root-to-leaf path length in question nodes over all entries, by plain DFS.
inline int oracle_max_depth(const Disease& d) {
    int best = 0;
    for (const auto& e : d.entries)
        for (const auto& p : oracle_paths(d, e.root)) best = std::max(best, static_cast<int>(p.labels.size()));
    return best;
}

/// Inbound answer-edge count per id.
inline std::map<std::string, int> oracle_inbound(const Disease& d) {
    std::map<std::string, int> census;
    for (const auto& n : d.nodes) census[n.id];
    for (const auto& l : d.leaves) census[l.id];
    for (const auto& n : d.nodes)
        for (const auto& a : n.answers) ++census[a.target];
    return census;
}

/// Brute-force dose count: |{k >= 0 : k * interval < duration}|.
inline std::int64_t oracle_dose_count(std::int64_t interval, std::int64_t duration) {
    std::int64_t n = 0;
    for (std::int64_t k = 0; k * interval < duration; ++k) ++n;
    return n;
}

} // namespace smartdoc::testing

#endif // SMARTDOC_TESTS_FIXTURES_HPP
