#ifndef SMARTDOC_SIMULATE_HPP
#define SMARTDOC_SIMULATE_HPP

#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "kb_model.hpp"

namespace smartdoc {

struct SimulationReport {
    std::uint64_t sessions = 0;
    std::map<int, std::uint64_t> depth_histogram;  // questions answered -> sessions
    /// Per disease, in declaration order: (id, leaves reached, leaves declared).
    std::vector<std::tuple<std::string, std::size_t, std::size_t>> coverage;

    std::string render() const {
        std::ostringstream out;
        out << "sessions: " << sessions << '\n';
        out << "depth histogram:\n";
        for (const auto& [depth, count] : depth_histogram) out << "  depth " << depth << ": " << count << '\n';
        out << "leaf coverage:\n";
        for (const auto& [id, reached, total] : coverage) {
            char pct[32];
            std::snprintf(pct, sizeof pct, "%.1f%%", total ? 100.0 * static_cast<double>(reached) / static_cast<double>(total) : 0.0);
            out << "  " << id << ": " << reached << '/' << total << " (" << pct << ")\n";
        }
        return out.str();
    }
};

namespace detail {

// Unbiased draw in [0, n). Written out rather than using std::uniform_int_distribution,
// whose output differs between standard libraries.
inline std::uint64_t draw_below(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

} // namespace detail

/// Random walks: each session picks an entry uniformly among all entries of the KB,
/// then a uniform answer at every question. Same (kb, sessions, seed) gives the same report.
inline SimulationReport simulate(const KnowledgeBase& kb, std::uint64_t sessions, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<std::pair<std::size_t, const EntryPoint*>> entries;
    for (std::size_t d = 0; d < kb.diseases().size(); ++d)
        for (const auto& e : kb.diseases()[d].entries) entries.emplace_back(d, &e);

    std::vector<std::set<std::string>> reached(kb.diseases().size());
    SimulationReport report;
    report.sessions = sessions;
    for (std::uint64_t s = 0; s < sessions && !entries.empty(); ++s) {
        const auto& [d, entry] = entries[detail::draw_below(gen, entries.size())];
        const auto& disease = kb.diseases()[d];
        std::string cursor = entry->root;
        int depth = 0;
        while (const auto* node = kb.find_node(disease.id, cursor)) {
            cursor = node->answers[detail::draw_below(gen, node->answers.size())].target;
            ++depth;
        }
        reached[d].insert(cursor);
        ++report.depth_histogram[depth];
    }
    for (std::size_t d = 0; d < kb.diseases().size(); ++d)
        report.coverage.emplace_back(kb.diseases()[d].id, reached[d].size(), kb.diseases()[d].leaves.size());
    return report;
}

} // namespace smartdoc

#endif // SMARTDOC_SIMULATE_HPP
