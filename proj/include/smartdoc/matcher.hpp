#ifndef SMARTDOC_MATCHER_HPP
#define SMARTDOC_MATCHER_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "kb_model.hpp"
#include "text.hpp"

namespace smartdoc {

/// Lowercases, splits on every ASCII character that is not a letter or digit, and drops
/// stopwords. Bytes of multi-byte UTF-8 sequences are kept inside tokens. Duplicates stay.
inline std::vector<std::string> normalize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty() && !is_stopword(current)) tokens.push_back(current);
        current.clear();
    };
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z')) {
            current += c;
        } else if (c >= 'A' && c <= 'Z') {
            current += static_cast<char>(c - 'A' + 'a');
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

struct EntryRef {
    std::string disease;
    std::size_t entry = 0;

    friend auto operator<=>(const EntryRef&, const EntryRef&) = default;
};

/// Keyword postings over every entry point of a knowledge base.
class ComplaintIndex {
public:
    using Postings = std::map<std::string, std::set<EntryRef>, std::less<>>;

    ComplaintIndex() = default;
    explicit ComplaintIndex(Postings postings) : postings_(std::move(postings)) {}

    const Postings& postings() const noexcept { return postings_; }

    const std::set<EntryRef>* find(std::string_view token) const {
        auto it = postings_.find(token);
        return it == postings_.end() ? nullptr : &it->second;
    }

    friend bool operator==(const ComplaintIndex&, const ComplaintIndex&) = default;

private:
    Postings postings_;
};

inline ComplaintIndex build_index(const KnowledgeBase& kb) {
    ComplaintIndex::Postings postings;
    for (const auto& d : kb.diseases())
        for (std::size_t e = 0; e < d.entries.size(); ++e)
            for (const auto& kw : d.entries[e].keywords) postings[kw].insert({d.id, e});
    return ComplaintIndex(std::move(postings));
}

struct MatchCandidate {
    std::string disease;
    std::size_t entry = 0;
    std::size_t score = 0;  // distinct matched keywords
    std::set<std::string> matched;

    friend bool operator==(const MatchCandidate&, const MatchCandidate&) = default;
};

/// Every entry sharing at least one keyword with the complaint, best first:
/// score descending, then disease id, then entry ordinal. Empty means no match.
inline std::vector<MatchCandidate> match_complaint(const ComplaintIndex& index, std::string_view text) {
    const auto tokens = normalize(text);
    const std::set<std::string> distinct(tokens.begin(), tokens.end());

    std::map<EntryRef, std::set<std::string>> hits;
    for (const auto& token : distinct)
        if (const auto* refs = index.find(token))
            for (const auto& ref : *refs) hits[ref].insert(token);

    std::vector<MatchCandidate> out;
    out.reserve(hits.size());
    for (auto& [ref, matched] : hits) out.push_back({ref.disease, ref.entry, matched.size(), std::move(matched)});
    // hits iterates in (disease, entry) order already; a stable sort on score finishes the ranking
    std::stable_sort(out.begin(), out.end(),
                     [](const MatchCandidate& a, const MatchCandidate& b) { return a.score > b.score; });
    return out;
}

} // namespace smartdoc

#endif // SMARTDOC_MATCHER_HPP
