#ifndef SMARTDOC_KB_PARSER_HPP
#define SMARTDOC_KB_PARSER_HPP

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kb_model.hpp"
#include "text.hpp"

// Knowledge-base DSL. Statements are line-bound: every argument of a statement sits on
// the line of its leading keyword, so a missing trailing argument is reported on that line.
//
//   kb      := "KB" STRING "VERSION" INT disease+
//   disease := "DISEASE" IDENT entry+ node* leaf+ "END"
//   entry   := "ENTRY" STRING "KEYWORDS" IDENT+ "ROOT" IDENT
//   node    := "NODE" IDENT "ASK" STRING answer answer+
//   answer  := "ANSWER" IDENT "->" IDENT
//   leaf    := "LEAF" IDENT "SAY" STRING med*
//   med     := "MEDICINE" STRING "EVERY" DURATION "FOR" DURATION

namespace smartdoc {

struct SourcePosition {
    int line = 1;
    int column = 1;

    friend bool operator==(const SourcePosition&, const SourcePosition&) = default;
};

class ParseError : public std::runtime_error {
public:
    ParseError(SourcePosition pos, std::string expected, std::string found)
        : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) +
                             ": expected " + expected + ", found " + found),
          position_(pos), expected_(std::move(expected)), found_(std::move(found)) {}

    SourcePosition position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }
    const std::string& found() const noexcept { return found_; }

private:
    SourcePosition position_;
    std::string expected_;
    std::string found_;
};

namespace detail {

enum class TokenKind { Word, String, EndOfLine, EndOfInput };

struct Token {
    TokenKind kind;
    std::string text;  // word text, or the decoded string value
    std::string raw;   // source spelling, used in error messages
    SourcePosition pos;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\n') {
                out.push_back({TokenKind::EndOfLine, "", "end of line", here()});
                advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                advance();
            } else if (c == '#') {
                while (i_ < src_.size() && src_[i_] != '\n') step_char();
            } else if (c == '"') {
                out.push_back(string_literal());
            } else {
                out.push_back(word());
            }
        }
        // A final newline terminates the last line rather than opening a new one.
        SourcePosition end = here();
        if (!out.empty() && out.back().kind == TokenKind::EndOfLine && !src_.empty() && src_.back() == '\n')
            end = out.back().pos;
        out.push_back({TokenKind::EndOfInput, "", "end of input", end});
        return out;
    }

private:
    SourcePosition here() const { return {line_, column_}; }

    void advance() {
        if (src_[i_] == '\n') {
            ++line_;
            column_ = 1;
        } else if ((static_cast<unsigned char>(src_[i_]) & 0xC0) != 0x80) {
            ++column_;
        }
        ++i_;
    }

    // Advances over one code point, rejecting malformed UTF-8.
    void step_char() {
        const auto c = static_cast<unsigned char>(src_[i_]);
        if (c < 0x80) {
            advance();
            return;
        }
        if (utf8_valid_prefix(src_.substr(i_, 4)) == 0) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "byte 0x%02X", c);
            throw ParseError(here(), "UTF-8 text", buf);
        }
        const std::size_t len = (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : 4;
        ++column_;
        i_ += len;
    }

    Token word() {
        const auto pos = here();
        const auto start = i_;
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v' || c == '\n' || c == '"' || c == '#')
                break;
            step_char();
        }
        std::string text(src_.substr(start, i_ - start));
        return {TokenKind::Word, text, text, pos};
    }

    Token string_literal() {
        const auto pos = here();
        const auto start = i_;
        advance();  // opening quote
        std::string value;
        while (true) {
            if (i_ >= src_.size() || src_[i_] == '\n')
                throw ParseError(pos, "closing quote", i_ >= src_.size() ? "end of input" : "end of line");
            const char c = src_[i_];
            if (c == '"') {
                advance();
                break;
            }
            if (c == '\\') {
                const auto esc_pos = here();
                advance();
                if (i_ < src_.size() && (src_[i_] == '"' || src_[i_] == '\\')) {
                    value += src_[i_];
                    advance();
                    continue;
                }
                std::string found = "\\";
                if (i_ < src_.size() && static_cast<unsigned char>(src_[i_]) >= 0x20 && src_[i_] != 0x7F)
                    found += src_[i_];
                throw ParseError(esc_pos, "escape \\\" or \\\\", found);
            }
            if (static_cast<unsigned char>(c) < 0x20 || c == 0x7F) {
                char buf[16];
                std::snprintf(buf, sizeof buf, "byte 0x%02X", static_cast<unsigned char>(c));
                throw ParseError(here(), "printable character", buf);
            }
            const auto before = i_;
            step_char();
            value.append(src_.substr(before, i_ - before));
        }
        return {TokenKind::String, std::move(value), std::string(src_.substr(start, i_ - start)), pos};
    }

    std::string_view src_;
    std::size_t i_ = 0;
    int line_ = 1;
    int column_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    KbDocument parse() {
        KbDocument kb;
        skip_blank_lines();
        keyword("KB");
        kb.title = string_value();
        keyword("VERSION");
        kb.version = integer();
        end_of_statement();

        skip_blank_lines();
        if (!is_keyword("DISEASE")) fail("DISEASE");
        while (is_keyword("DISEASE")) {
            kb.diseases.push_back(disease());
            skip_blank_lines();
        }
        if (peek().kind != TokenKind::EndOfInput) fail("DISEASE or end of input");
        return kb;
    }

private:
    const Token& peek() const { return toks_[i_]; }
    const Token& take() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }

    [[noreturn]] void fail(std::string expected) const {
        const auto& t = peek();
        throw ParseError(t.pos, std::move(expected), t.raw);
    }

    bool is_keyword(std::string_view kw) const {
        return peek().kind == TokenKind::Word && peek().text == kw;
    }

    void keyword(std::string_view kw) {
        if (!is_keyword(kw)) fail(std::string(kw));
        take();
    }

    void skip_blank_lines() {
        while (peek().kind == TokenKind::EndOfLine) take();
    }

    void end_of_statement() {
        if (peek().kind == TokenKind::EndOfLine) {
            take();
        } else if (peek().kind != TokenKind::EndOfInput) {
            fail("end of line");
        }
    }

    std::string string_value() {
        if (peek().kind != TokenKind::String) fail("string");
        return take().text;
    }

    bool at_identifier() const { return peek().kind == TokenKind::Word && is_identifier(peek().text); }

    std::string identifier() {
        if (!at_identifier()) fail("identifier");
        return take().text;
    }

    std::int64_t integer() {
        const auto& t = peek();
        std::int64_t value = 0;
        if (t.kind != TokenKind::Word || t.text.empty() ||
            t.text.find_first_not_of("0123456789") != std::string::npos)
            fail("integer");
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
        if (ec != std::errc{}) fail("integer");
        take();
        return value;
    }

    Hours duration() {
        const auto& t = peek();
        if (t.kind != TokenKind::Word || t.text.size() < 2) fail("duration");
        const char unit = t.text.back();
        const std::string_view digits(t.text.data(), t.text.size() - 1);
        if ((unit != 'h' && unit != 'd') || digits.find_first_not_of("0123456789") != std::string_view::npos)
            fail("duration");
        std::int64_t value = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        // bound keeps day-to-hour normalization and later dose arithmetic in range
        constexpr std::int64_t limit = std::int64_t{1} << 40;
        if (ec != std::errc{} || value > limit) fail("duration");
        take();
        return Hours{unit == 'd' ? value * 24 : value};
    }

    Disease disease() {
        Disease d;
        keyword("DISEASE");
        d.id = identifier();
        end_of_statement();

        skip_blank_lines();
        if (!is_keyword("ENTRY")) fail("ENTRY");
        while (true) {
            skip_blank_lines();
            if (is_keyword("ENTRY") && d.nodes.empty() && d.leaves.empty()) {
                d.entries.push_back(entry());
            } else if (is_keyword("NODE") && d.leaves.empty()) {
                d.nodes.push_back(node());
            } else if (is_keyword("LEAF")) {
                d.leaves.push_back(leaf());
            } else if (is_keyword("END") && !d.leaves.empty()) {
                take();
                end_of_statement();
                return d;
            } else if (!d.leaves.empty()) {
                fail("LEAF, MEDICINE or END");
            } else if (!d.nodes.empty()) {
                fail("ANSWER, NODE or LEAF");
            } else {
                fail("ENTRY, NODE or LEAF");
            }
        }
    }

    EntryPoint entry() {
        EntryPoint e;
        keyword("ENTRY");
        e.complaint = string_value();
        keyword("KEYWORDS");
        e.keywords.push_back(identifier());
        while (at_identifier()) e.keywords.push_back(take().text);
        keyword("ROOT");
        e.root = identifier();
        end_of_statement();
        return e;
    }

    QuestionNode node() {
        QuestionNode n;
        keyword("NODE");
        n.id = identifier();
        keyword("ASK");
        n.question = string_value();
        end_of_statement();
        while (true) {
            skip_blank_lines();
            if (!is_keyword("ANSWER")) {
                if (n.answers.size() < 2) fail("ANSWER");
                return n;
            }
            take();
            AnswerEdge a;
            a.label = identifier();
            keyword("->");
            a.target = identifier();
            end_of_statement();
            n.answers.push_back(std::move(a));
        }
    }

    LeafRecommendation leaf() {
        LeafRecommendation l;
        keyword("LEAF");
        l.id = identifier();
        keyword("SAY");
        l.advice = string_value();
        end_of_statement();
        while (true) {
            skip_blank_lines();
            if (!is_keyword("MEDICINE")) return l;
            take();
            MedicineDirective m;
            m.name = string_value();
            keyword("EVERY");
            m.interval = duration();
            keyword("FOR");
            m.duration = duration();
            end_of_statement();
            l.medicines.push_back(std::move(m));
        }
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
};

inline std::string quote(std::string_view s) {
    std::string out;
    out.reserve(s.size() + 2);
    out += '"';
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// Parses DSL text. Purely syntactic: reference and structure checks belong to validate_kb.
/// Throws ParseError at the first violation.
inline KbDocument parse_kb(std::string_view text) {
    return detail::Parser(detail::Lexer(text).run()).parse();
}

/// Parses and validates in one step.
inline KnowledgeBase load_kb(std::string_view text, int max_depth = kDefaultMaxDepth) {
    return KnowledgeBase::load(parse_kb(text), max_depth);
}

/// Canonical text form. Durations are always written in hours.
inline std::string serialize_kb(const KbDocument& kb) {
    using detail::quote;
    std::ostringstream out;
    out << "KB " << quote(kb.title) << " VERSION " << kb.version << '\n';
    for (const auto& d : kb.diseases) {
        out << "DISEASE " << d.id << '\n';
        for (const auto& e : d.entries) {
            out << "  ENTRY " << quote(e.complaint) << " KEYWORDS";
            for (const auto& kw : e.keywords) out << ' ' << kw;
            out << " ROOT " << e.root << '\n';
        }
        for (const auto& n : d.nodes) {
            out << "  NODE " << n.id << " ASK " << quote(n.question) << '\n';
            std::size_t width = 0;
            for (const auto& a : n.answers) width = std::max(width, a.label.size());
            for (const auto& a : n.answers)
                out << "    ANSWER " << a.label << std::string(width - a.label.size() + 1, ' ') << "-> "
                    << a.target << '\n';
        }
        for (const auto& l : d.leaves) {
            out << "  LEAF " << l.id << " SAY " << quote(l.advice) << '\n';
            for (const auto& m : l.medicines)
                out << "    MEDICINE " << quote(m.name) << " EVERY " << m.interval.count() << "h FOR "
                    << m.duration.count() << "h\n";
        }
        out << "END\n";
    }
    return out.str();
}

inline std::string serialize_kb(const KnowledgeBase& kb) { return serialize_kb(kb.document()); }

class UnknownDisease : public std::runtime_error {
public:
    UnknownDisease(std::string id, std::vector<std::string> known)
        : std::runtime_error(describe(id, known)), id_(std::move(id)), known_(std::move(known)) {}

    const std::string& id() const noexcept { return id_; }
    const std::vector<std::string>& known() const noexcept { return known_; }

private:
    static std::string describe(const std::string& id, const std::vector<std::string>& known) {
        std::string msg = "unknown disease '" + id + "'; known:";
        for (const auto& k : known) msg += " " + k;
        return msg;
    }

    std::string id_;
    std::vector<std::string> known_;
};

/// Leaf labels longer than this many characters are cut and suffixed with an ellipsis.
inline constexpr std::size_t kDotLabelLimit = 40;

namespace detail {

inline std::string dot_label(std::string_view text, bool truncate) {
    std::string shown(text);
    if (truncate && utf8_length(text) > kDotLabelLimit)
        shown = std::string(utf8_prefix(text, kDotLabelLimit)) + "…";
    return quote(shown);
}

inline void write_dot(std::ostream& out, const Disease& d) {
    auto name = [&](const std::string& id) { return quote(d.id + "__" + id); };
    out << "digraph " << quote(d.id) << " {\n";
    for (const auto& n : d.nodes)
        out << "  " << name(n.id) << " [shape=box, label=" << dot_label(n.question, false) << "];\n";
    for (const auto& l : d.leaves)
        out << "  " << name(l.id) << " [shape=ellipse, label=" << dot_label(l.advice, true) << "];\n";
    for (const auto& n : d.nodes)
        for (const auto& a : n.answers)
            out << "  " << name(n.id) << " -> " << name(a.target) << " [label=" << quote(a.label) << "];\n";
    out << "}\n";
}

} // namespace detail

/// Graphviz rendering: one digraph per selected disease, in declaration order.
/// Throws UnknownDisease when `disease` names no disease of `kb`.
inline std::string export_dot(const KnowledgeBase& kb, std::optional<std::string_view> disease = std::nullopt) {
    std::ostringstream out;
    if (disease) {
        const auto* d = kb.find_disease(*disease);
        if (!d) {
            std::vector<std::string> known;
            for (const auto& k : kb.diseases()) known.push_back(k.id);
            throw UnknownDisease(std::string(*disease), std::move(known));
        }
        detail::write_dot(out, *d);
        return out.str();
    }
    bool first = true;
    for (const auto& d : kb.diseases()) {
        if (!first) out << '\n';
        first = false;
        detail::write_dot(out, d);
    }
    return out.str();
}

} // namespace smartdoc

#endif // SMARTDOC_KB_PARSER_HPP
