#include <gtest/gtest.h>

#include <random>
#include <regex>
#include <string>
#include <vector>

#include "smartdoc/kb_parser.hpp"
#include "support/fixtures.hpp"

namespace {

using namespace smartdoc;
using namespace smartdoc::testing;

ParseError parse_error(std::string_view text) {
    try {
        parse_kb(text);
    } catch (const ParseError& e) {
        return e;
    }
    ADD_FAILURE() << "expected a ParseError for:\n" << text;
    return ParseError({0, 0}, "", "");
}

struct SourceToken {
    int line;
    std::size_t offset;  // byte offset in the whole text
    std::size_t length;
    std::string text;
};

// Test-side tokenizer: whitespace-separated words and double-quoted strings.
std::vector<SourceToken> source_tokens(const std::string& text) {
    std::vector<SourceToken> out;
    int line = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (c == ' ') {
            ++i;
        } else {
            const auto start = i;
            if (c == '"') {
                ++i;
                while (text[i] != '"') i += text[i] == '\\' ? 2 : 1;
                ++i;
            } else {
                while (i < text.size() && text[i] != ' ' && text[i] != '\n') ++i;
            }
            out.push_back({line, start, i - start, text.substr(start, i - start)});
        }
    }
    return out;
}

TEST(ParseKb, Fixture) {
    const auto kb = parse_kb(kFixture);
    EXPECT_EQ(kb.title, "general-physician");
    EXPECT_EQ(kb.version, 1);
    ASSERT_EQ(kb.diseases.size(), 1u);
    const auto& d = kb.diseases[0];
    EXPECT_EQ(d.id, "migraine");
    ASSERT_EQ(d.entries.size(), 1u);
    EXPECT_EQ(d.entries[0].complaint, "I have pain in my neck");
    EXPECT_EQ(d.entries[0].keywords, (std::vector<std::string>{"pain", "neck"}));
    EXPECT_EQ(d.entries[0].root, "q_vomit");
    ASSERT_EQ(d.nodes.size(), 1u);
    EXPECT_EQ(d.nodes[0].question, "Do you have vomiting too");
    EXPECT_EQ(d.nodes[0].answers, (std::vector<AnswerEdge>{{"yes", "l_migraine"}, {"no", "l_tension"}}));
    ASSERT_EQ(d.leaves.size(), 2u);
    EXPECT_EQ(d.leaves[0].advice, kMigraineAdvice);
    EXPECT_EQ(d.leaves[0].medicines, (std::vector<MedicineDirective>{{"Bruefen", Hours{8}, Hours{72}}}));
    EXPECT_TRUE(d.leaves[1].medicines.empty());
}

TEST(ParseKb, EmptyInput) {
    const auto e = parse_error("");
    EXPECT_EQ(e.position(), (SourcePosition{1, 1}));
    EXPECT_EQ(e.expected(), "KB");
    EXPECT_EQ(e.found(), "end of input");
    EXPECT_STREQ(e.what(), "1:1: expected KB, found end of input");
}

TEST(ParseKb, MissingAnswerTargetIsReportedOnItsLine) {
    std::string text = kFixture;
    text.replace(text.find("ANSWER yes -> l_migraine"), 24, "ANSWER yes -> ");
    const auto e = parse_error(text);
    EXPECT_EQ(e.position().line, 5);
    EXPECT_EQ(e.expected(), "identifier");
    EXPECT_EQ(e.found(), "end of line");
}

TEST(ParseKb, LexicalErrors) {
    auto e = parse_error("KB \"unterminated VERSION 1\n");
    EXPECT_EQ(e.position(), (SourcePosition{1, 4}));
    EXPECT_EQ(e.expected(), "closing quote");

    e = parse_error("KB \"bad \\n escape\" VERSION 1\n");
    EXPECT_EQ(e.position(), (SourcePosition{1, 9}));

    e = parse_error("KB \"t\" VERSION 1\nDISEASE \xff\n");
    EXPECT_EQ(e.position(), (SourcePosition{2, 9}));
    EXPECT_EQ(e.expected(), "UTF-8 text");

    // columns count characters, not bytes
    e = parse_error("KB \"é…\" VERSION x\n");
    EXPECT_EQ(e.position(), (SourcePosition{1, 17}));
    EXPECT_EQ(e.expected(), "integer");
}

TEST(ParseKb, GrammarOrderIsEnforced) {
    std::string leaf_before_node = kFixture;
    const auto node_line = std::string("  NODE q_vomit ASK \"Do you have vomiting too\"\n    ANSWER yes -> l_migraine\n"
                                       "    ANSWER no  -> l_tension\n");
    leaf_before_node.erase(leaf_before_node.find(node_line), node_line.size());
    leaf_before_node.insert(leaf_before_node.find("END"), node_line);
    const auto e = parse_error(leaf_before_node);
    EXPECT_EQ(e.expected(), "LEAF, MEDICINE or END");

    EXPECT_EQ(parse_error("KB \"t\" VERSION 1\nDISEASE d\n  ENTRY \"x\" KEYWORDS x ROOT l\nEND\n").expected(),
              "ENTRY, NODE or LEAF");
    EXPECT_EQ(parse_error("KB \"t\" VERSION 1\n").expected(), "DISEASE");
    EXPECT_EQ(parse_error("KB \"t\" VERSION 1\nDISEASE d\n  LEAF l SAY \"x\"\nEND\n").expected(), "ENTRY");
    // one-answer question
    EXPECT_EQ(parse_error("KB \"t\" VERSION 1\nDISEASE d\n  ENTRY \"x\" KEYWORDS x ROOT q\n"
                          "  NODE q ASK \"?\"\n    ANSWER a -> l\n  LEAF l SAY \"x\"\nEND\n")
                  .expected(),
              "ANSWER");
    // a statement may not continue on the next line
    EXPECT_EQ(parse_error("KB \"t\"\nVERSION 1\n").position().line, 1);
}

TEST(ParseKb, CommentsBlankLinesAndDays) {
    const auto kb = parse_kb("# header\n\nKB \"t # not a comment\" VERSION 3  # trailing\n\n"
                             "DISEASE d\n  ENTRY \"x\" KEYWORDS x y ROOT l   # root\n"
                             "  LEAF l SAY \"ok\"\n    MEDICINE \"M\" EVERY 2d FOR 10d\nEND");
    EXPECT_EQ(kb.title, "t # not a comment");
    EXPECT_EQ(kb.version, 3);
    EXPECT_EQ(kb.diseases[0].leaves[0].medicines[0].interval, Hours{48});
    EXPECT_EQ(kb.diseases[0].leaves[0].medicines[0].duration, Hours{240});
}

TEST(ParseKb, DanglingReferencesAreNotSyntaxErrors) {
    std::string text = kFixture;
    text.replace(text.find("-> l_tension"), 12, "-> nowhere");
    const auto doc = parse_kb(text);
    EXPECT_EQ(validate_kb(doc).count("DANGLING_REF"), 1u);
}

TEST(ParseKb, SingleTokenDeletionErrorsOnTheMutatedLine) {
    const std::string text = kFixture;
    const auto tokens = source_tokens(text);
    ASSERT_EQ(tokens.size(), 40u);
    int checked = 0;
    for (const auto& tok : tokens) {
        // one of two keywords may go without breaking the grammar
        if (tok.text == "pain" || tok.text == "neck") continue;
        std::string mutated = text;
        mutated.erase(tok.offset, tok.length);
        try {
            parse_kb(mutated);
            ADD_FAILURE() << "deleting '" << tok.text << "' still parses";
        } catch (const ParseError& e) {
            EXPECT_EQ(e.position().line, tok.line) << "deleted '" << tok.text << "': " << e.what();
        }
        ++checked;
    }
    EXPECT_EQ(checked, 38);
}

TEST(ParseKb, ArbitraryBytesNeverCrash) {
    std::mt19937_64 gen(99);
    auto check = [](const std::string& bytes) {
        try {
            parse_kb(bytes);
        } catch (const ParseError& e) {
            EXPECT_GE(e.position().line, 1);
            EXPECT_GE(e.position().column, 1);
        }
    };
    for (int round = 0; round < 2000; ++round) {
        std::string bytes(below(gen, 256), '\0');
        for (auto& b : bytes) b = static_cast<char>(below(gen, 256));
        check(bytes);
    }
    // byte-level mutations of a valid document
    const std::string fixture = kFixture;
    for (int round = 0; round < 2000; ++round) {
        std::string bytes = fixture;
        const auto edits = 1 + below(gen, 4);
        for (std::uint64_t k = 0; k < edits; ++k) bytes[below(gen, bytes.size())] = static_cast<char>(below(gen, 256));
        check(bytes);
    }
    std::string big(1 << 20, '\0');
    for (auto& b : big) b = static_cast<char>(below(gen, 256));
    check(big);
    // a 1 MiB document that is valid up to its last byte
    std::string long_valid = "KB \"t\" VERSION 1\n";
    while (long_valid.size() < (1u << 20)) long_valid += "# padding padding padding padding padding padding\n";
    check(long_valid);
}

TEST(SerializeKb, FixtureIsCanonicalExceptDays) {
    std::string expected = kFixture;
    expected.replace(expected.find("FOR 3d"), 6, "FOR 72h");
    EXPECT_EQ(serialize_kb(KnowledgeBase::load(parse_kb(kFixture))), expected);
}

TEST(SerializeKb, EscapesQuotesAndBackslashes) {
    auto doc = parse_kb(kFixture);
    doc.diseases[0].leaves[1].advice = "Say \"ahh\" \\ then rest";
    const auto text = serialize_kb(KnowledgeBase::load(doc));
    EXPECT_NE(text.find("SAY \"Say \\\"ahh\\\" \\\\ then rest\""), std::string::npos);
    EXPECT_EQ(parse_kb(text), doc);
}

TEST(SerializeKb, RoundTripOnGeneratedKbs) {
    std::mt19937_64 gen(2024);
    for (int round = 0; round < 100; ++round) {
        const auto kb = KnowledgeBase::load(random_kb(gen));
        const auto text = serialize_kb(kb);
        const auto back = KnowledgeBase::load(parse_kb(text));
        ASSERT_EQ(back.document(), kb.document()) << text;
        EXPECT_EQ(serialize_kb(back), text);
    }
}

TEST(ExportDot, MigraineDigraph) {
    const auto kb = KnowledgeBase::load(parse_kb(core_text()));
    const auto dot = export_dot(kb, "migraine");
    const std::string expected =
        "digraph \"migraine\" {\n"
        "  \"migraine__q_vomit\" [shape=box, label=\"Do you have vomiting too\"];\n"
        "  \"migraine__l_migraine\" [shape=ellipse, label=\"You have migraine pain and I prescribe y…\"];\n"
        "  \"migraine__l_tension\" [shape=ellipse, label=\"Rest and hydrate; return if pain persist…\"];\n"
        "  \"migraine__q_vomit\" -> \"migraine__l_migraine\" [label=\"yes\"];\n"
        "  \"migraine__q_vomit\" -> \"migraine__l_tension\" [label=\"no\"];\n"
        "}\n";
    EXPECT_EQ(dot, expected);
}

TEST(ExportDot, CountsNodesAndEdges) {
    const std::regex node_re(R"(\[shape=)");
    const std::regex edge_re(R"( -> )");
    auto count = [](const std::string& s, const std::regex& re) {
        return std::distance(std::sregex_iterator(s.begin(), s.end(), re), std::sregex_iterator());
    };
    const auto single = export_dot(KnowledgeBase::load(single_leaf_kb()), "bruise");
    EXPECT_EQ(count(single, node_re), 1);
    EXPECT_EQ(count(single, edge_re), 0);

    const auto all = export_dot(KnowledgeBase::load(parse_kb(core_text())));
    EXPECT_EQ(count(all, std::regex("digraph ")), 3);
    EXPECT_LT(all.find("digraph \"migraine\""), all.find("digraph \"stomach_infection\""));
    EXPECT_LT(all.find("digraph \"stomach_infection\""), all.find("digraph \"throat_infection\""));
    EXPECT_EQ(all, export_dot(KnowledgeBase::load(parse_kb(core_text()))));
}

TEST(ExportDot, ShortLabelsAreNotTruncated) {
    auto doc = parse_kb(kFixture);
    doc.diseases[0].leaves[1].advice = std::string(40, 'x');
    const auto dot = export_dot(KnowledgeBase::load(doc));
    EXPECT_NE(dot.find("label=\"" + std::string(40, 'x') + "\""), std::string::npos);
}

TEST(ExportDot, UnknownDiseaseListsKnownIds) {
    const auto kb = KnowledgeBase::load(parse_kb(core_text()));
    try {
        export_dot(kb, "nope");
        FAIL();
    } catch (const UnknownDisease& e) {
        EXPECT_EQ(e.known(), (std::vector<std::string>{"migraine", "stomach_infection", "throat_infection"}));
        EXPECT_NE(std::string(e.what()).find("throat_infection"), std::string::npos);
    }
}

} // namespace
