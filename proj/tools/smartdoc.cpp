// smartdoc: chat, lint, render, simulate and serve a triage knowledge base.
//
// Exit codes: 0 success, 1 validation errors, 2 operational failure.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>

#include <pthread.h>

#include <CLI11.hpp>

#include "smartdoc/http_server.hpp"
#include "smartdoc/smartdoc.hpp"

namespace {

using namespace smartdoc;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFailure = 2;

struct CliFailure {
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliFailure{"cannot read " + path};
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw CliFailure{"cannot read " + path};
    return buf.str();
}

std::string default_data_dir() {
    if (const char* env = std::getenv("SMARTDOC_DATA_DIR"); env && *env) return env;
    return "smartdoc-data";
}

void print_finding(std::ostream& out, const Finding& f) {
    out << to_string(f.severity) << ' ' << f.code << ' '
        << (f.location.disease.empty() ? std::string("(kb)") : f.location.disease);
    if (f.location.node) out << '/' << *f.location.node;
    out << ' ' << f.message << '\n';
}

/// Parses and validates, reporting problems on stderr.
KnowledgeBase load_or_fail(const std::string& path, int max_depth) {
    const auto text = read_file(path);
    try {
        return load_kb(text, max_depth);
    } catch (const ParseError& e) {
        throw CliFailure{path + ":" + e.what()};
    } catch (const InvalidKnowledgeBase& e) {
        std::ostringstream msg;
        msg << path << ": knowledge base has errors";
        for (const auto& f : e.report().findings)
            if (f.severity == Severity::Error) {
                msg << "\n";
                print_finding(msg, f);
            }
        auto s = msg.str();
        if (!s.empty() && s.back() == '\n') s.pop_back();
        throw CliFailure{s};
    }
}

int run_validate(const std::string& path, int max_depth) {
    const auto text = read_file(path);
    KbDocument doc;
    try {
        doc = parse_kb(text);
    } catch (const ParseError& e) {
        std::cerr << e.what() << '\n';
        return kExitFailure;
    }
    const auto report = validate_kb(doc, max_depth);
    for (const auto& f : report.findings) print_finding(std::cout, f);
    return report.loadable() ? kExitOk : kExitInvalid;
}

int run_dot(const std::string& path, const std::optional<std::string>& disease, int max_depth) {
    const auto kb = load_or_fail(path, max_depth);
    try {
        std::cout << export_dot(kb, disease ? std::optional<std::string_view>(*disease) : std::nullopt);
    } catch (const UnknownDisease& e) {
        std::cerr << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}

int run_simulate(const std::string& path, std::uint64_t sessions, std::uint64_t seed, int max_depth) {
    const auto kb = load_or_fail(path, max_depth);
    std::cout << simulate(kb, sessions, seed).render();
    return kExitOk;
}

void show_question(std::ostream& out, const QuestionPrompt& q) {
    out << q.text << '\n';
    for (std::size_t i = 0; i < q.answers.size(); ++i) out << "  " << (i + 1) << ") " << q.answers[i] << '\n';
}

void show_recommendation(std::ostream& out, const RecommendationPrompt& r, const ReminderPlan& plan) {
    out << r.advice << '\n';
    if (plan.doses.empty()) return;
    out << "Reminders:\n";
    for (std::size_t i = 0; i < plan.doses.size() && i < 3; ++i) {
        const auto& d = plan.doses[i];
        out << "  " << format_rfc3339(d.due) << "  " << d.medicine << " (dose " << d.sequence << ")\n";
    }
}

/// Maps a typed reply to an answer label: a 1-based option number or the label itself.
std::optional<std::string> pick_answer(const QuestionPrompt& q, std::string reply) {
    const auto first = reply.find_first_not_of(" \t\r");
    const auto last = reply.find_last_not_of(" \t\r");
    if (first == std::string::npos) return std::nullopt;
    reply = reply.substr(first, last - first + 1);
    if (reply.find_first_not_of("0123456789") == std::string::npos) {
        if (reply.size() > 9) return std::nullopt;
        const auto n = std::stoul(reply);
        if (n < 1 || n > q.answers.size()) return std::nullopt;
        return q.answers[n - 1];
    }
    for (const auto& a : q.answers)
        if (a == reply) return a;
    return std::nullopt;
}

int run_chat(const std::string& path, const std::string& data_dir, int max_depth) {
    const auto kb = load_or_fail(path, max_depth);
    const auto index = build_index(kb);
    SessionStore store(data_dir);
    std::string line;

    while (true) {
        std::cout << "Describe your complaint:\n> " << std::flush;
        if (!std::getline(std::cin, line)) {
            std::cout << '\n';
            return kExitOk;
        }
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        SessionStart start;
        try {
            start = start_session(kb, index, line, utc_now());
        } catch (const NoMatch&) {
            std::cout << "no match; try describing one symptom, e.g. \"pain in my neck\"\n";
            continue;
        }
        SessionRecord record{start.session, std::nullopt, 0};
        Prompt prompt = start.prompt;
        auto commit = [&] {
            if (const auto* rec = std::get_if<RecommendationPrompt>(&prompt))
                record.plan = build_plan(rec->medicines, utc_now(), record.session.id);
            record.revision = store.save(record);
        };
        commit();

        while (const auto* q = std::get_if<QuestionPrompt>(&prompt)) {
            show_question(std::cout, *q);
            std::cout << "> " << std::flush;
            if (!std::getline(std::cin, line)) {
                std::cout << '\n';
                return kExitOk;
            }
            const auto label = pick_answer(*q, line);
            if (!label) {
                std::cout << "please answer with a number from 1 to " << q->answers.size() << '\n';
                continue;
            }
            prompt = answer(kb, record.session, *label, utc_now());
            commit();
        }
        const auto& rec = std::get<RecommendationPrompt>(prompt);
        show_recommendation(std::cout, rec, *record.plan);
        std::cout << '\n';
    }
}

int run_serve(const std::string& path, const std::string& host, int port, const std::string& data_dir, int max_depth) {
    const auto kb = load_or_fail(path, max_depth);
    std::optional<SessionStore> store;
    try {
        store.emplace(data_dir);
    } catch (const StoreError& e) {
        throw CliFailure{e.what()};
    }

    // Signals are taken synchronously by a dedicated thread; every other thread inherits the mask.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    api::Service service(kb, *store);
    httplib::Server server;
    // httplib's default also sets SO_REUSEPORT, which lets a second server share the port
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    api::mount(server, service, &std::cout);
    if (port == 0) {
        port = server.bind_to_any_port(host);
        if (port < 0) throw CliFailure{"cannot bind " + host};
    } else if (!server.bind_to_port(host, port)) {
        throw CliFailure{"cannot bind " + host + ":" + std::to_string(port)};
    }
    std::cerr << "listening on " << host << ':' << port << std::endl;

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    const bool ok = server.listen_after_bind();
    if (!ok && server.is_running()) server.stop();
    // listen returns once stop() ran; wake the waiter if the server ended on its own
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    store->flush();
    std::cout << std::flush;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-tree triage dialogue engine"};
    app.require_subcommand(1);

    int max_depth = kDefaultMaxDepth;
    std::string kb_path;

    auto* validate = app.add_subcommand("validate", "Lint a knowledge base; exit 1 on errors");
    validate->add_option("kb-file", kb_path, "Knowledge base file")->required();
    validate->add_option("--max-depth", max_depth, "Question depth limit")->check(CLI::PositiveNumber);

    auto* chat = app.add_subcommand("chat", "Interactive triage session on the terminal");
    std::string data_dir = default_data_dir();
    chat->add_option("kb-file", kb_path, "Knowledge base file")->required();
    chat->add_option("--data-dir", data_dir, "Transcript directory (default $SMARTDOC_DATA_DIR)");
    chat->add_option("--max-depth", max_depth, "Question depth limit")->check(CLI::PositiveNumber);

    auto* dot = app.add_subcommand("dot", "Render decision trees as Graphviz DOT");
    std::optional<std::string> disease;
    dot->add_option("kb-file", kb_path, "Knowledge base file")->required();
    dot->add_option("--disease", disease, "Only this disease");
    dot->add_option("--max-depth", max_depth, "Question depth limit")->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "Random-walk sessions and report coverage");
    std::uint64_t sessions = 1000;
    std::uint64_t seed = 1;
    sim->add_option("kb-file", kb_path, "Knowledge base file")->required();
    sim->add_option("--sessions", sessions, "Number of sessions");
    sim->add_option("--seed", seed, "Generator seed");
    sim->add_option("--max-depth", max_depth, "Question depth limit")->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
    int port = 8080;
    std::string host = "127.0.0.1";
    serve->add_option("kb-file", kb_path, "Knowledge base file")->required();
    serve->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Listen address");
    serve->add_option("--data-dir", data_dir, "Session directory (default $SMARTDOC_DATA_DIR)");
    serve->add_option("--max-depth", max_depth, "Question depth limit")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitFailure;
    }

    try {
        if (*validate) return run_validate(kb_path, max_depth);
        if (*chat) return run_chat(kb_path, data_dir, max_depth);
        if (*dot) return run_dot(kb_path, disease, max_depth);
        if (*sim) return run_simulate(kb_path, sessions, seed, max_depth);
        if (*serve) return run_serve(kb_path, host, port, data_dir, max_depth);
    } catch (const CliFailure& e) {
        std::cerr << e.message << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
