#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "stagewise/config.hpp"
#include "stagewise/errors.hpp"
#include "stagewise/eval.hpp"
#include "stagewise/event_store.hpp"
#include "stagewise/service.hpp"
#include "stagewise/text.hpp"

namespace sw = stagewise;

namespace {

enum Exit { kOk = 0, kUsage = 1, kConfig = 2, kBackend = 3 };

sw::Service* g_service = nullptr;

void on_signal(int) {
    if (g_service) g_service->stop();
}

int chat(const std::string& config_path, bool show_thinking) {
    auto rt = sw::Runtime::build(sw::load_config(config_path));
    auto orch = rt->make_orchestrator();
    const auto sid = orch.create_session().session_id;
    std::cout << "session " << sid << " [" << sw::display_name(sw::Stage::Exploration)
              << "]  (empty line or /quit to leave)\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        if (line.empty() || line == "/quit") break;
        const auto r = orch.handle_message(sid, line);
        if (show_thinking && r.reasoning_chain) {
            std::cout << "  (thinking) " << sw::text::replace_all(*r.reasoning_chain, "\n", "\n  (thinking) ")
                      << "\n";
        }
        std::cout << "[" << sw::display_name(r.stage_after) << "] " << r.reply << "\n";
        if (r.plan) {
            for (std::size_t i = 0; i < r.plan->plan.steps.size(); ++i) {
                const auto& s = r.plan->plan.steps[i];
                const auto& f = r.plan->feasibility[i];
                std::cout << "  step " << s.index << " (" << s.schedule_hint << "): " << s.description
                          << (f.feasible ? "" : "  [infeasible: " + f.reason + "]") << "\n";
            }
        }
        if (r.stage_after == sw::Stage::Closed) break;
    }
    return kOk;
}

void record(const std::vector<sw::eval::DialogueRun>& runs, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& run : runs) {
        std::ofstream out(std::filesystem::path(dir) / (run.persona_id + ".events.jsonl"), std::ios::binary);
        for (const auto& e : run.transcript) out << sw::to_line(e);
    }
}

int run_eval(const std::string& config_path, const std::string& personas_dir, const std::string& ablate,
             bool as_json, const std::string& record_dir) {
    auto rt = sw::Runtime::build(sw::load_config(config_path));
    if (!rt->eval_lexicon) throw sw::ConfigError("config has no assets.eval_lexicon");
    const auto personas = sw::eval::load_personas(personas_dir);
    sw::eval::EvalContext ctx{rt->lexicon, rt->prompts, *rt->eval_lexicon, rt->config.orchestrator,
                              nullptr, rt->classifier.get(), rt->config.turn_cap};
    if (ablate.empty()) {
        std::vector<sw::eval::DialogueRun> runs;
        const auto report = sw::eval::run_eval(personas, ctx, ctx.options.flags, &runs);
        if (!record_dir.empty()) record(runs, record_dir);
        std::cout << (as_json ? sw::eval::to_json(report).dump(2) + "\n" : sw::eval::format_table(report));
    } else {
        const auto arms = sw::eval::ablation_arms(ablate != "thinking", ablate != "stage");
        const auto report = sw::eval::run_ablation(personas, arms, ctx);
        std::cout << (as_json ? sw::eval::to_json(report).dump(2) + "\n" : sw::eval::format_table(report));
    }
    return kOk;
}

int replay(const std::string& path, bool quiet) {
    const auto loaded = sw::read_log_file(path);
    if (loaded.truncated) std::cerr << "warning: " << loaded.warning << "\n";
    if (loaded.events.empty()) throw sw::CorruptedLog(path + ": no events");

    const auto folded = sw::replay(loaded.events);
    sw::SessionState incremental;
    for (const auto& e : loaded.events) sw::apply_event_in_place(incremental, e);
    if (sw::to_json(folded) != sw::to_json(incremental)) {
        throw sw::CorruptedLog(path + ": incremental and folded replays disagree");
    }

    if (!quiet) {
        for (const auto& e : loaded.events) {
            switch (e.kind) {
                case sw::EventKind::UserMsg:
                    std::cout << "user  #" << e.turn_index << ": " << e.payload.at("text").get<std::string>() << "\n";
                    break;
                case sw::EventKind::AgentMsg:
                    std::cout << "agent #" << e.turn_index << " ["
                              << e.payload.at("stage").get<std::string>()
                              << "]: " << e.payload.at("text").get<std::string>() << "\n";
                    break;
                case sw::EventKind::Transition:
                    if (e.payload.at("from") != e.payload.at("to")) {
                        std::cout << "      " << e.payload.at("from").get<std::string>() << " -> "
                                  << e.payload.at("to").get<std::string>() << " ("
                                  << e.payload.at("signal").at("signal").get<std::string>() << ")\n";
                    }
                    break;
                case sw::EventKind::StageOverride:
                    std::cout << "      operator: " << e.payload.at("from").get<std::string>() << " -> "
                              << e.payload.at("to").get<std::string>() << "\n";
                    break;
                default:
                    break;
            }
        }
    }
    std::cout << "session " << folded.session_id << ": " << loaded.events.size()
              << " events, replay verified\nfinal stage: " << sw::to_string(folded.stage) << "\n";
    return kOk;
}

int serve(const std::string& config_path, std::string host, int port) {
    auto config = sw::load_config(config_path);
    if (host.empty()) host = config.host;
    if (port < 0) port = config.port;
    auto rt = sw::Runtime::build(std::move(config));
    auto orch = rt->make_orchestrator();
    sw::Service service(*rt, orch);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on " << host << ":" << port << "\n";
    const bool ok = service.listen(host, port);
    g_service = nullptr;
    if (!ok) {
        std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
        return kConfig;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stage-aware emotional support dialogue engine"};
    app.require_subcommand(1);

    std::string config_path = STAGEWISE_DEFAULT_CONFIG;

    auto* chat_cmd = app.add_subcommand("chat", "Interactive session on stdin/stdout");
    bool show_thinking = false;
    chat_cmd->add_option("--config", config_path, "Engine config file")->check(CLI::ExistingFile);
    chat_cmd->add_flag("--show-thinking", show_thinking, "Print the reasoning chain of each turn");

    auto* eval_cmd = app.add_subcommand("eval", "Run personas and report metrics");
    std::string personas_dir, ablate, record_dir;
    bool as_json = false;
    eval_cmd->add_option("--personas", personas_dir, "Persona directory")->required()->check(CLI::ExistingDirectory);
    eval_cmd->add_option("--ablate", ablate, "Ablation arms")->check(CLI::IsMember({"stage", "thinking", "both"}));
    eval_cmd->add_option("--config", config_path, "Engine config file")->check(CLI::ExistingFile);
    eval_cmd->add_option("--record", record_dir, "Write each transcript to <dir>/<persona>.events.jsonl");
    eval_cmd->add_flag("--json", as_json, "JSON report instead of a table");

    auto* replay_cmd = app.add_subcommand("replay", "Replay and verify an event log");
    std::string log_path;
    bool quiet = false;
    replay_cmd->add_option("log", log_path, "Event log file")->required()->check(CLI::ExistingFile);
    replay_cmd->add_flag("-q,--quiet", quiet, "Only print the summary");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    std::string host;
    int port = -1;
    serve_cmd->add_option("--config", config_path, "Engine config file")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", host, "Listen address");
    serve_cmd->add_option("--port", port, "Listen port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*chat_cmd) return chat(config_path, show_thinking);
        if (*eval_cmd) return run_eval(config_path, personas_dir, ablate, as_json, record_dir);
        if (*replay_cmd) return replay(log_path, quiet);
        if (*serve_cmd) return serve(config_path, host, port);
    } catch (const sw::BackendUnavailable& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const sw::ScriptExhausted& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kBackend;
    } catch (const sw::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    }
    return kUsage;
}
