// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "stagewise/detector.hpp"
#include "stagewise/errors.hpp"
#include "stagewise/eval.hpp"
#include "stagewise/gateway.hpp"
#include "stagewise/logging.hpp"
#include "stagewise/orchestrator.hpp"
#include "stagewise/stage.hpp"
#include "stagewise/text.hpp"
#include "support/flaky_server.hpp"
#include "support/gate_backend.hpp"
#include "support/oracles.hpp"
#include "support/served.hpp"
#include "support/support.hpp"

using namespace stagewise;
using json = nlohmann::json;
namespace t = stagewise::testing;

namespace {

// Collects failed expectations for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok && failures_.size() < 8) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    bool ok() const { return failed_ == 0; }
    int failed() const { return failed_; }
    const std::vector<std::string>& failures() const { return failures_; }

private:
    std::vector<std::string> failures_;
    int failed_ = 0;
};

struct Criterion {
    int id;
    std::string title;
    std::chrono::milliseconds limit;
    std::function<void(Check&)> body;
};

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// ---------------------------------------------------------------- 1

void transition_table(Check& c) {
    int pairs = 0;
    for (Stage s : kAllStages) {
        for (SignalKind k : kAllSignals) {
            ++pairs;
            c.expect(next_stage(s, k) == oracle::next(s, k),
                     fmt::format("next_stage({}, {})", to_string(s), to_string(k)));
        }
    }
    c.expect(pairs == 45, "45 pairs");
    c.expect(next_stage(Stage::Action, SignalKind::ResistanceToAdvice) == Stage::Insight, "Action + S4 -> Insight");
    for (Stage s : {Stage::Exploration, Stage::Insight, Stage::Action}) {
        c.expect(next_stage(s, SignalKind::AvoidanceDetected) == Stage::Exploration,
                 fmt::format("{} + S3 -> Exploration", to_string(s)));
    }
    for (SignalKind k : kAllSignals) {
        if (k != SignalKind::CrisisResolved) {
            c.expect(next_stage(Stage::Crisis, k) == Stage::Crisis, fmt::format("crisis lock on {}", to_string(k)));
        }
    }
    c.expect(next_stage(Stage::Crisis, SignalKind::CrisisResolved) == Stage::Exploration, "crisis release");
}

// ---------------------------------------------------------------- 2

void resolver_properties(Check& c) {
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> kind_d(1, 9), count_d(1, 7), pos_d(0, 60), conf_d(0, 10);
    const int n = 10000;
    int tie_cases = 0;
    for (int i = 0; i < n; ++i) {
        const Stage stage = kAllStages[static_cast<std::size_t>(rng() % 5)];
        std::vector<TransitionSignal> cands;
        const int count = count_d(rng);
        for (int k = 0; k < count; ++k) {
            const auto kind = static_cast<SignalKind>(kind_d(rng));
            const auto start = static_cast<std::size_t>(pos_d(rng));
            const std::string ev = kind == SignalKind::Continue ? "" : "cue" + std::to_string(pos_d(rng) % 5);
            cands.push_back(make_signal(kind, conf_d(rng) / 10.0, ev, {start, start + ev.size()}));
        }
        const auto got = resolve(stage, cands);
        c.expect(got == oracle::resolve(stage, cands), fmt::format("case {} matches reference", i));

        const bool crisis = std::any_of(cands.begin(), cands.end(),
                                        [](const auto& s) { return s.kind == SignalKind::CrisisTrigger; });
        if (crisis && stage != Stage::Crisis && stage != Stage::Closed) {
            c.expect(got.kind == SignalKind::CrisisTrigger, fmt::format("case {} crisis preemption", i));
        }
        if (stage == Stage::Closed) c.expect(got.kind == SignalKind::Continue, fmt::format("case {} closed", i));
        c.expect(got.kind == SignalKind::Continue || applicable(stage, got.kind),
                 fmt::format("case {} applicability", i));

        std::map<SignalKind, int> per_kind;
        for (const auto& s : cands) ++per_kind[s.kind];
        tie_cases += per_kind[got.kind] > 1;
        for (int r = 0; r < 2; ++r) {
            auto shuffled = cands;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            c.expect(resolve(stage, shuffled) == got, fmt::format("case {} order independence", i));
        }
    }
    c.expect(tie_cases > 100, "ties exercised");
}

// ---------------------------------------------------------------- 3

void detector_corpus(Check& c) {
    const auto& a = t::assets();
    DetectorConfig one;
    one.avoidance_threshold = 1;
    SignalDetector det(a.lexicon, one);
    std::ifstream in(t::data("corpus/signals.v1.tsv"));
    c.expect(static_cast<bool>(in), "corpus present");
    std::string line;
    int total = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto cols = text::split(line, '\t');
        if (cols.size() != 2) {
            c.expect(false, "corpus line shape: " + line);
            continue;
        }
        const auto want = parse_signal(cols[1]);
        const auto got = primary_signal(det.detect(SessionState{}, cols[0]).candidates);
        c.expect(want && got == *want, "label for: " + cols[0]);
        ++total;
    }
    c.expect(total >= 50, fmt::format("corpus size {}", total));

    DetectorConfig two;
    two.avoidance_threshold = 2;
    SignalDetector det2(a.lexicon, two);
    auto run = [&](const std::vector<std::string>& seq) {
        SessionState st;
        std::vector<std::pair<int, bool>> out;
        for (const auto& u : seq) {
            const auto d = det2.detect(st, u);
            st.avoidance_counter = d.avoidance_counter;
            out.emplace_back(d.avoidance_counter, d.has(SignalKind::AvoidanceDetected));
        }
        return out;
    };
    const std::string avoid = "I don't want to talk about my job.";
    const std::string plain = "Work has been long lately.";
    using Seq = std::vector<std::pair<int, bool>>;
    c.expect(run({avoid}) == Seq{{1, false}}, "counter 1, no S3");
    c.expect(run({avoid, avoid}) == Seq{{1, false}, {2, true}}, "counter 2, S3");
    c.expect(run({avoid, plain, avoid}) == Seq{{1, false}, {0, false}, {1, false}}, "reset on non-avoidance");
}

// ---------------------------------------------------------------- 4, 6

const std::vector<std::string> kCases{"case1", "case2", "case3"};

eval::Persona golden_persona(const std::string& id) {
    return eval::Persona::load(t::data("personas/golden/" + id + ".json"));
}

// Drives a live orchestrator over a file store with the user turns of a
// golden log, then compares the live state to the replayed golden file.
void replay_equivalence(Check& c) {
    const auto& a = t::assets();
    t::TempDir live_dir("accept-live"), golden_dir("accept-golden");
    for (const auto& id : kCases) {
        const auto golden_path = t::data("golden_logs/" + id + ".events.jsonl");
        std::filesystem::copy_file(golden_path, golden_dir.path() / (id + ".events.jsonl"));
        FileEventStore golden_store(golden_dir.path());
        const auto golden = golden_store.load(id);
        c.expect(!golden.truncated, id + " golden complete");

        const auto persona = golden_persona(id);
        auto backend = ScriptedBackend::from_file(persona.script.string());
        FileEventStore store(live_dir.path());
        Orchestrator orch(a.lexicon, a.prompts, *backend, nullptr, store, a.options(), logical_clock());
        orch.create_session(SessionConfig{id, persona.resources});
        std::map<int, std::string> user;
        std::map<int, std::vector<StepUpdate>> updates;
        std::optional<std::string> ended;
        for (const auto& e : golden.events) {
            if (e.kind == EventKind::UserMsg) user[e.turn_index] = e.payload.at("text").get<std::string>();
            if (e.kind == EventKind::StepStatus) {
                updates[e.turn_index].push_back(
                    StepUpdate{e.payload.at("step").get<int>(),
                               *parse_step_status(e.payload.at("status").get<std::string>())});
            }
            if (e.kind == EventKind::Closure) ended = e.payload.at("reason").get<std::string>();
        }
        for (const auto& [turn, text] : user) orch.handle_message(id, text, updates[turn]);
        if (ended) orch.end_session(id, *ended);

        const auto live = orch.state(id);
        c.expect(replay(golden.events) == live, id + ": replay(golden) == live state");
        c.expect(replay(store.load(id).events) == live, id + ": replay(live log) == live state");
        c.expect(read_file(store.path_for(id)) == read_file(golden_path), id + ": live log bytes == golden");
    }

    // Every cut point of the longest golden log.
    const auto content = read_file(t::data("golden_logs/case3.events.jsonl"));
    const auto full = parse_log(content).events;
    std::vector<std::size_t> ends;
    for (std::size_t p = content.find('\n'); p != std::string::npos; p = content.find('\n', p + 1)) ends.push_back(p + 1);
    t::TempDir cut_dir("accept-cut");
    FileEventStore cut_store(cut_dir.path());
    const auto path = cut_store.path_for("case3");
    const auto level = logger()->level();
    logger()->set_level(spdlog::level::err);
    for (std::size_t cut = 1; cut < content.size(); ++cut) {
        std::ofstream(path, std::ios::binary | std::ios::trunc) << content.substr(0, cut);
        const auto r = cut_store.load("case3");
        const auto complete = static_cast<std::size_t>(std::upper_bound(ends.begin(), ends.end(), cut) - ends.begin());
        const bool prefix = r.events.size() == complete && std::equal(r.events.begin(), r.events.end(), full.begin());
        const bool at_boundary = complete > 0 && ends[complete - 1] == cut;
        c.expect(prefix, fmt::format("cut {}: complete prefix", cut));
        c.expect(r.truncated != at_boundary, fmt::format("cut {}: truncation flag", cut));
        c.expect(std::filesystem::file_size(path) == (complete ? ends[complete - 1] : 0),
                 fmt::format("cut {}: file cut back", cut));
    }
    logger()->set_level(level);
}

struct GoldenCase {
    std::string id;
    int turn;  // turn whose user message is the case input
    std::string input;
    std::string reply;
    Stage final_stage;
};

const std::vector<GoldenCase> kGolden{
    {"case1", 1, "I've been feeling overwhelmed by work lately.",
     "It sounds like your recent workload has been burdensome. Could you describe the specific situations causing "
     "this pressure? Is it related to tasks, colleagues, or supervisors?",
     Stage::Exploration},
    {"case2", 2, "I feel trapped, no matter how hard I try, I see no hope.",
     "Does this feeling of being 'trapped' resemble how you felt during your previous business failure? Sometimes "
     "past experiences shape our future expectations negatively. Do you think there might be similar reasons for "
     "your current situation?",
     Stage::Insight},
    {"case3", 3, "I know I should change my situation, but I don't know where to start.",
     "Let's start small. In the first week, record daily emotional triggers to identify stressful situations. In the "
     "second week, try a 10-minute meditation session to relieve anxiety.",
     Stage::Action},
};

std::map<int, std::string> agent_replies(const std::vector<SessionEvent>& log) {
    std::map<int, std::string> out;
    for (const auto& e : log) {
        if (e.kind == EventKind::AgentMsg) out[e.turn_index] = e.payload.at("text").get<std::string>();
    }
    return out;
}

void golden_cases(Check& c) {
    const auto& a = t::assets();
    for (const auto& g : kGolden) {
        const auto persona = golden_persona(g.id);
        auto backend = ScriptedBackend::from_file(persona.script.string());
        MemoryEventStore store;
        Orchestrator orch(a.lexicon, a.prompts, *backend, nullptr, store, a.options(), logical_clock());
        eval::PersonaState ps;
        orch.create_session(SessionConfig{g.id, persona.resources});
        auto turn = eval::opening_turn(persona, ps);
        std::map<int, std::string> replies;
        TurnResult last;
        for (int i = 1; i <= persona.turn_cap.value_or(30); ++i) {
            if (i == g.turn) c.expect(turn.utterance == g.input, g.id + ": case input at its turn");
            last = orch.handle_message(g.id, turn.utterance, turn.step_updates);
            replies[last.turn_index] = last.reply;
            if (i == g.turn) c.expect(last.reply == g.reply, g.id + ": verbatim reply");
            if (i == persona.turn_cap.value_or(30)) break;
            eval::AgentView view{last.reply, last.stage_after, last.suggestions, last.plan};
            turn = eval::simulate_turn(persona, ps, view, a.eval_lexicon);
        }
        c.expect(orch.state(g.id).stage == g.final_stage, g.id + ": final stage");

        const auto recorded = agent_replies(parse_log(read_file(t::data("golden_logs/" + g.id + ".events.jsonl"))).events);
        c.expect(replies == recorded, g.id + ": every turn matches the recorded agent text");

        if (g.id == "case3") {
            const auto st = orch.state(g.id);
            c.expect(st.plans.size() == 1, "case3: one plan");
            if (!st.plans.empty()) {
                const auto& plan = st.plans.front();
                c.expect(plan.steps.size() == 2, "case3: two steps");
                for (const auto& step : plan.steps) {
                    c.expect(check_feasibility(step, st.resources).feasible,
                             fmt::format("case3: step {} feasible", step.index));
                }
            }
        }
    }
}

// ---------------------------------------------------------------- 5

void prompt_round_trip(Check& c) {
    const auto& engine = t::assets().prompts;
    std::mt19937 rng(99);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    const std::vector<std::string> visible{
        "That sounds heavy. ", "What happened then? ", "Try to rest tonight. ", "You should talk to him. ",
        "I believe in you. ", "Keep trying! ", "How about a walk? ", "It is like a storm.\n", "1. Walk daily.\n",
        "Have you considered a break? ", "Maybe you could journal. ", "\n", "... ", "Okay "};
    const std::vector<std::string> noise{"<thi", "nk>", "</", "think>", "<", ">", "[[extract]]", "[[/extract]]",
                                         "keywords: a\n", "→", "<think", "/think>", "<Action>", "\x01"};
    for (int i = 0; i < 10000; ++i) {
        std::string raw;
        std::vector<std::string> secrets;
        const int pieces = 1 + static_cast<int>(pick(9));
        for (int k = 0; k < pieces; ++k) {
            switch (pick(4)) {
                case 0: {
                    auto secret = fmt::format("HIDDEN{}x{}", i, k);
                    raw += "<think>Current stage: Insight\n" + secret + noise[pick(noise.size())] + "</think>";
                    secrets.push_back(std::move(secret));
                    break;
                }
                case 1: raw += noise[pick(noise.size())]; break;
                default: raw += visible[pick(visible.size())];
            }
        }
        if (pick(8) == 0) {
            auto secret = fmt::format("OPEN{}", i);
            raw += "<think>" + secret;
            secrets.push_back(std::move(secret));
        }
        try {
            const auto p = engine.parse_response(raw, pick(2) == 0);
            bool leak = p.reply.find("<think>") != std::string::npos || p.reply.find("</think>") != std::string::npos;
            for (const auto& s : secrets) leak = leak || p.reply.find(s) != std::string::npos;
            c.expect(!leak, "no reasoning leak for: " + raw);
            const auto g = engine.gate_reply(Stage::Exploration, p);
            c.expect(engine.suggestions().suggestions_in(g.final_reply).empty(), "gated Exploration reply: " + raw);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("parse raised: ") + ex.what());
        }
    }
}

// ---------------------------------------------------------------- 7

void metric_oracles(Check& c) {
    const auto persona = oracle::recipe_persona();
    const auto& lex = t::assets().eval_lexicon;
    const auto& sugg = t::assets().prompts.suggestions();
    const auto recipes = oracle::recipes();
    c.expect(recipes.size() == 20, "20 transcripts");
    auto close = [](double a, double b) { return std::abs(a - b) < 1e-9; };
    for (const auto& r : recipes) {
        const auto events = oracle::render(r);
        const auto want = oracle::expected(r);
        const auto e = eval::exposure_completeness(events, persona);
        c.expect(e.revealed == want.revealed && e.surfaced == want.surfaced && close(e.value, want.exposure()),
                 r.name + ": exposure");
        c.expect(eval::restructuring_success(events, persona, lex) == want.restructuring, r.name + ": restructuring");
        const auto a = eval::adoption_rate(events);
        c.expect(a.proposed == want.proposed && a.accepted == want.accepted && close(a.value, want.adoption()),
                 r.name + ": adoption");
        const auto s = eval::suggestion_rates(events, sugg);
        c.expect(s.total == want.suggestions && s.premature_count == want.premature && s.generic_count == want.generic &&
                     close(s.premature, want.premature_rate()) && close(s.ineffective, want.ineffective_rate()),
                 r.name + ": suggestion rates");
        c.expect(eval::root_cause_identified(events, persona) == want.root_cause, r.name + ": root cause");
    }
}

// ---------------------------------------------------------------- 8

void ablation_direction(Check& c) {
    const auto& a = t::assets();
    const auto personas = eval::load_personas(t::data("personas/adversarial"));
    const auto ctx = a.eval_context();
    c.expect(personas.size() >= 3, "adversarial personas present");

    auto flags = a.options().flags;
    flags.gating = true;
    const auto on = eval::run_eval(personas, ctx, flags);
    flags.gating = false;
    const auto off = eval::run_eval(personas, ctx, flags);
    c.expect(on.dialogues.size() == personas.size() && off.dialogues.size() == personas.size(), "all dialogues ran");
    c.expect(on.aggregate.premature_suggestion_rate < off.aggregate.premature_suggestion_rate,
             fmt::format("gating on {:.3f} < off {:.3f}", on.aggregate.premature_suggestion_rate,
                         off.aggregate.premature_suggestion_rate));

    flags = a.options().flags;
    flags.thinking = false;
    const auto no_think = eval::run_eval(personas, ctx, flags);
    for (const auto& d : no_think.dialogues) c.expect(!d.root_cause_identified, d.persona_id + ": thinking off");
    c.expect(no_think.dialogues.size() == personas.size(), "thinking-off dialogues ran");

    const std::vector<eval::ArmFlags> same{{"baseline", true, true}, {"baseline_again", true, true},
                                           {"no_stage_a", false, true}, {"no_stage_b", false, true}};
    const auto rep = eval::run_ablation(personas, same, ctx);
    auto zero = [](const eval::AggregateMetrics& d) {
        return d.exposure_completeness == 0 && d.restructuring_success == 0 && d.adoption_rate == 0 &&
               d.premature_suggestion_rate == 0 && d.ineffective_suggestion_rate == 0 && d.root_cause_identified == 0;
    };
    c.expect(rep.comparable, "arms comparable");
    c.expect(zero(rep.arms[1].delta), "identical arms: zero delta");
    for (const auto& p : rep.arms[1].paired) c.expect(zero(p), "identical arms: zero paired delta");
    c.expect(zero(eval::difference(rep.arms[3].report.aggregate, rep.arms[2].report.aggregate)),
             "identical non-baseline arms: zero delta");
}

// ---------------------------------------------------------------- 9

void service_contract(Check& c) {
    using Served = t::Served;
    {
        Served s;
        const auto sid = s.create();
        auto r = s.post(Served::base(sid) + "/messages", json{{"text", kGolden[0].input}});
        c.expect(r && r->status == 200, "message 200");
        if (r && r->status == 200) c.expect(json::parse(r->body).at("reply") == kGolden[0].reply, "Case 1 reply");
        auto st = s.get(Served::base(sid) + "/state");
        auto tr = s.get(Served::base(sid) + "/transcript");
        c.expect(st && st->status == 200, "state 200");
        c.expect(tr && tr->status == 200, "transcript 200");
        if (st && tr) {
            const auto state = json::parse(st->body);
            c.expect(state.at("stage") == "exploration", "state stage");
            c.expect(to_json(replay(t::parse_ndjson(tr->body))) == state, "state == replay(transcript)");
        }
        auto missing = s.get("/v1/sessions/unknown/state");
        c.expect(missing && missing->status == 404, "404 for unknown session");
    }
    {
        auto gate = std::make_unique<t::GateBackend>();
        auto* g = gate.get();
        Served s(std::move(gate));
        const auto sid = s.create();
        auto first = std::async(std::launch::async, [&] {
            httplib::Client cl("127.0.0.1", s.port);
            cl.set_read_timeout(10, 0);
            return cl.Post((Served::base(sid) + "/messages").c_str(), json{{"text", "First."}}.dump(),
                           "application/json");
        });
        g->wait_entered();
        auto second = s.post(Served::base(sid) + "/messages", json{{"text", "Second."}});
        c.expect(second && second->status == 409, "409 on concurrent message");
        g->release();
        auto r = first.get();
        c.expect(r && r->status == 200, "first message completes");
    }
    {
        Served s(t::script({}));
        const auto sid = s.create();
        auto r = s.post(Served::base(sid) + "/messages", json{{"text", "I want to end my life."}});
        c.expect(r && r->status == 200, "crisis turn 200");
        if (r && r->status == 200) {
            const auto body = json::parse(r->body);
            c.expect(body.at("backend_calls") == 0, "crisis turn: zero backend calls");
            c.expect(body.at("stage_after") == "crisis", "crisis stage");
        }
        const auto other = s.create();
        auto bye = s.post(Served::base(other) + "/messages", json{{"text", "Thanks for listening, goodbye."}});
        c.expect(bye && bye->status == 200, "closing turn 200");
        auto late = s.post(Served::base(other) + "/messages", json{{"text", "One more thing."}});
        c.expect(late && late->status == 410, "410 after closure");
        auto tr = s.get(Served::base(other) + "/transcript");
        auto st = s.get(Served::base(other) + "/state");
        if (tr && st) c.expect(to_json(replay(t::parse_ndjson(tr->body))) == json::parse(st->body), "closed replay");
    }
}

// ---------------------------------------------------------------- 10

constexpr const char* kKeyVar = "STAGEWISE_ACCEPT_GATEWAY_KEY";
constexpr const char* kKey = "sk-accept-5b1e93c2aa";

BackendConfig remote(const std::string& url, int timeout_ms, int retries, int backoff_ms) {
    BackendConfig b;
    b.kind = BackendKind::Remote;
    b.endpoint_url = url;
    b.model_name = "acceptance";
    b.api_key_env = kKeyVar;
    b.timeout_ms = timeout_ms;
    b.max_retries = retries;
    b.backoff_base_ms = backoff_ms;
    return b;
}

void gateway_resilience(Check& c) {
    ::setenv(kKeyVar, kKey, 1);
    t::LogCapture logs;
    const CompletionRequest req{{{"system", "s"}, {"user", "u"}}, {}, 1};
    {
        t::FlakyServer server({t::FlakyServer::stall(), t::FlakyServer::stall(), t::FlakyServer::reply("ok")}, 700);
        const auto cfg = remote(server.url(), 250, 2, 40);
        RemoteBackend b(cfg);
        const auto t0 = std::chrono::steady_clock::now();
        std::string out;
        try {
            out = b.complete(req);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("flaky call failed: ") + ex.what());
        }
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
        // (max_retries + 1) * timeout + sum of backoffs + slack
        const auto bound = std::chrono::milliseconds((cfg.max_retries + 1) * cfg.timeout_ms +
                                                     cfg.backoff_base_ms * ((1 << cfg.max_retries) - 1) + 100);
        c.expect(out == "ok", "success after two timeouts");
        c.expect(b.last_attempts() == 3 && server.hits() == 3, "three attempts");
        c.expect(elapsed <= bound, fmt::format("latency {} ms <= {} ms", elapsed.count(), bound.count()));
        c.expect(server.authorization() == std::string("Bearer ") + kKey, "key sent to the server");
    }
    {
        t::FlakyServer server({t::FlakyServer::status(503, std::string("bad key ") + kKey)}, 0);
        RemoteBackend b(remote(server.url(), 250, 2, 5));
        try {
            b.complete(req);
            c.expect(false, "exhaustion raises");
        } catch (const BackendUnavailable& ex) {
            c.expect(ex.attempts() == 3, "attempts == max_retries + 1");
            c.expect(std::string(ex.what()).find(kKey) == std::string::npos, "key absent from the error");
        }
        c.expect(server.hits() == 3, "server saw max_retries + 1 requests");
    }
    const auto text = logs.text();
    c.expect(!text.empty(), "logs captured");
    c.expect(text.find(kKey) == std::string::npos, "key absent from logs");
    ::unsetenv(kKeyVar);
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "transition table totality and correctness", std::chrono::seconds(1), transition_table},
        {2, "resolver properties over 10000 random candidate sets", std::chrono::seconds(10), resolver_properties},
        {3, "detector corpus and avoidance threshold", std::chrono::seconds(5), detector_corpus},
        {4, "replay equivalence and truncated-log recovery", std::chrono::seconds(5), replay_equivalence},
        {5, "prompt/parse round trip over 10000 fuzzed outputs", std::chrono::seconds(30), prompt_round_trip},
        {6, "golden case replays", std::chrono::seconds(5), golden_cases},
        {7, "metric oracles on 20 transcripts", std::chrono::seconds(5), metric_oracles},
        {8, "ablation directionality", std::chrono::seconds(30), ablation_direction},
        {9, "service contract", std::chrono::seconds(60), service_contract},
        {10, "gateway resilience", std::chrono::seconds(60), gateway_resilience},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            cr.body(c);
        } catch (const std::exception& ex) {
            c.expect(false, std::string("uncaught: ") + ex.what());
        }
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0);
        const bool in_time = ms <= cr.limit;
        const bool ok = c.ok() && in_time;
        failed += !ok;
        std::cout << fmt::format("{} [{}] {} ({} ms, limit {} ms)\n", ok ? "PASS" : "FAIL", cr.id, cr.title, ms.count(),
                                 cr.limit.count());
        for (const auto& f : c.failures()) std::cout << "       - " << f << "\n";
        if (c.failed() > static_cast<int>(c.failures().size())) {
            std::cout << fmt::format("       ... {} more\n", c.failed() - static_cast<int>(c.failures().size()));
        }
        if (!in_time) std::cout << "       - exceeded time limit\n";
        std::cout.flush();
    }
    std::cout << fmt::format("{}/{} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed ? 1 : 0;
}
