#include "stagewise/orchestrator.hpp"

#include <stdexcept>

#include "stagewise/errors.hpp"
#include "stagewise/logging.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

}  // namespace

json to_json(const TurnResult& r) {
    json j{{"session_id", r.session_id},
           {"turn_index", r.turn_index},
           {"reply", r.reply},
           {"stage_before", to_string(r.stage_before)},
           {"stage_after", to_string(r.stage_after)},
           {"signal", to_json(r.signal)},
           {"suggestions", r.suggestions},
           {"suppressed", r.suppressed},
           {"degraded_flags", r.degraded_flags},
           {"backend_calls", r.backend_calls}};
    j["reasoning_chain"] = r.reasoning_chain ? json(*r.reasoning_chain) : json(nullptr);
    if (r.plan) {
        json verdicts = json::array();
        for (const auto& f : r.plan->feasibility) {
            verdicts.push_back(json{{"feasible", f.feasible}, {"reason", f.reason}});
        }
        j["plan"] = json{{"plan", to_json(r.plan->plan)}, {"feasibility", verdicts}};
    } else {
        j["plan"] = nullptr;
    }
    return j;
}

Orchestrator::Orchestrator(const CueLexicon& lexicon, const PromptEngine& prompts,
                           ChatBackend& backend, ChatBackend* classifier, EventStore& store,
                           OrchestratorOptions options, Clock clock)
    : lexicon_(lexicon),
      prompts_(prompts),
      backend_(backend),
      store_(store),
      options_(std::move(options)),
      clock_(std::move(clock)),
      detector_(lexicon_, options_.detector, classifier) {}

std::shared_ptr<Orchestrator::Slot> Orchestrator::slot(const std::string& session_id) {
    {
        std::shared_lock lock(table_mu_);
        if (auto it = sessions_.find(session_id); it != sessions_.end()) return it->second;
    }
    // Not live: rebuild from the store if it has the log.
    if (!store_.exists(session_id)) throw NotFound("session " + session_id);
    auto loaded = store_.load(session_id);
    auto s = std::make_shared<Slot>();
    s->state = replay(loaded.events);
    s->log = std::move(loaded.events);
    std::unique_lock lock(table_mu_);
    return sessions_.emplace(session_id, std::move(s)).first->second;
}

void Orchestrator::append(Slot& s, EventKind kind, int turn, json payload) {
    SessionEvent e{s.state.session_id, turn, kind, rfc3339(clock_()), std::move(payload)};
    std::lock_guard lock(s.data_mu);
    auto next = apply_event(s.state, e);
    store_.append(e);
    s.state = std::move(next);
    s.log.push_back(std::move(e));
}

SessionState Orchestrator::create_session(SessionConfig config) {
    if (config.resources.empty()) config.resources = options_.default_resources;
    auto s = std::make_shared<Slot>();
    s->state = stagewise::create_session(config);
    const auto id = s->state.session_id;
    {
        std::unique_lock lock(table_mu_);
        if (sessions_.count(id) || store_.exists(id)) {
            throw std::invalid_argument("session id already in use: " + id);
        }
        sessions_.emplace(id, s);
    }
    events::Extraction initial;
    initial.resources = config.resources;
    // An empty log is indistinguishable from an unknown session, so the
    // turn-0 extraction is written even without resources.
    append(*s, EventKind::Extraction, 0, events::extraction(initial));
    std::lock_guard lock(s->data_mu);
    return s->state;
}

TurnResult Orchestrator::handle_message(const std::string& session_id, const std::string& text,
                                        const std::vector<StepUpdate>& step_updates) {
    auto s = slot(session_id);
    std::unique_lock turn_lock(s->turn_mu, std::try_to_lock);
    if (!turn_lock.owns_lock()) throw SessionBusy(session_id);
    if (text.empty()) throw std::invalid_argument("empty message");

    SessionState st;
    {
        std::lock_guard lock(s->data_mu);
        st = s->state;
    }
    if (st.stage == Stage::Closed) throw SessionClosed(session_id);

    TurnResult r;
    r.session_id = session_id;
    r.turn_index = st.turn_index + 1;
    r.stage_before = st.stage;
    const int turn = r.turn_index;
    const auto& flags = options_.flags;

    append(*s, EventKind::UserMsg, turn, events::user_message(text));
    for (const auto& u : step_updates) {
        if (s->state.plans.empty()) break;
        append(*s, EventKind::StepStatus, turn,
               events::step_status(s->state.plans.size() - 1, u.step, u.status));
    }

    auto detection = detector_.detect(s->state, text, turn);
    if (detection.degraded) r.degraded_flags.insert("detector_degraded");
    r.signal = resolve(r.stage_before, detection.candidates);
    r.stage_after = next_stage(r.stage_before, r.signal.kind);
    append(*s, EventKind::Signal, turn,
           events::signal(detection.candidates, r.signal, detection.avoidance_cue));
    append(*s, EventKind::Transition, turn,
           events::transition(r.stage_before, r.signal, r.stage_after));
    if ((r.stage_after == Stage::Crisis) != (r.stage_before == Stage::Crisis)) {
        append(*s, EventKind::CrisisFlag, turn, events::crisis_flag(r.stage_after == Stage::Crisis));
    }

    if (r.stage_after == Stage::Crisis) {
        r.reply = options_.crisis_referral_text;
        append(*s, EventKind::AgentMsg, turn,
               events::agent_message(r.reply, r.stage_after, std::nullopt, {}));
        return r;
    }
    if (r.stage_after == Stage::Closed) {
        r.reply = options_.closing_text;
        append(*s, EventKind::AgentMsg, turn,
               events::agent_message(r.reply, r.stage_after, std::nullopt, {}));
        append(*s, EventKind::Closure, turn, events::closure("closure_signal"));
        return r;
    }

    PromptOptions popts{flags.thinking, flags.stage_info, options_.history_window};
    SessionState snapshot;
    {
        std::lock_guard lock(s->data_mu);
        snapshot = s->state;
    }
    const auto bundle = prompts_.build_prompt(snapshot, r.stage_after, popts);
    r.backend_calls = 1;
    const auto raw = backend_.complete(CompletionRequest{bundle.messages(), options_.params, turn});

    const auto parsed = prompts_.parse_response(raw, flags.thinking);
    if (parsed.degraded) r.degraded_flags.insert("parse_degraded");
    if (parsed.stage_echo && flags.stage_info && parsed.stage_echo->stage != r.stage_after) {
        r.degraded_flags.insert("stage_echo_mismatch");
        logger()->info("session {} turn {}: model reports stage {} but resolver chose {}",
                       session_id, turn, to_string(parsed.stage_echo->stage),
                       to_string(r.stage_after));
    }
    const auto gated = prompts_.gate_reply(r.stage_after, parsed, flags.gating && flags.stage_info);
    r.reply = gated.final_reply;
    r.suppressed = gated.suppressed;
    r.reasoning_chain = parsed.reasoning_chain;
    r.suggestions = prompts_.suggestions().suggestions_in(r.reply);

    if (!parsed.extractions.empty()) {
        append(*s, EventKind::Extraction, turn, events::extraction(parsed.extractions));
    }
    append(*s, EventKind::AgentMsg, turn,
           events::agent_message(r.reply, r.stage_after, r.reasoning_chain, r.suppressed));

    if (auto plan = extract_plan(r.reply)) {
        PlanVerdict verdict;
        plan->stage = r.stage_after;
        plan->proposed_turn = turn;
        std::vector<Resource> resources;
        {
            std::lock_guard lock(s->data_mu);
            resources = s->state.resources;
        }
        for (auto& step : plan->steps) {
            auto f = check_feasibility(step, resources);
            if (!f.feasible) step.status = StepStatus::Infeasible;
            verdict.feasibility.push_back(std::move(f));
        }
        append(*s, EventKind::PlanProposed, turn, events::plan_proposed(*plan));
        verdict.plan = std::move(*plan);
        r.plan = std::move(verdict);
    }
    return r;
}

SessionState Orchestrator::override_stage(const std::string& session_id, Stage to,
                                          const std::string& operator_note) {
    if (operator_note.empty()) throw std::invalid_argument("operator_note is required");
    auto s = slot(session_id);
    std::unique_lock turn_lock(s->turn_mu, std::try_to_lock);
    if (!turn_lock.owns_lock()) throw SessionBusy(session_id);
    Stage from;
    int turn;
    {
        std::lock_guard lock(s->data_mu);
        from = s->state.stage;
        turn = s->state.turn_index;
    }
    if (from == Stage::Closed) throw SessionClosed(session_id);
    append(*s, EventKind::StageOverride, turn, events::stage_override(from, to, operator_note));
    if ((to == Stage::Crisis) != (from == Stage::Crisis)) {
        append(*s, EventKind::CrisisFlag, turn, events::crisis_flag(to == Stage::Crisis));
    }
    if (to == Stage::Closed) append(*s, EventKind::Closure, turn, events::closure("operator"));
    std::lock_guard lock(s->data_mu);
    return s->state;
}

void Orchestrator::end_session(const std::string& session_id, const std::string& reason) {
    auto s = slot(session_id);
    std::lock_guard turn_lock(s->turn_mu);
    int turn;
    {
        std::lock_guard lock(s->data_mu);
        turn = s->state.turn_index;
    }
    append(*s, EventKind::Closure, turn, events::closure(reason));
}

SessionState Orchestrator::state(const std::string& session_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->data_mu);
    return s->state;
}

std::vector<SessionEvent> Orchestrator::transcript(const std::string& session_id) {
    auto s = slot(session_id);
    std::lock_guard lock(s->data_mu);
    return s->log;
}

}  // namespace stagewise
