#include "stagewise/session.hpp"

#include <algorithm>
#include <atomic>
#include <ctime>
#include <memory>
#include <random>
#include <stdexcept>

#include "stagewise/errors.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

[[noreturn]] void corrupt(const SessionEvent& e, const std::string& why) {
    throw CorruptedLog("event turn " + std::to_string(e.turn_index) + " (" +
                       std::string(to_string(e.kind)) + "): " + why);
}

Stage stage_field(const SessionEvent& e, const json& p, const char* key) {
    const auto s = parse_stage(p.at(key).get<std::string>());
    if (!s) corrupt(e, std::string("bad stage in ") + key);
    return *s;
}

void add_unique(std::set<std::string>& set, const json& arr) {
    for (const auto& v : arr) {
        auto s = text::trim(v.get<std::string>());
        if (!s.empty()) set.insert(text::to_lower(s));
    }
}

void reduce(SessionState& st, const SessionEvent& e) {
    const json& p = e.payload;
    switch (e.kind) {
        case EventKind::UserMsg:
        case EventKind::AgentMsg: {
            const bool agent = e.kind == EventKind::AgentMsg;
            auto text = p.at("text").get<std::string>();
            if (agent) {
                for (auto& s : st.stressors) {
                    if (!s.surfaced && s.first_mentioned_turn <= e.turn_index &&
                        text::mentions(text, s.label)) {
                        s.surfaced = true;
                    }
                }
            }
            st.messages.push_back(DialogueTurn{e.turn_index, agent ? "assistant" : "user",
                                               std::move(text)});
            break;
        }
        case EventKind::Signal:
            st.avoidance_counter = p.at("avoidance_cue").get<bool>() ? st.avoidance_counter + 1 : 0;
            break;
        case EventKind::Transition: {
            const Stage from = stage_field(e, p, "from");
            const Stage to = stage_field(e, p, "to");
            const auto sig = signal_from_json(p.at("signal"));
            if (from != st.stage) corrupt(e, "transition from a stage the session is not in");
            if (to != next_stage(from, sig.kind)) corrupt(e, "transition disagrees with table");
            for (auto it = st.transitions.rbegin(); it != st.transitions.rend(); ++it) {
                if (it->operator_note) continue;
                if (it->turn_index >= e.turn_index) corrupt(e, "two transitions in one turn");
                break;
            }
            st.transitions.push_back(TransitionRecord{from, sig, to, e.turn_index, std::nullopt});
            st.stage = to;
            break;
        }
        case EventKind::StageOverride: {
            const Stage from = stage_field(e, p, "from");
            const Stage to = stage_field(e, p, "to");
            if (from != st.stage) corrupt(e, "override from a stage the session is not in");
            st.transitions.push_back(
                TransitionRecord{from, TransitionSignal{}, to, e.turn_index,
                                 p.at("operator_note").get<std::string>()});
            st.stage = to;
            break;
        }
        case EventKind::Extraction: {
            add_unique(st.emotional_keywords, p.value("keywords", json::array()));
            add_unique(st.semantic_foci, p.value("foci", json::array()));
            for (const auto& v : p.value("stressors", json::array())) {
                const auto label = text::to_lower(text::trim(v.get<std::string>()));
                if (label.empty()) continue;
                const bool known = std::any_of(st.stressors.begin(), st.stressors.end(),
                                               [&](const Stressor& s) { return s.label == label; });
                if (!known) st.stressors.push_back(Stressor{label, e.turn_index, false});
            }
            for (const auto& v : p.value("resources", json::array())) {
                auto r = resource_from_json(v);
                auto it = std::find_if(st.resources.begin(), st.resources.end(),
                                       [&](const Resource& x) { return x.tag == r.tag; });
                if (it == st.resources.end()) {
                    st.resources.push_back(std::move(r));
                } else {
                    *it = std::move(r);
                }
            }
            break;
        }
        case EventKind::PlanProposed: {
            auto plan = action_plan_from_json(p);
            for (std::size_t i = 0; i < plan.steps.size(); ++i) {
                if (plan.steps[i].index != static_cast<int>(i) + 1) {
                    corrupt(e, "plan step indices must run 1..n");
                }
            }
            plan.proposed_turn = e.turn_index;
            st.plans.push_back(std::move(plan));
            break;
        }
        case EventKind::StepStatus: {
            if (st.plans.empty()) corrupt(e, "step status without a plan");
            const auto plan_index = p.value("plan", st.plans.size() - 1);
            if (plan_index >= st.plans.size()) corrupt(e, "unknown plan");
            auto& steps = st.plans[plan_index].steps;
            const int step = p.at("step").get<int>();
            if (step < 1 || step > static_cast<int>(steps.size())) corrupt(e, "unknown step");
            const auto status = parse_step_status(p.at("status").get<std::string>());
            if (!status) corrupt(e, "bad step status");
            auto& s = steps[step - 1];
            if (s.status_turn == e.turn_index) corrupt(e, "second status change in one turn");
            s.status = *status;
            s.status_turn = e.turn_index;
            break;
        }
        case EventKind::CrisisFlag:
            if (p.at("value").get<bool>() != (st.stage == Stage::Crisis)) {
                corrupt(e, "crisis flag disagrees with stage");
            }
            break;
        case EventKind::Closure:
            st.closure_reason = p.at("reason").get<std::string>();
            break;
    }
    st.crisis_flag = st.stage == Stage::Crisis;
}

}  // namespace

// ------------------------------------------------------------------ names

std::string_view to_string(StepStatus status) noexcept {
    switch (status) {
        case StepStatus::Proposed: return "proposed";
        case StepStatus::Accepted: return "accepted";
        case StepStatus::Rejected: return "rejected";
        case StepStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

std::optional<StepStatus> parse_step_status(std::string_view text) noexcept {
    for (auto s : {StepStatus::Proposed, StepStatus::Accepted, StepStatus::Rejected,
                   StepStatus::Infeasible}) {
        if (text == to_string(s)) return s;
    }
    return std::nullopt;
}

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::UserMsg: return "user_msg";
        case EventKind::AgentMsg: return "agent_msg";
        case EventKind::Signal: return "signal";
        case EventKind::Transition: return "transition";
        case EventKind::StageOverride: return "stage_override";
        case EventKind::Extraction: return "extraction";
        case EventKind::PlanProposed: return "plan_proposed";
        case EventKind::StepStatus: return "step_status";
        case EventKind::CrisisFlag: return "crisis_flag";
        case EventKind::Closure: return "closure";
    }
    return "unknown";
}

std::optional<EventKind> parse_event_kind(std::string_view text) noexcept {
    for (auto k : {EventKind::UserMsg, EventKind::AgentMsg, EventKind::Signal,
                   EventKind::Transition, EventKind::StageOverride, EventKind::Extraction,
                   EventKind::PlanProposed, EventKind::StepStatus, EventKind::CrisisFlag,
                   EventKind::Closure}) {
        if (text == to_string(k)) return k;
    }
    return std::nullopt;
}

// ------------------------------------------------------------------ clocks

Clock system_clock() {
    return [] { return std::chrono::system_clock::now(); };
}

Clock logical_clock(std::chrono::system_clock::time_point origin) {
    auto counter = std::make_shared<std::atomic<long long>>(0);
    return [origin, counter] { return origin + std::chrono::seconds((*counter)++); };
}

std::string rfc3339(std::chrono::system_clock::time_point tp) {
    const auto secs = std::chrono::time_point_cast<std::chrono::seconds>(tp);
    const auto millis =
        std::chrono::duration_cast<std::chrono::milliseconds>(tp - secs).count();
    const std::time_t t = std::chrono::system_clock::to_time_t(secs);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
    return out;
}

// ---------------------------------------------------------------- reducer

std::string generate_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id = "s-";
    for (int i = 0; i < 16; ++i) id.push_back(kHex[rng() & 0xF]);
    return id;
}

SessionState create_session(const SessionConfig& config) {
    SessionState st;
    st.session_id = config.session_id.value_or(generate_session_id());
    return st;
}

SessionState apply_event(SessionState state, const SessionEvent& event) {
    apply_event_in_place(state, event);
    return state;
}

void apply_event_in_place(SessionState& state, const SessionEvent& event) {
    if (state.session_id.empty()) state.session_id = event.session_id;
    if (event.session_id != state.session_id) {
        corrupt(event, "event belongs to session " + event.session_id);
    }
    if (event.turn_index < state.turn_index) corrupt(event, "out-of-order turn index");
    // Keep the input untouched if the payload turns out to be malformed.
    SessionState next = state;
    try {
        reduce(next, event);
    } catch (const json::exception& ex) {
        corrupt(event, std::string("malformed payload: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        corrupt(event, std::string("malformed payload: ") + ex.what());
    }
    next.turn_index = event.turn_index;
    state = std::move(next);
}

SessionState replay(std::span<const SessionEvent> events) {
    SessionState st;
    for (const auto& e : events) apply_event_in_place(st, e);
    return st;
}

// ---------------------------------------------------------- serialization

json to_json(const TransitionSignal& s) {
    return json{{"signal", to_string(s.kind)},
                {"confidence", s.confidence},
                {"evidence", s.evidence},
                {"span", {s.span.start, s.span.end}}};
}

TransitionSignal signal_from_json(const json& j) {
    TransitionSignal s;
    const auto kind = parse_signal(j.at("signal").get<std::string>());
    if (!kind) throw std::invalid_argument("unknown signal " + j.at("signal").dump());
    s.kind = *kind;
    s.confidence = j.value("confidence", 0.0);
    s.evidence = j.value("evidence", std::string());
    if (j.contains("span")) {
        s.span = Span{j.at("span").at(0).get<std::size_t>(), j.at("span").at(1).get<std::size_t>()};
    }
    return s;
}

json to_json(const Resource& r) {
    json j{{"tag", r.tag}};
    j["capacity_minutes_per_day"] =
        r.capacity_minutes_per_day ? json(*r.capacity_minutes_per_day) : json(nullptr);
    return j;
}

Resource resource_from_json(const json& j) {
    Resource r;
    r.tag = j.at("tag").get<std::string>();
    if (r.tag.empty()) throw std::invalid_argument("resource tag must be non-empty");
    if (j.contains("capacity_minutes_per_day") && !j.at("capacity_minutes_per_day").is_null()) {
        r.capacity_minutes_per_day = j.at("capacity_minutes_per_day").get<int>();
    }
    return r;
}

json to_json(const PlanStep& s) {
    return json{{"index", s.index},
                {"description", s.description},
                {"schedule_hint", s.schedule_hint},
                {"required_tags", s.required_tags},
                {"required_minutes_per_day", s.required_minutes_per_day},
                {"status", to_string(s.status)},
                {"status_turn", s.status_turn}};
}

PlanStep plan_step_from_json(const json& j) {
    PlanStep s;
    s.index = j.at("index").get<int>();
    s.description = j.at("description").get<std::string>();
    s.schedule_hint = j.value("schedule_hint", std::string());
    s.required_tags = j.value("required_tags", std::set<std::string>{});
    s.required_minutes_per_day = j.value("required_minutes_per_day", 0);
    const auto st = parse_step_status(j.value("status", std::string("proposed")));
    if (!st) throw std::invalid_argument("bad step status");
    s.status = *st;
    s.status_turn = j.value("status_turn", -1);
    return s;
}

json to_json(const ActionPlan& p) {
    json steps = json::array();
    for (const auto& s : p.steps) steps.push_back(to_json(s));
    return json{{"steps", steps}, {"proposed_turn", p.proposed_turn}, {"stage", to_string(p.stage)}};
}

ActionPlan action_plan_from_json(const json& j) {
    ActionPlan p;
    for (const auto& s : j.at("steps")) p.steps.push_back(plan_step_from_json(s));
    p.proposed_turn = j.value("proposed_turn", 0);
    const auto st = parse_stage(j.value("stage", std::string("action")));
    if (!st) throw std::invalid_argument("bad plan stage");
    p.stage = *st;
    return p;
}

json to_json(const SessionState& st) {
    json j;
    j["session_id"] = st.session_id;
    j["stage"] = to_string(st.stage);
    j["turn_index"] = st.turn_index;
    j["emotional_keywords"] = st.emotional_keywords;
    j["semantic_foci"] = st.semantic_foci;
    j["stressors"] = json::array();
    for (const auto& s : st.stressors) {
        j["stressors"].push_back(json{{"label", s.label},
                                      {"first_mentioned_turn", s.first_mentioned_turn},
                                      {"surfaced", s.surfaced}});
    }
    j["resources"] = json::array();
    for (const auto& r : st.resources) j["resources"].push_back(to_json(r));
    j["plans"] = json::array();
    for (const auto& p : st.plans) j["plans"].push_back(to_json(p));
    j["avoidance_counter"] = st.avoidance_counter;
    j["transitions"] = json::array();
    for (const auto& t : st.transitions) {
        json r{{"from", to_string(t.from)},
               {"to", to_string(t.to)},
               {"turn_index", t.turn_index},
               {"signal", to_json(t.signal)}};
        if (t.operator_note) r["operator_note"] = *t.operator_note;
        j["transitions"].push_back(std::move(r));
    }
    j["crisis_flag"] = st.crisis_flag;
    j["messages"] = json::array();
    for (const auto& m : st.messages) {
        j["messages"].push_back(json{{"turn", m.turn}, {"role", m.role}, {"text", m.text}});
    }
    j["closure_reason"] = st.closure_reason ? json(*st.closure_reason) : json(nullptr);
    return j;
}

json to_record(const SessionEvent& e) {
    return json{{"v", 1},
                {"sid", e.session_id},
                {"turn", e.turn_index},
                {"kind", to_string(e.kind)},
                {"ts", e.timestamp},
                {"payload", e.payload}};
}

SessionEvent event_from_record(const json& r) {
    if (r.value("v", 0) != 1) throw CorruptedLog("unsupported event record version");
    SessionEvent e;
    try {
        e.session_id = r.at("sid").get<std::string>();
        e.turn_index = r.at("turn").get<int>();
        const auto kind = parse_event_kind(r.at("kind").get<std::string>());
        if (!kind) throw CorruptedLog("unknown event kind " + r.at("kind").dump());
        e.kind = *kind;
        e.timestamp = r.at("ts").get<std::string>();
        e.payload = r.at("payload");
    } catch (const json::exception& ex) {
        throw CorruptedLog(std::string("malformed event record: ") + ex.what());
    }
    return e;
}

// ---------------------------------------------------------------- payloads

namespace events {

json user_message(std::string_view text) { return json{{"text", text}}; }

json agent_message(std::string_view text, Stage stage,
                   const std::optional<std::string>& reasoning_chain,
                   const std::vector<std::string>& suppressed) {
    json j{{"text", text}, {"stage", to_string(stage)}, {"suppressed", suppressed}};
    j["reasoning_chain"] = reasoning_chain ? json(*reasoning_chain) : json(nullptr);
    return j;
}

json signal(std::span<const TransitionSignal> candidates, const TransitionSignal& chosen,
            bool avoidance_cue) {
    json c = json::array();
    for (const auto& s : candidates) c.push_back(to_json(s));
    return json{{"candidates", c}, {"chosen", to_json(chosen)}, {"avoidance_cue", avoidance_cue}};
}

json transition(Stage from, const TransitionSignal& signal, Stage to) {
    return json{{"from", to_string(from)}, {"signal", to_json(signal)}, {"to", to_string(to)}};
}

json stage_override(Stage from, Stage to, std::string_view note) {
    return json{{"from", to_string(from)}, {"to", to_string(to)}, {"operator_note", note}};
}

json extraction(const Extraction& x) {
    json r = json::array();
    for (const auto& res : x.resources) r.push_back(to_json(res));
    return json{{"keywords", x.keywords},
                {"foci", x.foci},
                {"stressors", x.stressors},
                {"resources", r}};
}

json plan_proposed(const ActionPlan& plan) { return to_json(plan); }

json step_status(std::size_t plan_index, int step, StepStatus status) {
    return json{{"plan", plan_index}, {"step", step}, {"status", to_string(status)}};
}

json crisis_flag(bool value) { return json{{"value", value}}; }

json closure(std::string_view reason) { return json{{"reason", reason}}; }

}  // namespace events

// ------------------------------------------------------------ feasibility

Feasibility check_feasibility(const PlanStep& step, std::span<const Resource> resources) {
    std::optional<int> min_capacity;
    for (const auto& tag : step.required_tags) {
        auto it = std::find_if(resources.begin(), resources.end(),
                               [&](const Resource& r) { return r.tag == tag; });
        if (it == resources.end()) return Feasibility{false, tag};
        if (it->capacity_minutes_per_day) {
            min_capacity = std::min(min_capacity.value_or(*it->capacity_minutes_per_day),
                                    *it->capacity_minutes_per_day);
        }
    }
    if (min_capacity && step.required_minutes_per_day > *min_capacity) {
        return Feasibility{false, "minutes_per_day: " +
                                      std::to_string(step.required_minutes_per_day) +
                                      " exceeds " + std::to_string(*min_capacity)};
    }
    return Feasibility{true, {}};
}

}  // namespace stagewise
