#pragma once
// Event-sourced session repository. SessionState is never mutated
// directly by the pipeline: every change is a SessionEvent folded through
// apply_event, so a persisted log always replays to the live state.

#include <chrono>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagewise/stage.hpp"

namespace stagewise {

struct Stressor {
    std::string label;
    int first_mentioned_turn = 0;
    bool surfaced = false;  // acknowledged by an agent reply

    friend bool operator==(const Stressor&, const Stressor&) = default;
};

struct Resource {
    std::string tag;  // e.g. "time", "social_support"
    std::optional<int> capacity_minutes_per_day;  // nullopt: unbounded

    friend bool operator==(const Resource&, const Resource&) = default;
};

enum class StepStatus { Proposed, Accepted, Rejected, Infeasible };

std::string_view to_string(StepStatus status) noexcept;
std::optional<StepStatus> parse_step_status(std::string_view text) noexcept;

struct PlanStep {
    int index = 1;
    std::string description;
    std::string schedule_hint;
    std::set<std::string> required_tags;
    int required_minutes_per_day = 0;
    StepStatus status = StepStatus::Proposed;
    int status_turn = -1;  // turn of the last status change

    friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct ActionPlan {
    std::vector<PlanStep> steps;
    int proposed_turn = 0;
    Stage stage = Stage::Action;  // stage the plan was proposed in

    friend bool operator==(const ActionPlan&, const ActionPlan&) = default;
};

struct DialogueTurn {
    int turn = 0;
    std::string role;  // "user" | "assistant"
    std::string text;

    friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

struct SessionState {
    std::string session_id;
    Stage stage = Stage::Exploration;
    int turn_index = 0;
    std::set<std::string> emotional_keywords;
    std::set<std::string> semantic_foci;
    std::vector<Stressor> stressors;
    std::vector<Resource> resources;
    std::vector<ActionPlan> plans;
    int avoidance_counter = 0;
    std::vector<TransitionRecord> transitions;
    bool crisis_flag = false;
    std::vector<DialogueTurn> messages;
    std::optional<std::string> closure_reason;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

enum class EventKind {
    UserMsg,
    AgentMsg,
    Signal,
    Transition,
    StageOverride,
    Extraction,
    PlanProposed,
    StepStatus,
    CrisisFlag,
    Closure,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept;

struct SessionEvent {
    std::string session_id;
    int turn_index = 0;
    EventKind kind = EventKind::UserMsg;
    std::string timestamp;  // RFC3339, UTC
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

using Clock = std::function<std::chrono::system_clock::time_point()>;
Clock system_clock();
// Deterministic clock for replays: origin + n seconds on the n-th call.
Clock logical_clock(std::chrono::system_clock::time_point origin = {});
std::string rfc3339(std::chrono::system_clock::time_point tp);

struct SessionConfig {
    std::optional<std::string> session_id;  // generated when absent
    std::vector<Resource> resources;        // recorded as a turn-0 extraction
};

std::string generate_session_id();

// Fresh state: Exploration, turn 0, empty collections.
SessionState create_session(const SessionConfig& config = {});

// Pure reducer. Throws CorruptedLog for an out-of-order event, a foreign
// session id, or a payload inconsistent with the current state.
SessionState apply_event(SessionState state, const SessionEvent& event);
void apply_event_in_place(SessionState& state, const SessionEvent& event);

SessionState replay(std::span<const SessionEvent> events);

nlohmann::json to_json(const SessionState& state);
nlohmann::json to_json(const PlanStep& step);
nlohmann::json to_json(const ActionPlan& plan);
nlohmann::json to_json(const TransitionSignal& signal);
nlohmann::json to_json(const Resource& resource);
PlanStep plan_step_from_json(const nlohmann::json& j);
ActionPlan action_plan_from_json(const nlohmann::json& j);
TransitionSignal signal_from_json(const nlohmann::json& j);
Resource resource_from_json(const nlohmann::json& j);

// Wire form {v:1, sid, turn, kind, ts, payload}.
nlohmann::json to_record(const SessionEvent& event);
SessionEvent event_from_record(const nlohmann::json& record);

// Payload builders. The caller supplies session id, turn and timestamp.
namespace events {

struct Extraction {
    std::vector<std::string> keywords;
    std::vector<std::string> foci;
    std::vector<std::string> stressors;
    std::vector<Resource> resources;

    bool empty() const noexcept {
        return keywords.empty() && foci.empty() && stressors.empty() && resources.empty();
    }
};

nlohmann::json user_message(std::string_view text);
nlohmann::json agent_message(std::string_view text, Stage stage,
                             const std::optional<std::string>& reasoning_chain,
                             const std::vector<std::string>& suppressed);
nlohmann::json signal(std::span<const TransitionSignal> candidates,
                      const TransitionSignal& chosen, bool avoidance_cue);
nlohmann::json transition(Stage from, const TransitionSignal& signal, Stage to);
nlohmann::json stage_override(Stage from, Stage to, std::string_view note);
nlohmann::json extraction(const Extraction& extraction);
nlohmann::json plan_proposed(const ActionPlan& plan);
nlohmann::json step_status(std::size_t plan_index, int step, StepStatus status);
nlohmann::json crisis_flag(bool value);
nlohmann::json closure(std::string_view reason);

}  // namespace events

// ------------------------------------------------------------ feasibility

struct Feasibility {
    bool feasible = true;
    std::string reason;  // first failing requirement when infeasible

    friend bool operator==(const Feasibility&, const Feasibility&) = default;
};

// Feasible iff every required tag is held by some resource and the daily
// minutes fit within the smallest capacity among matched time-bearing
// resources.
Feasibility check_feasibility(const PlanStep& step, std::span<const Resource> resources);

}  // namespace stagewise
