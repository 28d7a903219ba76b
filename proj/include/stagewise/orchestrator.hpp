#pragma once
// The turn pipeline. For each user message, in this order:
//   1. append user_msg (and any step status updates the user gave)
//   2. detect candidate signals        3. resolve one signal
//   4. append signal + transition      5. Crisis: fixed referral, no model call
//                                         Closed: fixed closing line, no model call
//   6. build the prompt for the new stage
//   7. call the backend                8. parse   9. gate
//  10. extract a plan and check each step's feasibility
//  11. append extraction, agent_msg, plan_proposed
//  12. return the TurnResult
// The transition is recorded before the model call, so a backend failure
// leaves the session in its post-transition stage with no agent reply.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include "stagewise/detector.hpp"
#include "stagewise/event_store.hpp"
#include "stagewise/gateway.hpp"
#include "stagewise/lexicon.hpp"
#include "stagewise/prompt.hpp"
#include "stagewise/session.hpp"

namespace stagewise {

struct AgentFlags {
    bool gating = true;
    bool thinking = true;
    bool stage_info = true;  // off: no markers, no gating

    friend bool operator==(const AgentFlags&, const AgentFlags&) = default;
};

struct OrchestratorOptions {
    DetectorConfig detector;
    AgentFlags flags;
    int history_window = 6;
    CompletionParams params;
    std::string crisis_referral_text;
    std::string closing_text;
    std::vector<Resource> default_resources;
};

struct StepUpdate {
    int step = 1;
    StepStatus status = StepStatus::Accepted;
};

struct PlanVerdict {
    ActionPlan plan;
    std::vector<Feasibility> feasibility;  // one per step
};

struct TurnResult {
    std::string session_id;
    int turn_index = 0;
    std::string reply;
    Stage stage_before = Stage::Exploration;
    Stage stage_after = Stage::Exploration;
    TransitionSignal signal;
    std::optional<std::string> reasoning_chain;
    std::vector<std::string> suggestions;  // suggestion sentences left in the reply
    std::vector<std::string> suppressed;
    std::optional<PlanVerdict> plan;
    std::set<std::string> degraded_flags;
    std::size_t backend_calls = 0;  // made by this turn
};

nlohmann::json to_json(const TurnResult& result);

class Orchestrator {
public:
    // Components are borrowed and must outlive the orchestrator.
    // `classifier` may be null in rules mode.
    Orchestrator(const CueLexicon& lexicon, const PromptEngine& prompts, ChatBackend& backend,
                 ChatBackend* classifier, EventStore& store, OrchestratorOptions options,
                 Clock clock = system_clock());

    // Default resources apply when `config.resources` is empty.
    SessionState create_session(SessionConfig config = {});

    // Throws NotFound, SessionClosed, SessionBusy (another turn in flight),
    // BackendUnavailable / ScriptExhausted from the backend.
    TurnResult handle_message(const std::string& session_id, const std::string& text,
                              const std::vector<StepUpdate>& step_updates = {});

    // Operator override; recorded as its own event kind and exempt from
    // the transition table.
    SessionState override_stage(const std::string& session_id, Stage to,
                                const std::string& operator_note);

    // Appends a closure event (reason e.g. "turn_cap") without changing stage.
    void end_session(const std::string& session_id, const std::string& reason);

    SessionState state(const std::string& session_id);
    std::vector<SessionEvent> transcript(const std::string& session_id);

    const OrchestratorOptions& options() const noexcept { return options_; }

private:
    struct Slot {
        std::mutex turn_mu;          // held for a whole turn
        mutable std::mutex data_mu;  // guards state and log
        SessionState state;
        std::vector<SessionEvent> log;
    };

    std::shared_ptr<Slot> slot(const std::string& session_id);
    void append(Slot& s, EventKind kind, int turn, nlohmann::json payload);

    const CueLexicon& lexicon_;
    const PromptEngine& prompts_;
    ChatBackend& backend_;
    EventStore& store_;
    OrchestratorOptions options_;
    Clock clock_;
    SignalDetector detector_;

    std::shared_mutex table_mu_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
};

}  // namespace stagewise
