#pragma once
// Offline evaluation: rule-driven simulated users (personas), a dialogue
// runner over the orchestrator, transcript metrics and flag ablations.
//
// Metric definitions, all computed from a session event log:
//   exposure_completeness   hidden stressors both revealed in a user turn and
//                           mentioned in a later-or-same agent turn, over all
//                           hidden stressors
//   restructuring_success   an Insight-stage agent reply links the root cause
//                           in a causal chain or a metaphor sentence, and a
//                           later user turn carries an acknowledgment cue
//   adoption_rate           steps whose last status is accepted, over all
//                           proposed steps (0 with no_plan when none)
//   premature / ineffective suggestion sentences sent in Exploration or
//                           Insight / matching a generic phrase, over all
//                           suggestion sentences (0 with no_suggestions)
//   root_cause_identified   some reasoning chain mentions the root cause

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagewise/gateway.hpp"
#include "stagewise/lexicon.hpp"
#include "stagewise/orchestrator.hpp"
#include "stagewise/prompt.hpp"
#include "stagewise/session.hpp"

namespace stagewise::eval {

struct EvalLexicon {
    std::vector<std::string> acknowledgment;
    std::vector<std::string> metaphor_markers;

    // {"version", "acknowledgment": [...], "metaphor_markers": [...]}
    static EvalLexicon from_json(const nlohmann::json& j);
    static EvalLexicon load(const std::filesystem::path& path);
};

// True when `text` ties `root_cause` into a causal chain (>= 2 nodes) or a
// sentence with a metaphor marker.
bool restructures(std::string_view text, std::string_view root_cause, const EvalLexicon& lexicon);
bool acknowledges(std::string_view text, const EvalLexicon& lexicon);

// ----------------------------------------------------------------- persona

struct HiddenStressor {
    std::string label;
    std::vector<std::string> reveal_patterns;  // topics that draw it out
    std::string reveal_line;                   // what the persona says
};

struct PersonaLines {
    std::string deflection;
    std::string resistance;
    std::string acceptance = "Okay, I will try {steps}.";  // {steps}: "step 1 and step 2"
    std::string acknowledgment;
    std::string closing;
    std::vector<std::string> fillers;  // used in order, cycling
};

struct Persona {
    std::string persona_id;
    std::string opening_line;
    std::vector<HiddenStressor> hidden_stressors;
    std::string root_cause;
    std::set<int> avoidance_turns;
    PersonaLines lines;
    std::vector<Resource> resources;
    std::optional<int> turn_cap;
    std::filesystem::path script;  // scripted backend; empty when none

    static Persona from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static Persona load(const std::filesystem::path& path);
};

// Throws ConfigError on a persona that breaks its invariants.
void validate(const Persona& persona);

// Every *.json persona in `dir`, ordered by file name.
std::vector<Persona> load_personas(const std::filesystem::path& dir);

struct PersonaState {
    int turn = 1;  // turn index of the next utterance
    bool belief_flag = false;
    bool belief_just_flipped = false;
    std::size_t revealed = 0;  // hidden stressors revealed so far, in order
    bool accepted_any = false;
    std::size_t filler_index = 0;
};

// What the persona sees of the agent's last turn.
struct AgentView {
    std::string reply;
    Stage stage = Stage::Exploration;
    std::vector<std::string> suggestions;
    std::optional<PlanVerdict> plan;
};

AgentView view_of(const TurnResult& result);

enum class PersonaRule { Opening, Deflection, Acceptance, Resistance, Acknowledgment, Reveal, Closing, Filler };
std::string_view to_string(PersonaRule rule) noexcept;

struct PersonaTurn {
    std::string utterance;
    std::vector<StepUpdate> step_updates;
    PersonaRule rule = PersonaRule::Filler;
};

// The persona's opening turn.
PersonaTurn opening_turn(const Persona& persona, PersonaState& state);

// Rule cascade, first match wins: deflection on an avoidance turn;
// acceptance of a proposed plan (feasible steps proposed in Action are
// accepted, the rest rejected); resistance to advice while the belief flag
// is false; acknowledgment right after the belief flips; reveal of the next
// hidden stressor when the agent asks about it; closing once a plan has
// been accepted; filler. The belief flag flips when an Insight-stage reply
// restructures around the root cause.
PersonaTurn simulate_turn(const Persona& persona, PersonaState& state, const AgentView& agent,
                          const EvalLexicon& lexicon);

// ---------------------------------------------------------------- dialogue

struct DialogueRun {
    std::string persona_id;
    std::vector<SessionEvent> transcript;
    Stage final_stage = Stage::Exploration;
    int turns = 0;
    bool truncated = false;  // stopped by the turn cap
    std::string end_reason;  // closure_signal | turn_cap | crisis_unresolved | operator
    std::vector<PersonaRule> rules;  // rule behind each user turn
};

inline constexpr int kDefaultTurnCap = 30;

// Alternates persona and orchestrator turns until the session closes or
// the turn cap (persona value, else `default_turn_cap`) is reached. The
// session id is the persona id; timestamps come from a logical clock.
DialogueRun run_dialogue(const Persona& persona, const CueLexicon& lexicon,
                         const PromptEngine& prompts, ChatBackend& backend,
                         ChatBackend* classifier, const OrchestratorOptions& options,
                         const EvalLexicon& eval_lexicon, int default_turn_cap = kDefaultTurnCap);

// ----------------------------------------------------------------- metrics

struct ExposureResult {
    double value = 0.0;
    int revealed = 0;
    int surfaced = 0;  // revealed and acknowledged by the agent
    int hidden = 0;
};

struct AdoptionResult {
    double value = 0.0;
    int proposed = 0;
    int accepted = 0;
    bool no_plan = true;
};

struct SuggestionRates {
    double premature = 0.0;
    double ineffective = 0.0;
    int total = 0;
    int premature_count = 0;
    int generic_count = 0;
    bool no_suggestions = true;
};

ExposureResult exposure_completeness(std::span<const SessionEvent> transcript, const Persona& persona);
bool restructuring_success(std::span<const SessionEvent> transcript, const Persona& persona,
                           const EvalLexicon& lexicon);
AdoptionResult adoption_rate(std::span<const SessionEvent> transcript);
SuggestionRates suggestion_rates(std::span<const SessionEvent> transcript,
                                 const SuggestionLexicon& suggestions);
bool root_cause_identified(std::span<const SessionEvent> transcript, const Persona& persona);

struct DialogueMetrics {
    std::string persona_id;
    ExposureResult exposure;
    bool restructuring_success = false;
    AdoptionResult adoption;
    SuggestionRates suggestions;
    bool root_cause_identified = false;
    Stage final_stage = Stage::Exploration;
    int turns = 0;
    bool truncated = false;
};

DialogueMetrics evaluate(const DialogueRun& run, const Persona& persona, const EvalLexicon& lexicon,
                         const SuggestionLexicon& suggestions);

// Arithmetic means over dialogues; booleans count as 0/1.
struct AggregateMetrics {
    double exposure_completeness = 0.0;
    double restructuring_success = 0.0;
    double adoption_rate = 0.0;
    double premature_suggestion_rate = 0.0;
    double ineffective_suggestion_rate = 0.0;
    double root_cause_identified = 0.0;
    int dialogues = 0;

    friend bool operator==(const AggregateMetrics&, const AggregateMetrics&) = default;
};

AggregateMetrics aggregate(std::span<const DialogueMetrics> dialogues);
AggregateMetrics difference(const AggregateMetrics& arm, const AggregateMetrics& baseline);

struct MetricsReport {
    std::vector<DialogueMetrics> dialogues;
    AggregateMetrics aggregate;
};

nlohmann::json to_json(const DialogueMetrics& m);
nlohmann::json to_json(const AggregateMetrics& m);
nlohmann::json to_json(const MetricsReport& r);
std::string format_table(const MetricsReport& r);

// ---------------------------------------------------------------- ablation

struct EvalContext {
    const CueLexicon& lexicon;
    const PromptEngine& prompts;
    const EvalLexicon& eval_lexicon;
    OrchestratorOptions options;
    // Used for every persona when set; otherwise each persona's script.
    ChatBackend* backend = nullptr;
    ChatBackend* classifier = nullptr;
    int default_turn_cap = kDefaultTurnCap;
};

struct ArmFlags {
    std::string name;
    bool stage_info = true;
    bool thinking = true;
};

std::vector<ArmFlags> ablation_arms(bool stage, bool thinking);

// Runs every persona with the context's options under `flags`.
MetricsReport run_eval(std::span<const Persona> personas, const EvalContext& context,
                       const AgentFlags& flags, std::vector<DialogueRun>* runs = nullptr);

struct ArmReport {
    ArmFlags flags;
    MetricsReport report;
    AggregateMetrics delta;                 // arm minus baseline
    std::vector<AggregateMetrics> paired;   // per persona, arm minus baseline
};

struct AblationReport {
    std::vector<ArmReport> arms;  // arms[0] is the baseline
    bool comparable = true;       // same personas, in order, in every arm
};

AblationReport run_ablation(std::span<const Persona> personas, std::span<const ArmFlags> arms,
                            const EvalContext& context);

nlohmann::json to_json(const AblationReport& r);
std::string format_table(const AblationReport& r);

}  // namespace stagewise::eval
