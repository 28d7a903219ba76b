#pragma once
// Dialogue stage machine: the five stages, the nine transition signals,
// the total transition table, applicability rules and the resolver that
// arbitrates between candidate signals.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace stagewise {

enum class Stage { Exploration, Insight, Action, Crisis, Closed };

inline constexpr std::array<Stage, 5> kAllStages = {
    Stage::Exploration, Stage::Insight, Stage::Action, Stage::Crisis, Stage::Closed};

enum class SignalKind {
    ReadyForInsight = 1,     // S1
    ReadyForAction = 2,      // S2
    AvoidanceDetected = 3,   // S3
    ResistanceToAdvice = 4,  // S4
    CrisisTrigger = 5,       // S5
    CrisisResolved = 6,      // S6
    NewTopic = 7,            // S7
    Continue = 8,            // S8
    ClosureSignal = 9,       // S9
};

inline constexpr std::array<SignalKind, 9> kAllSignals = {
    SignalKind::ReadyForInsight,   SignalKind::ReadyForAction, SignalKind::AvoidanceDetected,
    SignalKind::ResistanceToAdvice, SignalKind::CrisisTrigger, SignalKind::CrisisResolved,
    SignalKind::NewTopic,          SignalKind::Continue,       SignalKind::ClosureSignal};

// Byte offsets into the utterance the evidence was taken from.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;

    friend bool operator==(const Span&, const Span&) = default;
};

struct TransitionSignal {
    SignalKind kind = SignalKind::Continue;
    double confidence = 0.0;  // [0,1]
    std::string evidence;     // empty only for Continue
    Span span;

    friend bool operator==(const TransitionSignal&, const TransitionSignal&) = default;
};

// Validates the confidence range and the evidence rule; throws
// std::invalid_argument on violation.
TransitionSignal make_signal(SignalKind kind, double confidence, std::string evidence = {},
                             Span span = {});

struct TransitionRecord {
    Stage from = Stage::Exploration;
    TransitionSignal signal;
    Stage to = Stage::Exploration;
    int turn_index = 0;
    // Present for operator stage overrides, which bypass the table.
    std::optional<std::string> operator_note;

    friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

Stage next_stage(Stage from, SignalKind signal) noexcept;
bool applicable(Stage stage, SignalKind signal) noexcept;

// Position in the fixed arbitration order, 0 = highest
// (S5, S6, S9, S4, S3, S7, S2, S1, S8).
int priority_rank(SignalKind signal) noexcept;

// Picks one signal from a non-empty candidate set. Inapplicable candidates
// are discarded; among the rest the highest priority class wins, then the
// higher confidence, then the earlier evidence span. Falls back to a
// zero-confidence Continue when nothing applies. Throws
// std::invalid_argument on an empty candidate set.
TransitionSignal resolve(Stage stage, std::span<const TransitionSignal> candidates);

std::string_view to_string(Stage stage) noexcept;
std::string_view to_string(SignalKind signal) noexcept;
// Marker token used in prompts, e.g. "<Exploration>". Closed has none.
std::string_view stage_marker(Stage stage) noexcept;
// Capitalized display name, e.g. "Exploration".
std::string_view display_name(Stage stage) noexcept;

std::optional<Stage> parse_stage(std::string_view text) noexcept;
std::optional<SignalKind> parse_signal(std::string_view text) noexcept;

}  // namespace stagewise
