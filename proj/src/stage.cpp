#include "stagewise/stage.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>
#include <tuple>

namespace stagewise {

namespace {

bool is_working_stage(Stage s) noexcept {
    return s == Stage::Exploration || s == Stage::Insight || s == Stage::Action;
}

// Lower tuple sorts first: priority class, then higher confidence, then
// earlier span. Evidence text closes the order so the winner does not
// depend on candidate order.
auto ordering_key(const TransitionSignal& s) {
    return std::make_tuple(priority_rank(s.kind), -s.confidence, s.span.start, s.span.end,
                           std::string_view(s.evidence));
}

}  // namespace

TransitionSignal make_signal(SignalKind kind, double confidence, std::string evidence, Span span) {
    if (!(confidence >= 0.0 && confidence <= 1.0)) {
        throw std::invalid_argument("signal confidence outside [0,1]");
    }
    if (evidence.empty() && kind != SignalKind::Continue) {
        throw std::invalid_argument("signal " + std::string(to_string(kind)) +
                                    " requires evidence");
    }
    return TransitionSignal{kind, confidence, std::move(evidence), span};
}

Stage next_stage(Stage from, SignalKind signal) noexcept {
    if (from == Stage::Closed) return Stage::Closed;
    switch (signal) {
        case SignalKind::ReadyForInsight:
            return from == Stage::Exploration ? Stage::Insight : from;
        case SignalKind::ReadyForAction:
            return from == Stage::Insight ? Stage::Action : from;
        case SignalKind::AvoidanceDetected:
        case SignalKind::NewTopic:
            return is_working_stage(from) ? Stage::Exploration : from;
        case SignalKind::ResistanceToAdvice:
            return from == Stage::Action ? Stage::Insight : from;
        case SignalKind::CrisisTrigger:
            return is_working_stage(from) ? Stage::Crisis : from;
        case SignalKind::CrisisResolved:
            return from == Stage::Crisis ? Stage::Exploration : from;
        case SignalKind::Continue:
            return from;
        case SignalKind::ClosureSignal:
            return is_working_stage(from) ? Stage::Closed : from;
    }
    return from;
}

bool applicable(Stage stage, SignalKind signal) noexcept {
    if (stage == Stage::Closed) return false;
    switch (signal) {
        case SignalKind::ReadyForInsight: return stage == Stage::Exploration;
        case SignalKind::ReadyForAction: return stage == Stage::Insight;
        case SignalKind::ResistanceToAdvice: return stage == Stage::Action;
        case SignalKind::CrisisResolved: return stage == Stage::Crisis;
        case SignalKind::AvoidanceDetected:
        case SignalKind::CrisisTrigger:
        case SignalKind::NewTopic:
        case SignalKind::ClosureSignal: return is_working_stage(stage);
        case SignalKind::Continue: return true;
    }
    return false;
}

int priority_rank(SignalKind signal) noexcept {
    switch (signal) {
        case SignalKind::CrisisTrigger: return 0;
        case SignalKind::CrisisResolved: return 1;
        case SignalKind::ClosureSignal: return 2;
        case SignalKind::ResistanceToAdvice: return 3;
        case SignalKind::AvoidanceDetected: return 4;
        case SignalKind::NewTopic: return 5;
        case SignalKind::ReadyForAction: return 6;
        case SignalKind::ReadyForInsight: return 7;
        case SignalKind::Continue: return 8;
    }
    return 9;
}

TransitionSignal resolve(Stage stage, std::span<const TransitionSignal> candidates) {
    if (candidates.empty()) {
        throw std::invalid_argument("resolve: empty candidate set");
    }
    const TransitionSignal* best = nullptr;
    for (const auto& c : candidates) {
        if (!applicable(stage, c.kind)) continue;
        if (best == nullptr || ordering_key(c) < ordering_key(*best)) best = &c;
    }
    if (best == nullptr) return TransitionSignal{SignalKind::Continue, 0.0, {}, {}};
    return *best;
}

std::string_view to_string(Stage stage) noexcept {
    switch (stage) {
        case Stage::Exploration: return "exploration";
        case Stage::Insight: return "insight";
        case Stage::Action: return "action";
        case Stage::Crisis: return "crisis";
        case Stage::Closed: return "closed";
    }
    return "unknown";
}

std::string_view to_string(SignalKind signal) noexcept {
    switch (signal) {
        case SignalKind::ReadyForInsight: return "ready_for_insight";
        case SignalKind::ReadyForAction: return "ready_for_action";
        case SignalKind::AvoidanceDetected: return "avoidance_detected";
        case SignalKind::ResistanceToAdvice: return "resistance_to_advice";
        case SignalKind::CrisisTrigger: return "crisis_trigger";
        case SignalKind::CrisisResolved: return "crisis_resolved";
        case SignalKind::NewTopic: return "new_topic";
        case SignalKind::Continue: return "continue";
        case SignalKind::ClosureSignal: return "closure_signal";
    }
    return "unknown";
}

std::string_view stage_marker(Stage stage) noexcept {
    switch (stage) {
        case Stage::Exploration: return "<Exploration>";
        case Stage::Insight: return "<Insight>";
        case Stage::Action: return "<Action>";
        case Stage::Crisis: return "<Crisis>";
        case Stage::Closed: return "";
    }
    return "";
}

std::string_view display_name(Stage stage) noexcept {
    switch (stage) {
        case Stage::Exploration: return "Exploration";
        case Stage::Insight: return "Insight";
        case Stage::Action: return "Action";
        case Stage::Crisis: return "Crisis";
        case Stage::Closed: return "Closed";
    }
    return "Unknown";
}

std::optional<Stage> parse_stage(std::string_view text) noexcept {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (Stage s : kAllStages) {
        if (lower == to_string(s)) return s;
    }
    return std::nullopt;
}

std::optional<SignalKind> parse_signal(std::string_view text) noexcept {
    for (SignalKind s : kAllSignals) {
        if (text == to_string(s)) return s;
    }
    return std::nullopt;
}

}  // namespace stagewise
