#include "stagewise/detector.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "stagewise/errors.hpp"
#include "stagewise/logging.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

constexpr const char* kClassifierSystem =
    "You label the latest user message of a counseling dialogue with exactly one "
    "stage-transition signal.\n"
    "Signals:\n"
    "- ready_for_insight: the user starts asking why, or sees a recurring pattern\n"
    "- ready_for_action: the user wants to change and asks what to do\n"
    "- avoidance_detected: the user deflects from describing what troubles them\n"
    "- resistance_to_advice: the user rejects or objects to a suggestion\n"
    "- crisis_trigger: any risk of self-harm or harm to others\n"
    "- crisis_resolved: the user reports being safe after a crisis\n"
    "- new_topic: the user raises an unrelated new problem\n"
    "- continue: none of the above\n"
    "- closure_signal: the user wants to end the conversation\n"
    "Current stage: {stage}\n"
    "Reply with one line and nothing else: signal=<identifier> confidence=<number between 0 "
    "and 1>";

// Rule-path candidates: one per signal kind, confidence = heaviest hit,
// evidence = the heaviest (then earliest) hit's text.
std::map<SignalKind, TransitionSignal> rule_candidates(std::string_view utterance,
                                                       const std::vector<CueHit>& hits) {
    std::map<SignalKind, TransitionSignal> out;
    for (const auto& h : hits) {
        auto it = out.find(h.signal);
        if (it == out.end() || h.weight > it->second.confidence) {
            out[h.signal] = TransitionSignal{
                h.signal, h.weight,
                std::string(utterance.substr(h.span.start, h.span.end - h.span.start)), h.span};
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(DetectorMode mode) noexcept {
    switch (mode) {
        case DetectorMode::Rules: return "rules";
        case DetectorMode::Llm: return "llm";
        case DetectorMode::Hybrid: return "hybrid";
    }
    return "unknown";
}

std::optional<DetectorMode> parse_detector_mode(std::string_view text) noexcept {
    for (auto m : {DetectorMode::Rules, DetectorMode::Llm, DetectorMode::Hybrid}) {
        if (text == to_string(m)) return m;
    }
    return std::nullopt;
}

bool Detection::has(SignalKind kind) const {
    return std::any_of(candidates.begin(), candidates.end(),
                       [kind](const TransitionSignal& s) { return s.kind == kind; });
}

std::optional<TransitionSignal> parse_classifier_reply(std::string_view reply,
                                                       std::string_view evidence) {
    static const std::regex kLine(R"(^signal=([a-z_]+) confidence=([0-9]+(\.[0-9]+)?)$)");
    const auto line = text::trim(reply);
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) return std::nullopt;
    const auto kind = parse_signal(m[1].str());
    if (!kind) return std::nullopt;
    const double confidence = std::stod(m[2].str());
    if (confidence < 0.0 || confidence > 1.0) return std::nullopt;
    std::string ev = *kind == SignalKind::Continue ? std::string() : std::string(evidence);
    if (ev.empty() && *kind != SignalKind::Continue) return std::nullopt;
    return TransitionSignal{*kind, confidence, std::move(ev), Span{0, evidence.size()}};
}

std::vector<ChatMessage> classifier_messages(std::span<const DialogueTurn> context, Stage stage) {
    std::ostringstream convo;
    for (const auto& t : context) {
        convo << (t.role == "user" ? "User: " : "Counselor: ") << t.text << "\n";
    }
    return {ChatMessage{"system", text::replace_all(kClassifierSystem, "{stage}",
                                                    std::string(to_string(stage)))},
            ChatMessage{"user", convo.str()}};
}

Classification classify_llm(std::span<const DialogueTurn> context, Stage stage,
                            ChatBackend& backend, const DetectorConfig& config,
                            std::optional<int> turn_index) {
    if (context.empty()) throw std::invalid_argument("classify_llm: empty context");
    const TransitionSignal fallback{SignalKind::Continue, config.confidence_floor, {}, {}};
    std::string evidence;
    for (auto it = context.rbegin(); it != context.rend(); ++it) {
        if (it->role == "user") {
            evidence = it->text;
            break;
        }
    }
    CompletionRequest req{classifier_messages(context, stage), CompletionParams{0.0, 32},
                          turn_index};
    std::string reply;
    try {
        reply = backend.complete(req);
    } catch (const std::exception& ex) {
        logger()->warn("signal classifier unavailable, degrading to continue: {}", ex.what());
        return Classification{{fallback}, true, ex.what()};
    }
    auto parsed = parse_classifier_reply(reply, evidence);
    if (!parsed) return Classification{{fallback}, true, "unparseable classifier reply"};
    return Classification{{*parsed}, false, {}};
}

SignalDetector::SignalDetector(const CueLexicon& lexicon, DetectorConfig config,
                               ChatBackend* classifier)
    : lexicon_(lexicon), config_(config), classifier_(classifier) {
    if (config_.avoidance_threshold < 1) throw ConfigError("avoidance_threshold must be >= 1");
    if (config_.confidence_floor < 0.0 || config_.confidence_floor > 1.0) {
        throw ConfigError("confidence_floor outside [0,1]");
    }
    if (config_.context_window < 1) throw ConfigError("context_window must be >= 1");
    if (config_.mode != DetectorMode::Rules && classifier_ == nullptr) {
        throw ConfigError("detector mode " + std::string(to_string(config_.mode)) +
                          " needs a classifier backend");
    }
}

Detection SignalDetector::detect(const SessionState& state, std::string_view utterance,
                                 std::optional<int> turn_index) const {
    if (state.stage == Stage::Closed) throw std::invalid_argument("detect: session is closed");
    if (utterance.empty()) throw std::invalid_argument("detect: empty utterance");

    Detection d;
    const auto all_hits = detect_cues(utterance, lexicon_);
    std::map<SignalKind, TransitionSignal> found;

    if (config_.mode != DetectorMode::Llm) {
        d.hits = all_hits;
        found = rule_candidates(utterance, all_hits);
    } else {
        // Crisis patterns are scanned in every mode.
        for (const auto& h : all_hits) {
            if (h.signal == SignalKind::CrisisTrigger) d.hits.push_back(h);
        }
        found = rule_candidates(utterance, d.hits);
    }

    if (config_.mode != DetectorMode::Rules) {
        std::vector<DialogueTurn> context(state.messages.end() -
                                              std::min<std::ptrdiff_t>(config_.context_window,
                                                                       state.messages.size()),
                                          state.messages.end());
        if (context.empty() || context.back().role != "user" || context.back().text != utterance) {
            context.push_back(DialogueTurn{turn_index.value_or(state.turn_index + 1), "user",
                                           std::string(utterance)});
            if (static_cast<int>(context.size()) > config_.context_window) {
                context.erase(context.begin());
            }
        }
        auto c = classify_llm(context, state.stage, *classifier_, config_, turn_index);
        d.degraded = c.degraded;
        d.degraded_reason = c.reason;
        for (auto& s : c.signals) {
            if (s.kind == SignalKind::Continue) continue;
            auto it = found.find(s.kind);
            if (it == found.end() || s.confidence > it->second.confidence) found[s.kind] = s;
        }
    }

    // Signals below the floor are dropped, except crisis.
    for (auto it = found.begin(); it != found.end();) {
        if (it->first != SignalKind::CrisisTrigger && it->second.confidence < config_.confidence_floor) {
            it = found.erase(it);
        } else {
            ++it;
        }
    }

    d.avoidance_cue = found.count(SignalKind::AvoidanceDetected) != 0;
    d.avoidance_counter = d.avoidance_cue ? state.avoidance_counter + 1 : 0;
    if (d.avoidance_counter < config_.avoidance_threshold) {
        found.erase(SignalKind::AvoidanceDetected);
    }
    found.erase(SignalKind::Continue);
    for (auto& [kind, sig] : found) d.candidates.push_back(std::move(sig));
    d.candidates.push_back(TransitionSignal{SignalKind::Continue, config_.confidence_floor, {}, {}});
    return d;
}

Detection detect(SessionState& state, std::string_view utterance, const SignalDetector& detector) {
    auto d = detector.detect(state, utterance);
    const auto chosen = resolve(state.stage, d.candidates);
    SessionEvent e{state.session_id, state.turn_index, EventKind::Signal, {},
                   events::signal(d.candidates, chosen, d.avoidance_cue)};
    apply_event_in_place(state, e);
    return d;
}

SignalKind primary_signal(std::span<const TransitionSignal> candidates) {
    SignalKind best = SignalKind::Continue;
    for (const auto& c : candidates) {
        if (priority_rank(c.kind) < priority_rank(best)) best = c.kind;
    }
    return best;
}

}  // namespace stagewise
