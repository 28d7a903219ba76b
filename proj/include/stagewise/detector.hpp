#pragma once
// Transition-signal detection from the latest user utterance: a rule path
// over the cue lexicon, a prompted-classifier path over a chat backend,
// or the union of both. Arbitration is left to stagewise::resolve.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stagewise/gateway.hpp"
#include "stagewise/lexicon.hpp"
#include "stagewise/session.hpp"
#include "stagewise/stage.hpp"

namespace stagewise {

enum class DetectorMode { Rules, Llm, Hybrid };

std::string_view to_string(DetectorMode mode) noexcept;
std::optional<DetectorMode> parse_detector_mode(std::string_view text) noexcept;

struct DetectorConfig {
    DetectorMode mode = DetectorMode::Rules;
    int avoidance_threshold = 2;  // consecutive avoidance turns before S3 fires
    double confidence_floor = 0.3;
    int context_window = 4;  // turns shown to the classifier
};

struct Detection {
    std::vector<TransitionSignal> candidates;  // always contains Continue
    std::vector<CueHit> hits;
    bool avoidance_cue = false;
    int avoidance_counter = 0;  // value after this utterance
    bool degraded = false;      // classifier path failed and fell back
    std::string degraded_reason;

    bool has(SignalKind kind) const;
};

struct Classification {
    std::vector<TransitionSignal> signals;
    bool degraded = false;
    std::string reason;
};

// Parses the classifier's one-line reply "signal=<identifier> confidence=<0..1>".
std::optional<TransitionSignal> parse_classifier_reply(std::string_view reply,
                                                       std::string_view evidence);

// Messages sent to the classifier backend.
std::vector<ChatMessage> classifier_messages(std::span<const DialogueTurn> context, Stage stage);

// Prompted classification. Never throws on backend failure or a malformed
// reply: both degrade to {Continue at the confidence floor}.
Classification classify_llm(std::span<const DialogueTurn> context, Stage stage,
                            ChatBackend& backend, const DetectorConfig& config,
                            std::optional<int> turn_index = std::nullopt);

class SignalDetector {
public:
    // `classifier` is required for llm and hybrid modes.
    SignalDetector(const CueLexicon& lexicon, DetectorConfig config,
                   ChatBackend* classifier = nullptr);

    const DetectorConfig& config() const noexcept { return config_; }

    // Candidate set for `utterance` given the state before it. Does not
    // touch the state; `as_event` turns the result into the signal event
    // that carries the avoidance-counter update. Throws
    // std::invalid_argument for a Closed session or an empty utterance.
    Detection detect(const SessionState& state, std::string_view utterance,
                     std::optional<int> turn_index = std::nullopt) const;

private:
    const CueLexicon& lexicon_;
    DetectorConfig config_;
    ChatBackend* classifier_;
};

// Runs detection and folds the resulting signal event into `state`
// (updating its avoidance counter). Returns the detection.
Detection detect(SessionState& state, std::string_view utterance, const SignalDetector& detector);

// Highest-priority non-Continue kind in a candidate set, ignoring stage
// applicability; Continue when there is none. Used to label corpora.
SignalKind primary_signal(std::span<const TransitionSignal> candidates);

}  // namespace stagewise
