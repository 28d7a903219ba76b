#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "stagewise/stage.hpp"

namespace stagewise {

struct CuePattern {
    std::string text;
    double weight = 1.0;        // (0,1]
    bool word_boundary = true;  // false: plain substring
};

struct CueHit {
    SignalKind signal = SignalKind::Continue;
    std::string pattern;
    Span span;
    double weight = 0.0;

    friend bool operator==(const CueHit&, const CueHit&) = default;
};

// Trigger patterns per signal plus the crisis list and the generic
// suggestion phrases. Immutable once loaded.
//
// File layout (JSON):
//   { "version": "...",
//     "signals": { "<signal identifier>": [pattern, ...], ... },
//     "crisis": [pattern, ...],
//     "generic_suggestions": ["phrase", ...] }
// where a pattern is {"text": "...", "weight": 0.8, "match": "word"|"substring"};
// "match" defaults to "word", "weight" to 1.0.
class CueLexicon {
public:
    static CueLexicon from_json(const nlohmann::json& j);
    static CueLexicon load(const std::string& path);

    const std::string& version() const noexcept { return version_; }
    // Patterns for a signal; CrisisTrigger returns the crisis list.
    const std::vector<CuePattern>& patterns(SignalKind signal) const;
    const std::vector<CuePattern>& crisis() const noexcept { return crisis_; }
    const std::vector<std::string>& generic_suggestions() const noexcept { return generic_; }

private:
    void validate() const;

    std::string version_;
    std::map<SignalKind, std::vector<CuePattern>> signals_;
    std::vector<CuePattern> crisis_;
    std::vector<std::string> generic_;
};

// All non-overlapping matches, leftmost-longest within each signal kind,
// ordered by span start (then end, then signal). Crisis hits are reported
// as CrisisTrigger. Throws std::invalid_argument on an empty utterance.
std::vector<CueHit> detect_cues(std::string_view utterance, const CueLexicon& lexicon);

}  // namespace stagewise
