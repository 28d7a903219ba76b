#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace stagewise {

// Decides which sentences count as advice. Shared by reply gating and the
// evaluation metrics so both agree on what a suggestion is.
//
// A sentence is a suggestion when it opens with an imperative/advice
// opener, contains an advice phrase, or contains a generic encouragement
// phrase. The generic phrases come from the cue lexicon.
class SuggestionLexicon {
public:
    SuggestionLexicon() = default;
    SuggestionLexicon(std::vector<std::string> openers, std::vector<std::string> phrases,
                      std::vector<std::string> generic);

    // {"version", "openers": [...], "phrases": [...]}; generic phrases are
    // passed in separately.
    static SuggestionLexicon from_json(const nlohmann::json& j, std::vector<std::string> generic);
    static SuggestionLexicon load(const std::string& path, std::vector<std::string> generic);

    bool is_suggestion(std::string_view sentence) const;
    bool is_generic(std::string_view sentence) const;

    // Suggestion sentences of `text`, in order.
    std::vector<std::string> suggestions_in(std::string_view text) const;

private:
    std::vector<std::string> openers_;
    std::vector<std::string> phrases_;
    std::vector<std::string> generic_;
};

}  // namespace stagewise
