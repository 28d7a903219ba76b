#include "stagewise/suggestions.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "stagewise/errors.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

// Skips list bullets, numbering and opening quotes.
std::string_view sentence_body(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c) || c == '-' || c == '*' || c == '"' || c == '\'' || c == '(') {
            ++i;
        } else if (std::isdigit(c)) {
            std::size_t k = i;
            while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
            if (k < s.size() && (s[k] == '.' || s[k] == ')')) {
                i = k + 1;
            } else {
                break;
            }
        } else {
            break;
        }
    }
    return s.substr(i);
}

std::vector<std::string> lowered(std::vector<std::string> v) {
    for (auto& s : v) s = text::to_lower(text::trim(s));
    v.erase(std::remove(v.begin(), v.end(), std::string()), v.end());
    return v;
}

}  // namespace

SuggestionLexicon::SuggestionLexicon(std::vector<std::string> openers,
                                     std::vector<std::string> phrases,
                                     std::vector<std::string> generic)
    : openers_(lowered(std::move(openers))),
      phrases_(lowered(std::move(phrases))),
      generic_(lowered(std::move(generic))) {}

SuggestionLexicon SuggestionLexicon::from_json(const nlohmann::json& j,
                                               std::vector<std::string> generic) {
    try {
        return SuggestionLexicon(j.at("openers").get<std::vector<std::string>>(),
                                 j.at("phrases").get<std::vector<std::string>>(),
                                 std::move(generic));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(std::string("suggestion lexicon: ") + ex.what());
    }
}

SuggestionLexicon SuggestionLexicon::load(const std::string& path,
                                          std::vector<std::string> generic) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open suggestion lexicon: " + path);
    try {
        return from_json(nlohmann::json::parse(in), std::move(generic));
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
}

bool SuggestionLexicon::is_generic(std::string_view sentence) const {
    return std::any_of(generic_.begin(), generic_.end(), [&](const std::string& g) {
        return text::contains_ci(sentence, g, true);
    });
}

bool SuggestionLexicon::is_suggestion(std::string_view sentence) const {
    const auto body = sentence_body(sentence);
    for (const auto& o : openers_) {
        if (text::find_ci(body, o, 0, true) == 0) return true;
    }
    for (const auto& p : phrases_) {
        if (text::contains_ci(sentence, p, true)) return true;
    }
    return is_generic(sentence);
}

std::vector<std::string> SuggestionLexicon::suggestions_in(std::string_view t) const {
    std::vector<std::string> out;
    for (const auto& s : text::split_sentences(t)) {
        const auto sent = text::slice(t, s);
        if (is_suggestion(sent)) out.emplace_back(sent);
    }
    return out;
}

}  // namespace stagewise
