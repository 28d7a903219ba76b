#include "stagewise/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>
#include <tuple>

#include "stagewise/errors.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

CuePattern parse_pattern(const json& j) {
    CuePattern p;
    if (j.is_string()) {
        p.text = j.get<std::string>();
    } else {
        p.text = j.at("text").get<std::string>();
        p.weight = j.value("weight", 1.0);
        const auto match = j.value("match", std::string("word"));
        if (match != "word" && match != "substring") {
            throw ConfigError("lexicon: match must be word or substring: " + p.text);
        }
        p.word_boundary = match == "word";
    }
    if (text::trim(p.text).empty()) throw ConfigError("lexicon: empty pattern");
    if (!(p.weight > 0.0 && p.weight <= 1.0)) {
        throw ConfigError("lexicon: weight outside (0,1] for pattern: " + p.text);
    }
    return p;
}

std::vector<CuePattern> parse_list(const json& arr) {
    std::vector<CuePattern> out;
    for (const auto& p : arr) out.push_back(parse_pattern(p));
    return out;
}

void collect(std::string_view utterance, SignalKind kind, const std::vector<CuePattern>& patterns,
             std::vector<CueHit>& out) {
    std::vector<CueHit> raw;
    for (const auto& p : patterns) {
        std::size_t from = 0;
        while (true) {
            const auto pos = text::find_ci(utterance, p.text, from, p.word_boundary);
            if (pos == std::string_view::npos) break;
            raw.push_back(CueHit{kind, p.text, Span{pos, pos + p.text.size()}, p.weight});
            from = pos + 1;
        }
    }
    // Leftmost first, longest first at equal start; heavier pattern breaks
    // a remaining tie.
    std::sort(raw.begin(), raw.end(), [](const CueHit& a, const CueHit& b) {
        return std::make_tuple(a.span.start, b.span.end, b.weight, a.pattern) <
               std::make_tuple(b.span.start, a.span.end, a.weight, b.pattern);
    });
    std::size_t covered = 0;
    bool any = false;
    for (auto& h : raw) {
        if (any && h.span.start < covered) continue;
        covered = h.span.end;
        any = true;
        out.push_back(std::move(h));
    }
}

}  // namespace

CueLexicon CueLexicon::from_json(const json& j) {
    CueLexicon lex;
    try {
        lex.version_ = j.value("version", std::string("unversioned"));
        for (const auto& [key, arr] : j.at("signals").items()) {
            const auto kind = parse_signal(key);
            if (!kind) throw ConfigError("lexicon: unknown signal section: " + key);
            if (*kind == SignalKind::Continue) {
                throw ConfigError("lexicon: continue is the absence default and takes no patterns");
            }
            if (*kind == SignalKind::CrisisTrigger) {
                throw ConfigError("lexicon: crisis patterns belong in the \"crisis\" section");
            }
            lex.signals_[*kind] = parse_list(arr);
        }
        lex.crisis_ = parse_list(j.at("crisis"));
        for (const auto& g : j.value("generic_suggestions", json::array())) {
            lex.generic_.push_back(g.get<std::string>());
        }
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("lexicon: ") + ex.what());
    }
    lex.validate();
    return lex;
}

CueLexicon CueLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open lexicon: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& ex) {
        throw ConfigError(path + ": " + ex.what());
    }
    return from_json(j);
}

void CueLexicon::validate() const {
    for (SignalKind s : kAllSignals) {
        if (s == SignalKind::Continue) continue;
        if (patterns(s).empty()) {
            throw ConfigError("lexicon: no patterns for " + std::string(to_string(s)));
        }
    }
    std::set<std::string> others;
    for (const auto& [kind, list] : signals_) {
        for (const auto& p : list) others.insert(text::to_lower(p.text));
    }
    for (const auto& p : crisis_) {
        if (others.count(text::to_lower(p.text))) {
            throw ConfigError("lexicon: crisis pattern shared with another signal: " + p.text);
        }
    }
}

const std::vector<CuePattern>& CueLexicon::patterns(SignalKind signal) const {
    static const std::vector<CuePattern> kEmpty;
    if (signal == SignalKind::CrisisTrigger) return crisis_;
    auto it = signals_.find(signal);
    return it == signals_.end() ? kEmpty : it->second;
}

std::vector<CueHit> detect_cues(std::string_view utterance, const CueLexicon& lexicon) {
    if (utterance.empty()) throw std::invalid_argument("detect_cues: empty utterance");
    std::vector<CueHit> hits;
    for (SignalKind s : kAllSignals) {
        if (s == SignalKind::Continue) continue;
        collect(utterance, s, lexicon.patterns(s), hits);
    }
    std::sort(hits.begin(), hits.end(), [](const CueHit& a, const CueHit& b) {
        return std::make_tuple(a.span.start, a.span.end, static_cast<int>(a.signal)) <
               std::make_tuple(b.span.start, b.span.end, static_cast<int>(b.signal));
    });
    return hits;
}

}  // namespace stagewise
