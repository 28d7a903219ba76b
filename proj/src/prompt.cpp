#include "stagewise/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "stagewise/errors.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot open prompt asset: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::filesystem::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& ex) {
        throw ConfigError(p.string() + ": " + ex.what());
    }
}

std::string fill(std::string tpl, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        tpl = text::replace_all(std::move(tpl), "{" + key + "}", value);
    }
    return tpl;
}

std::size_t count_of(std::string_view hay, std::string_view needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string_view::npos;
         pos = hay.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// Removes delimiter tokens until none remain (removal can splice a new one).
std::string strip_tokens(std::string s) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto tok : {kThinkOpen, kThinkClose}) {
            const auto before = s.size();
            s = text::replace_all(std::move(s), tok, "");
            changed = changed || s.size() != before;
        }
    }
    return s;
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    for (auto& part : text::split(v, ',')) {
        auto t = text::trim(part);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

void parse_extraction_block(std::string_view block, events::Extraction& out) {
    for (const auto& line : text::split(block, '\n')) {
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const auto key = text::to_lower(text::trim(line.substr(0, colon)));
        const auto value = std::string_view(line).substr(colon + 1);
        if (key == "keywords") {
            out.keywords = split_list(value);
        } else if (key == "foci") {
            out.foci = split_list(value);
        } else if (key == "stressors") {
            out.stressors = split_list(value);
        } else if (key == "resources") {
            for (const auto& item : split_list(value)) {
                Resource r;
                const auto eq = item.find('=');
                r.tag = text::trim(item.substr(0, eq));
                if (eq != std::string::npos) {
                    const auto cap = text::trim(item.substr(eq + 1));
                    try {
                        r.capacity_minutes_per_day = std::stoi(cap);
                    } catch (const std::exception&) {
                        // "unbounded" or anything non-numeric
                    }
                }
                if (!r.tag.empty()) out.resources.push_back(std::move(r));
            }
        }
    }
}

// Cuts the extraction block out of `reply`.
std::string take_extraction(std::string reply, events::Extraction& out) {
    const auto open = reply.find(kExtractOpen);
    if (open == std::string::npos) return reply;
    const auto close = reply.find(kExtractClose, open + kExtractOpen.size());
    if (close == std::string::npos) {
        parse_extraction_block(std::string_view(reply).substr(open + kExtractOpen.size()), out);
        reply.erase(open);
    } else {
        parse_extraction_block(
            std::string_view(reply).substr(open + kExtractOpen.size(),
                                           close - open - kExtractOpen.size()),
            out);
        reply.erase(open, close + kExtractClose.size() - open);
    }
    return reply;
}

std::optional<StageEcho> find_stage_echo(std::string_view reasoning) {
    static const std::regex kEcho(R"(Current stage:\s*([A-Za-z]+)\s*;\s*Focus:\s*([^\r\n]*))",
                                  std::regex::icase);
    std::match_results<std::string_view::const_iterator> m;
    if (!std::regex_search(reasoning.begin(), reasoning.end(), m, kEcho)) return std::nullopt;
    const auto stage = parse_stage(m[1].str());
    if (!stage) return std::nullopt;
    return StageEcho{*stage, text::trim(m[2].str())};
}

std::string clean_node(std::string_view node) {
    auto t = text::trim(node);
    while (!t.empty() && std::string_view("\"'.,;:").find(t.back()) != std::string_view::npos) {
        t.pop_back();
    }
    while (!t.empty() && std::string_view("\"'").find(t.front()) != std::string_view::npos) {
        t.erase(t.begin());
    }
    return text::trim(t);
}

// ------------------------------------------------------------ plan helpers

int ordinal_value(const std::string& w) {
    static const std::map<std::string, int> kOrdinals = {
        {"first", 1},  {"second", 2},  {"third", 3}, {"fourth", 4}, {"fifth", 5},
        {"sixth", 6},  {"seventh", 7}, {"eighth", 8}, {"ninth", 9},  {"tenth", 10}};
    auto it = kOrdinals.find(text::to_lower(w));
    return it == kOrdinals.end() ? 0 : it->second;
}

const std::regex& schedule_regex() {
    static const std::regex re(
        R"(\b(?:(?:in|during|for|on|over)\s+)?(?:the\s+)?(first|second|third|fourth|fifth|sixth|seventh|eighth|ninth|tenth)\s+(week|day|month)\b|\b(?:(?:in|during|on)\s+)?(week|day|month)\s+([0-9]+)\b)",
        std::regex::icase);
    return re;
}

std::string hint_from(const std::smatch& m) {
    if (m[1].matched) return text::to_lower(m[2].str()) + " " + std::to_string(ordinal_value(m[1].str()));
    return text::to_lower(m[3].str()) + " " + m[4].str();
}

std::string clean_description(std::string s) {
    s = text::trim(s);
    while (!s.empty() && std::string_view(",:;-").find(s.front()) != std::string_view::npos) {
        s.erase(s.begin());
        s = text::trim(s);
    }
    bool changed = true;
    while (changed && !s.empty()) {
        changed = false;
        while (!s.empty() && std::string_view(",;:. ").find(s.back()) != std::string_view::npos) {
            s.pop_back();
            changed = true;
        }
        for (std::string_view tail : {" and", " then", " and then"}) {
            if (s.size() > tail.size() &&
                text::to_lower(s.substr(s.size() - tail.size())) == tail) {
                s.erase(s.size() - tail.size());
                changed = true;
            }
        }
    }
    return s;
}

// Applies the optional [needs: ...] annotation and resource defaults.
PlanStep finish_step(int index, std::string description, std::string hint) {
    static const std::regex kNeeds(
        R"(\[needs:\s*([^\];]*)(?:;\s*([0-9]+)\s*min(?:utes)?\s*/\s*day)?\s*\])",
        std::regex::icase);
    static const std::regex kMinutes(R"(\b([0-9]+)[- ]min(?:ute)?s?\b)", std::regex::icase);
    PlanStep step;
    step.index = index;
    step.schedule_hint = std::move(hint);
    std::optional<int> minutes;
    std::smatch m;
    if (std::regex_search(description, m, kNeeds)) {
        for (auto& tag : split_list(m[1].str())) step.required_tags.insert(text::to_lower(tag));
        if (m[2].matched) minutes = std::stoi(m[2].str());
        description = m.prefix().str() + m.suffix().str();
    }
    if (!minutes && std::regex_search(description, m, kMinutes)) minutes = std::stoi(m[1].str());
    if (step.required_tags.empty()) step.required_tags.insert("time");
    step.required_minutes_per_day = minutes.value_or(10);
    step.description = clean_description(description);
    return step;
}

std::optional<ActionPlan> numbered_plan(std::string_view reply) {
    static const std::regex kItem(R"(^\s*([0-9]+)[.)]\s+(.+)$)");
    std::vector<PlanStep> steps;
    for (const auto& line : text::split(reply, '\n')) {
        std::smatch m;
        if (!std::regex_match(line, m, kItem)) continue;
        if (std::stoi(m[1].str()) != static_cast<int>(steps.size()) + 1) continue;
        std::string body = m[2].str();
        std::string hint;
        std::smatch h;
        if (std::regex_search(body, h, schedule_regex())) {
            hint = hint_from(h);
            body = h.prefix().str() + h.suffix().str();
        }
        auto step = finish_step(static_cast<int>(steps.size()) + 1, body, hint);
        if (!step.description.empty()) steps.push_back(std::move(step));
    }
    if (steps.size() < 2) return std::nullopt;
    return ActionPlan{std::move(steps), 0, Stage::Action};
}

std::optional<ActionPlan> scheduled_plan(std::string_view reply_view) {
    const std::string reply(reply_view);
    struct Hit {
        std::size_t start, end;
        std::string hint;
    };
    std::vector<Hit> hits;
    for (auto it = std::sregex_iterator(reply.begin(), reply.end(), schedule_regex());
         it != std::sregex_iterator(); ++it) {
        hits.push_back(Hit{static_cast<std::size_t>(it->position()),
                           static_cast<std::size_t>(it->position() + it->length()),
                           hint_from(*it)});
    }
    std::vector<PlanStep> steps;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const auto stop = i + 1 < hits.size() ? hits[i + 1].start : reply.size();
        const std::string_view segment = std::string_view(reply).substr(hits[i].end, stop - hits[i].end);
        const auto sentences = text::split_sentences(segment);
        if (sentences.empty()) continue;
        auto step = finish_step(static_cast<int>(steps.size()) + 1,
                                std::string(text::slice(segment, sentences.front())), hits[i].hint);
        if (!step.description.empty()) steps.push_back(std::move(step));
    }
    if (steps.size() < 2) return std::nullopt;
    return ActionPlan{std::move(steps), 0, Stage::Action};
}

}  // namespace

// ------------------------------------------------------------------ assets

PromptAssets PromptAssets::load(const std::filesystem::path& dir,
                                std::vector<std::string> generic_suggestions) {
    PromptAssets a;
    a.system_template = read_file(dir / "system.v1.txt");
    a.turn_template = read_file(dir / "turn.v1.txt");
    const auto stages = read_json(dir / "stages.v1.json");
    const auto fallback = read_json(dir / "fallback_lines.v1.json");
    try {
        for (Stage s : {Stage::Exploration, Stage::Insight, Stage::Action, Stage::Crisis}) {
            a.stage_instructions[s] =
                stages.at("instructions").at(std::string(to_string(s))).get<std::string>();
        }
        a.neutral_instructions = stages.at("neutral").get<std::string>();
        a.thinking_with_stage = stages.at("thinking").get<std::string>();
        a.thinking_without_stage = stages.at("thinking_without_stage").get<std::string>();
        for (Stage s : {Stage::Exploration, Stage::Insight}) {
            a.fallback_lines[s] = fallback.at(std::string(to_string(s))).get<std::string>();
        }
        a.default_fallback = fallback.at("default").get<std::string>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("prompt assets: ") + ex.what());
    }
    a.suggestions = SuggestionLexicon::load((dir / "suggestion_lexicon.v1.json").string(),
                                            std::move(generic_suggestions));
    return a;
}

PromptEngine::PromptEngine(PromptAssets assets) : assets_(std::move(assets)) {
    for (const auto& [stage, instr] : assets_.stage_instructions) {
        for (Stage other : {Stage::Exploration, Stage::Insight, Stage::Action, Stage::Crisis}) {
            if (instr.find(stage_marker(other)) != std::string::npos) {
                throw ConfigError("stage instructions must not contain marker tokens");
            }
        }
    }
    if (count_of(assets_.system_template, "{stage_marker}") != 1) {
        throw ConfigError("system template needs exactly one {stage_marker}");
    }
}

// ------------------------------------------------------------------ build

std::vector<ChatMessage> PromptBundle::messages() const {
    return {ChatMessage{"system", system_text}, ChatMessage{"user", user_text}};
}

std::string state_summary(const SessionState& st) {
    auto list = [](const auto& items) {
        std::vector<std::string> v(items.begin(), items.end());
        return v.empty() ? std::string("none") : text::join(v, ", ");
    };
    std::vector<std::string> stressors;
    for (const auto& s : st.stressors) {
        stressors.push_back(s.label + (s.surfaced ? " (acknowledged)" : ""));
    }
    std::vector<std::string> resources;
    for (const auto& r : st.resources) {
        resources.push_back(r.tag + (r.capacity_minutes_per_day
                                         ? " (" + std::to_string(*r.capacity_minutes_per_day) +
                                               " min/day)"
                                         : ""));
    }
    std::ostringstream out;
    out << "Emotional keywords: " << list(st.emotional_keywords) << "\n"
        << "Semantic foci: " << list(st.semantic_foci) << "\n"
        << "Stressors: " << list(stressors) << "\n"
        << "Resources: " << list(resources);
    return out.str();
}

PromptBundle PromptEngine::build_prompt(const SessionState& state, Stage stage,
                                        const PromptOptions& options) const {
    if (stage == Stage::Closed) throw std::invalid_argument("build_prompt: session is closed");
    PromptBundle b;
    b.thinking_enabled = options.thinking;
    b.stage_instructions = options.stage_info ? assets_.stage_instructions.at(stage)
                                              : assets_.neutral_instructions;
    std::string thinking;
    if (options.thinking) {
        thinking = options.stage_info
                       ? text::replace_all(assets_.thinking_with_stage, "{stage_name}",
                                           std::string(display_name(stage)))
                       : assets_.thinking_without_stage;
    }
    b.system_text = fill(assets_.system_template,
                         {{"stage_marker", options.stage_info ? std::string(stage_marker(stage)) : ""},
                          {"stage_instructions", b.stage_instructions},
                          {"thinking_instructions", thinking}});
    b.state_summary = state_summary(state);

    const int first_turn = state.turn_index - options.window + 1;
    std::ostringstream hist;
    for (const auto& m : state.messages) {
        if (m.turn < first_turn) continue;
        b.history.push_back(m);
        hist << (m.role == "user" ? "User: " : "Counselor: ") << m.text << "\n";
    }
    b.user_text = fill(assets_.turn_template,
                       {{"state_summary", b.state_summary}, {"history", hist.str()}});
    return b;
}

// ------------------------------------------------------------------ parse

ParsedResponse PromptEngine::parse_response(std::string_view raw_view, bool thinking) const {
    ParsedResponse out;
    const std::string raw(raw_view);
    std::vector<std::string> reasoning;
    std::string reply;
    std::size_t pos = 0;

    // A close token before any open token: the model omitted the opener
    // and everything before the close is reasoning.
    const auto first_open = raw.find(kThinkOpen);
    const auto first_close = raw.find(kThinkClose);
    if (first_close != std::string::npos &&
        (first_open == std::string::npos || first_close < first_open)) {
        reasoning.push_back(raw.substr(0, first_close));
        pos = first_close + kThinkClose.size();
        out.degraded = true;
    }
    while (pos < raw.size()) {
        const auto open = raw.find(kThinkOpen, pos);
        if (open == std::string::npos) {
            reply += raw.substr(pos);
            break;
        }
        reply += raw.substr(pos, open - pos);
        const auto body = open + kThinkOpen.size();
        const auto close = raw.find(kThinkClose, body);
        if (close == std::string::npos) {
            // Unterminated block: drop it rather than show it.
            out.degraded = true;
            break;
        }
        reasoning.push_back(raw.substr(body, close - body));
        pos = close + kThinkClose.size();
    }

    reply = strip_tokens(take_extraction(std::move(reply), out.extractions));
    out.reply = text::trim(reply);
    if (out.reply.empty()) {
        out.reply = assets_.default_fallback;
        out.degraded = true;
    }

    if (thinking) {
        std::vector<std::string> parts;
        for (auto& r : reasoning) {
            auto t = text::trim(strip_tokens(r));
            if (!t.empty()) parts.push_back(std::move(t));
        }
        if (!parts.empty()) {
            out.reasoning_chain = text::join(parts, "\n");
            out.stage_echo = find_stage_echo(*out.reasoning_chain);
            out.causal_chains = causal_chains(*out.reasoning_chain);
        }
    }
    out.suggestions = assets_.suggestions.suggestions_in(out.reply);
    return out;
}

std::vector<std::vector<std::string>> causal_chains(std::string_view t) {
    std::vector<std::vector<std::string>> out;
    for (auto line : text::split(t, '\n')) {
        line = text::replace_all(std::move(line), "->", "→");
        if (line.find("→") == std::string::npos) continue;
        std::vector<std::string> nodes;
        std::size_t pos = 0;
        while (true) {
            const auto arrow = line.find("→", pos);
            nodes.push_back(clean_node(
                std::string_view(line).substr(pos, arrow == std::string::npos ? std::string::npos
                                                                             : arrow - pos)));
            if (arrow == std::string::npos) break;
            pos = arrow + std::string_view("→").size();
        }
        // A leading "Chain:"-style label belongs to no node.
        if (!nodes.empty()) {
            const auto colon = nodes.front().rfind(':');
            if (colon != std::string::npos) nodes.front() = clean_node(nodes.front().substr(colon + 1));
        }
        nodes.erase(std::remove(nodes.begin(), nodes.end(), std::string()), nodes.end());
        if (nodes.size() >= 2) out.push_back(std::move(nodes));
    }
    return out;
}

// ------------------------------------------------------------------- gate

GatedReply PromptEngine::gate_reply(Stage stage, const ParsedResponse& parsed, bool enabled) const {
    GatedReply g{parsed.reply, {}};
    if (!enabled || (stage != Stage::Exploration && stage != Stage::Insight)) return g;

    const auto& lex = assets_.suggestions;
    std::string current = parsed.reply;
    // Repeat until stable: dropping a sentence may re-split its neighbours.
    while (true) {
        std::string kept;
        bool removed = false;
        for (const auto& s : text::split_sentences(current)) {
            const auto sent = text::slice(current, s);
            if (lex.is_suggestion(sent)) {
                g.suppressed.emplace_back(sent);
                removed = true;
            } else {
                kept.append(current, s.start, s.next - s.start);
            }
        }
        current = text::trim(kept);
        if (!removed) break;
    }
    g.final_reply = current.empty() ? assets_.fallback_lines.at(stage) : current;
    return g;
}

// ------------------------------------------------------------------- plan

std::optional<ActionPlan> extract_plan(std::string_view reply) {
    if (text::trim(reply).empty()) return std::nullopt;
    if (auto p = numbered_plan(reply)) return p;
    return scheduled_plan(reply);
}

}  // namespace stagewise
