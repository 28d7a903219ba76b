#include "stagewise/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "stagewise/errors.hpp"
#include "stagewise/logging.hpp"
#include "stagewise/text.hpp"

namespace stagewise::eval {

namespace {

using json = nlohmann::json;

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
}

std::string_view str(const json& payload, const char* key) {
    const auto& v = payload.at(key);
    return v.is_string() ? std::string_view(v.get_ref<const std::string&>()) : std::string_view();
}

bool ends_with_question(std::string_view sentence) {
    const auto t = text::trim(sentence);
    return !t.empty() && (t.back() == '?' || (t.size() > 1 && t[t.size() - 2] == '?'));
}

std::string step_list(const std::vector<int>& steps) {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) out += (i + 1 == steps.size()) ? " and " : ", ";
        out += "step " + std::to_string(steps[i]);
    }
    return out;
}

double ratio(int num, int den) { return den == 0 ? 0.0 : static_cast<double>(num) / den; }

}  // namespace

// ----------------------------------------------------------------- lexicon

EvalLexicon EvalLexicon::from_json(const json& j) {
    EvalLexicon lex;
    try {
        lex.acknowledgment = j.at("acknowledgment").get<std::vector<std::string>>();
        lex.metaphor_markers = j.at("metaphor_markers").get<std::vector<std::string>>();
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("eval lexicon: ") + ex.what());
    }
    if (lex.acknowledgment.empty()) throw ConfigError("eval lexicon: no acknowledgment cues");
    return lex;
}

EvalLexicon EvalLexicon::load(const std::filesystem::path& path) { return from_json(read_json(path)); }

bool restructures(std::string_view reply, std::string_view root_cause, const EvalLexicon& lexicon) {
    if (root_cause.empty()) return false;
    for (const auto& chain : causal_chains(reply)) {
        if (chain.size() >= 2 && text::mentions(text::join(chain, " "), root_cause)) return true;
    }
    for (const auto& s : text::split_sentences(reply)) {
        const auto sentence = text::slice(reply, s);
        if (!text::mentions(sentence, root_cause)) continue;
        for (const auto& marker : lexicon.metaphor_markers) {
            if (text::contains_ci(sentence, marker, true)) return true;
        }
    }
    return false;
}

bool acknowledges(std::string_view utterance, const EvalLexicon& lexicon) {
    return std::any_of(lexicon.acknowledgment.begin(), lexicon.acknowledgment.end(),
                       [&](const std::string& cue) { return text::contains_ci(utterance, cue, true); });
}

// ----------------------------------------------------------------- persona

Persona Persona::from_json(const json& j, const std::filesystem::path& base_dir) {
    Persona p;
    try {
        p.persona_id = j.at("persona_id").get<std::string>();
        p.opening_line = j.at("opening_line").get<std::string>();
        for (const auto& s : j.at("hidden_stressors")) {
            p.hidden_stressors.push_back(HiddenStressor{
                s.at("label").get<std::string>(),
                s.value("reveal_patterns", std::vector<std::string>{}),
                s.at("reveal_line").get<std::string>()});
        }
        p.root_cause = j.at("root_cause").get<std::string>();
        p.avoidance_turns = j.value("avoidance_turns", std::set<int>{});
        const auto lines = j.value("lines", json::object());
        p.lines.deflection = lines.value("deflection", "I don't want to talk about that right now.");
        p.lines.resistance = lines.value("resistance", "I've tried that already, it won't work.");
        p.lines.acceptance = lines.value("acceptance", p.lines.acceptance);
        p.lines.acknowledgment =
            lines.value("acknowledgment", "That makes sense, I never saw it that way.");
        p.lines.closing = lines.value("closing", "");
        p.lines.fillers = lines.value("fillers", std::vector<std::string>{"I'm not sure."});
        for (const auto& r : j.value("resources", json::array())) {
            p.resources.push_back(resource_from_json(r));
        }
        if (j.contains("turn_cap")) p.turn_cap = j.at("turn_cap").get<int>();
        if (j.contains("script")) {
            std::filesystem::path s = j.at("script").get<std::string>();
            p.script = s.is_absolute() || base_dir.empty() ? s : base_dir / s;
        }
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("persona: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("persona: ") + ex.what());
    }
    validate(p);
    return p;
}

Persona Persona::load(const std::filesystem::path& path) {
    try {
        return from_json(read_json(path), path.parent_path());
    } catch (const ConfigError& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
}

void validate(const Persona& p) {
    if (p.persona_id.empty()) throw ConfigError("persona_id is empty");
    if (p.opening_line.empty()) throw ConfigError(p.persona_id + ": opening_line is empty");
    if (p.hidden_stressors.empty()) throw ConfigError(p.persona_id + ": no hidden stressors");
    if (p.root_cause.empty()) throw ConfigError(p.persona_id + ": root_cause is empty");
    bool rooted = false;
    for (const auto& s : p.hidden_stressors) {
        if (s.label.empty()) throw ConfigError(p.persona_id + ": stressor without label");
        if (!text::mentions(s.reveal_line, s.label)) {
            throw ConfigError(p.persona_id + ": reveal_line does not mention '" + s.label + "'");
        }
        rooted = rooted || text::mentions(s.label, p.root_cause) ||
                 std::any_of(s.reveal_patterns.begin(), s.reveal_patterns.end(),
                             [&](const std::string& r) { return text::mentions(r, p.root_cause); });
    }
    if (!rooted) throw ConfigError(p.persona_id + ": root_cause appears in no hidden stressor");
    if (p.lines.fillers.empty()) throw ConfigError(p.persona_id + ": no filler lines");
    if (p.turn_cap && *p.turn_cap < 1) throw ConfigError(p.persona_id + ": turn_cap must be >= 1");
}

std::vector<Persona> load_personas(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Persona> out;
    for (const auto& f : files) out.push_back(Persona::load(f));
    return out;
}

AgentView view_of(const TurnResult& r) { return AgentView{r.reply, r.stage_after, r.suggestions, r.plan}; }

std::string_view to_string(PersonaRule rule) noexcept {
    switch (rule) {
        case PersonaRule::Opening: return "opening";
        case PersonaRule::Deflection: return "deflection";
        case PersonaRule::Acceptance: return "acceptance";
        case PersonaRule::Resistance: return "resistance";
        case PersonaRule::Acknowledgment: return "acknowledgment";
        case PersonaRule::Reveal: return "reveal";
        case PersonaRule::Closing: return "closing";
        case PersonaRule::Filler: return "filler";
    }
    return "unknown";
}

PersonaTurn opening_turn(const Persona& persona, PersonaState& state) {
    state = PersonaState{};
    state.turn = 2;
    return PersonaTurn{persona.opening_line, {}, PersonaRule::Opening};
}

PersonaTurn simulate_turn(const Persona& persona, PersonaState& state, const AgentView& agent,
                          const EvalLexicon& lexicon) {
    const int turn = state.turn++;
    state.belief_just_flipped = false;
    if (!state.belief_flag && agent.stage == Stage::Insight &&
        restructures(agent.reply, persona.root_cause, lexicon)) {
        state.belief_flag = true;
        state.belief_just_flipped = true;
    }

    if (persona.avoidance_turns.count(turn)) {
        return PersonaTurn{persona.lines.deflection, {}, PersonaRule::Deflection};
    }

    PersonaTurn out;
    if (agent.plan) {
        std::vector<int> accepted;
        const auto& plan = agent.plan->plan;
        for (std::size_t i = 0; i < plan.steps.size(); ++i) {
            const bool ok = plan.stage == Stage::Action && i < agent.plan->feasibility.size() &&
                            agent.plan->feasibility[i].feasible;
            out.step_updates.push_back(
                StepUpdate{plan.steps[i].index, ok ? StepStatus::Accepted : StepStatus::Rejected});
            if (ok) accepted.push_back(plan.steps[i].index);
        }
        if (!accepted.empty()) {
            state.accepted_any = true;
            out.utterance = text::replace_all(persona.lines.acceptance, "{steps}", step_list(accepted));
            out.rule = PersonaRule::Acceptance;
            return out;
        }
    }

    if (!agent.suggestions.empty() && !state.belief_flag) {
        out.utterance = persona.lines.resistance;
        out.rule = PersonaRule::Resistance;
        return out;
    }
    if (state.belief_just_flipped) {
        out.utterance = persona.lines.acknowledgment;
        out.rule = PersonaRule::Acknowledgment;
        return out;
    }
    if (state.revealed < persona.hidden_stressors.size()) {
        const auto& next = persona.hidden_stressors[state.revealed];
        for (const auto& s : text::split_sentences(agent.reply)) {
            const auto sentence = text::slice(agent.reply, s);
            if (!ends_with_question(sentence)) continue;
            const bool asked = std::any_of(
                next.reveal_patterns.begin(), next.reveal_patterns.end(),
                [&](const std::string& p) { return text::contains_ci(sentence, p); });
            if (asked) {
                ++state.revealed;
                out.utterance = next.reveal_line;
                out.rule = PersonaRule::Reveal;
                return out;
            }
        }
    }
    if (state.accepted_any && !persona.lines.closing.empty()) {
        out.utterance = persona.lines.closing;
        out.rule = PersonaRule::Closing;
        return out;
    }
    const auto& fillers = persona.lines.fillers;
    out.utterance = fillers[state.filler_index++ % fillers.size()];
    out.rule = PersonaRule::Filler;
    return out;
}

// ---------------------------------------------------------------- dialogue

DialogueRun run_dialogue(const Persona& persona, const CueLexicon& lexicon,
                         const PromptEngine& prompts, ChatBackend& backend,
                         ChatBackend* classifier, const OrchestratorOptions& options,
                         const EvalLexicon& eval_lexicon, int default_turn_cap) {
    MemoryEventStore store;
    Orchestrator orch(lexicon, prompts, backend, classifier, store, options, logical_clock());
    const auto sid = orch.create_session(SessionConfig{persona.persona_id, persona.resources}).session_id;
    const int cap = persona.turn_cap.value_or(default_turn_cap);

    DialogueRun run;
    run.persona_id = persona.persona_id;
    PersonaState ps;
    auto turn = opening_turn(persona, ps);
    while (true) {
        const auto result = orch.handle_message(sid, turn.utterance, turn.step_updates);
        ++run.turns;
        run.rules.push_back(turn.rule);
        if (result.stage_after == Stage::Closed) {
            run.end_reason = "closure_signal";
            break;
        }
        if (run.turns >= cap) {
            run.truncated = true;
            run.end_reason = result.stage_after == Stage::Crisis ? "crisis_unresolved" : "turn_cap";
            orch.end_session(sid, run.end_reason);
            break;
        }
        turn = simulate_turn(persona, ps, view_of(result), eval_lexicon);
    }
    run.transcript = orch.transcript(sid);
    run.final_stage = orch.state(sid).stage;
    return run;
}

// ----------------------------------------------------------------- metrics

ExposureResult exposure_completeness(std::span<const SessionEvent> transcript, const Persona& persona) {
    ExposureResult r;
    r.hidden = static_cast<int>(persona.hidden_stressors.size());
    for (const auto& s : persona.hidden_stressors) {
        std::optional<int> revealed_at;
        for (const auto& e : transcript) {
            if (e.kind == EventKind::UserMsg && text::mentions(str(e.payload, "text"), s.label)) {
                revealed_at = e.turn_index;
                break;
            }
        }
        if (!revealed_at) continue;
        ++r.revealed;
        const bool surfaced = std::any_of(transcript.begin(), transcript.end(), [&](const SessionEvent& e) {
            return e.kind == EventKind::AgentMsg && e.turn_index >= *revealed_at &&
                   text::mentions(str(e.payload, "text"), s.label);
        });
        if (surfaced) ++r.surfaced;
    }
    r.value = ratio(r.surfaced, r.hidden);
    return r;
}

bool restructuring_success(std::span<const SessionEvent> transcript, const Persona& persona,
                           const EvalLexicon& lexicon) {
    for (const auto& e : transcript) {
        if (e.kind != EventKind::AgentMsg || str(e.payload, "stage") != to_string(Stage::Insight)) continue;
        if (!restructures(str(e.payload, "text"), persona.root_cause, lexicon)) continue;
        for (const auto& later : transcript) {
            if (later.kind == EventKind::UserMsg && later.turn_index > e.turn_index &&
                acknowledges(str(later.payload, "text"), lexicon)) {
                return true;
            }
        }
    }
    return false;
}

AdoptionResult adoption_rate(std::span<const SessionEvent> transcript) {
    AdoptionResult r;
    std::map<std::pair<std::size_t, int>, std::string> status;
    std::size_t plans = 0;
    for (const auto& e : transcript) {
        if (e.kind == EventKind::PlanProposed) {
            for (const auto& step : e.payload.at("steps")) {
                status[{plans, step.at("index").get<int>()}] = step.at("status").get<std::string>();
            }
            ++plans;
        } else if (e.kind == EventKind::StepStatus) {
            status[{e.payload.at("plan").get<std::size_t>(), e.payload.at("step").get<int>()}] =
                e.payload.at("status").get<std::string>();
        }
    }
    r.proposed = static_cast<int>(status.size());
    r.accepted = static_cast<int>(std::count_if(status.begin(), status.end(), [](const auto& kv) {
        return kv.second == to_string(StepStatus::Accepted);
    }));
    r.no_plan = r.proposed == 0;
    r.value = ratio(r.accepted, r.proposed);
    return r;
}

SuggestionRates suggestion_rates(std::span<const SessionEvent> transcript,
                                 const SuggestionLexicon& suggestions) {
    SuggestionRates r;
    for (const auto& e : transcript) {
        if (e.kind != EventKind::AgentMsg) continue;
        const auto stage = str(e.payload, "stage");
        const bool early = stage == to_string(Stage::Exploration) || stage == to_string(Stage::Insight);
        for (const auto& s : suggestions.suggestions_in(str(e.payload, "text"))) {
            ++r.total;
            if (early) ++r.premature_count;
            if (suggestions.is_generic(s)) ++r.generic_count;
        }
    }
    r.no_suggestions = r.total == 0;
    r.premature = ratio(r.premature_count, r.total);
    r.ineffective = ratio(r.generic_count, r.total);
    return r;
}

bool root_cause_identified(std::span<const SessionEvent> transcript, const Persona& persona) {
    return std::any_of(transcript.begin(), transcript.end(), [&](const SessionEvent& e) {
        if (e.kind != EventKind::AgentMsg) return false;
        const auto& chain = e.payload.at("reasoning_chain");
        return chain.is_string() && text::mentions(chain.get<std::string>(), persona.root_cause);
    });
}

DialogueMetrics evaluate(const DialogueRun& run, const Persona& persona, const EvalLexicon& lexicon,
                         const SuggestionLexicon& suggestions) {
    DialogueMetrics m;
    m.persona_id = persona.persona_id;
    m.exposure = exposure_completeness(run.transcript, persona);
    m.restructuring_success = restructuring_success(run.transcript, persona, lexicon);
    m.adoption = adoption_rate(run.transcript);
    m.suggestions = suggestion_rates(run.transcript, suggestions);
    m.root_cause_identified = root_cause_identified(run.transcript, persona);
    m.final_stage = run.final_stage;
    m.turns = run.turns;
    m.truncated = run.truncated;
    return m;
}

AggregateMetrics aggregate(std::span<const DialogueMetrics> dialogues) {
    AggregateMetrics a;
    a.dialogues = static_cast<int>(dialogues.size());
    if (dialogues.empty()) return a;
    for (const auto& d : dialogues) {
        a.exposure_completeness += d.exposure.value;
        a.restructuring_success += d.restructuring_success ? 1.0 : 0.0;
        a.adoption_rate += d.adoption.value;
        a.premature_suggestion_rate += d.suggestions.premature;
        a.ineffective_suggestion_rate += d.suggestions.ineffective;
        a.root_cause_identified += d.root_cause_identified ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(dialogues.size());
    a.exposure_completeness /= n;
    a.restructuring_success /= n;
    a.adoption_rate /= n;
    a.premature_suggestion_rate /= n;
    a.ineffective_suggestion_rate /= n;
    a.root_cause_identified /= n;
    return a;
}

AggregateMetrics difference(const AggregateMetrics& arm, const AggregateMetrics& base) {
    AggregateMetrics d;
    d.exposure_completeness = arm.exposure_completeness - base.exposure_completeness;
    d.restructuring_success = arm.restructuring_success - base.restructuring_success;
    d.adoption_rate = arm.adoption_rate - base.adoption_rate;
    d.premature_suggestion_rate = arm.premature_suggestion_rate - base.premature_suggestion_rate;
    d.ineffective_suggestion_rate = arm.ineffective_suggestion_rate - base.ineffective_suggestion_rate;
    d.root_cause_identified = arm.root_cause_identified - base.root_cause_identified;
    d.dialogues = arm.dialogues;
    return d;
}

json to_json(const DialogueMetrics& m) {
    return json{{"persona_id", m.persona_id},
                {"exposure_completeness", m.exposure.value},
                {"stressors_revealed", m.exposure.revealed},
                {"stressors_surfaced", m.exposure.surfaced},
                {"stressors_hidden", m.exposure.hidden},
                {"restructuring_success", m.restructuring_success},
                {"adoption_rate", m.adoption.value},
                {"steps_proposed", m.adoption.proposed},
                {"steps_accepted", m.adoption.accepted},
                {"no_plan", m.adoption.no_plan},
                {"premature_suggestion_rate", m.suggestions.premature},
                {"ineffective_suggestion_rate", m.suggestions.ineffective},
                {"suggestions", m.suggestions.total},
                {"no_suggestions", m.suggestions.no_suggestions},
                {"root_cause_identified", m.root_cause_identified},
                {"final_stage", to_string(m.final_stage)},
                {"turns", m.turns},
                {"truncated", m.truncated}};
}

json to_json(const AggregateMetrics& a) {
    return json{{"exposure_completeness", a.exposure_completeness},
                {"restructuring_success", a.restructuring_success},
                {"adoption_rate", a.adoption_rate},
                {"premature_suggestion_rate", a.premature_suggestion_rate},
                {"ineffective_suggestion_rate", a.ineffective_suggestion_rate},
                {"root_cause_identified", a.root_cause_identified},
                {"dialogues", a.dialogues}};
}

json to_json(const MetricsReport& r) {
    json d = json::array();
    for (const auto& m : r.dialogues) d.push_back(to_json(m));
    return json{{"dialogues", d}, {"aggregate", to_json(r.aggregate)}};
}

std::string format_table(const MetricsReport& r) {
    std::ostringstream out;
    out << fmt::format("{:<20} {:>8} {:>8} {:>8} {:>9} {:>11} {:>9}  {}\n", "persona", "exposure",
                       "restruct", "adoption", "premature", "ineffective", "rootcause", "final");
    for (const auto& m : r.dialogues) {
        out << fmt::format("{:<20} {:>8.3f} {:>8} {:>8.3f} {:>9.3f} {:>11.3f} {:>9}  {}{}\n",
                           m.persona_id, m.exposure.value, m.restructuring_success ? "yes" : "no",
                           m.adoption.value, m.suggestions.premature, m.suggestions.ineffective,
                           m.root_cause_identified ? "yes" : "no", to_string(m.final_stage),
                           m.truncated ? " (cap)" : "");
    }
    const auto& a = r.aggregate;
    out << fmt::format("{:<20} {:>8.3f} {:>8.3f} {:>8.3f} {:>9.3f} {:>11.3f} {:>9.3f}\n", "mean",
                       a.exposure_completeness, a.restructuring_success, a.adoption_rate,
                       a.premature_suggestion_rate, a.ineffective_suggestion_rate,
                       a.root_cause_identified);
    return out.str();
}

// ---------------------------------------------------------------- ablation

std::vector<ArmFlags> ablation_arms(bool stage, bool thinking) {
    std::vector<ArmFlags> arms{{"baseline", true, true}};
    if (stage) arms.push_back({"no_stage_info", false, true});
    if (thinking) arms.push_back({"no_thinking", true, false});
    if (stage && thinking) arms.push_back({"no_stage_no_thinking", false, false});
    return arms;
}

MetricsReport run_eval(std::span<const Persona> personas, const EvalContext& ctx,
                       const AgentFlags& flags, std::vector<DialogueRun>* runs) {
    MetricsReport report;
    auto options = ctx.options;
    options.flags = flags;
    for (const auto& persona : personas) {
        std::unique_ptr<ChatBackend> own;
        ChatBackend* backend = ctx.backend;
        if (!backend) {
            if (persona.script.empty()) {
                throw ConfigError(persona.persona_id + ": no script and no shared backend");
            }
            own = ScriptedBackend::from_file(persona.script.string());
            backend = own.get();
        }
        try {
            auto run = run_dialogue(persona, ctx.lexicon, ctx.prompts, *backend, ctx.classifier,
                                    options, ctx.eval_lexicon, ctx.default_turn_cap);
            report.dialogues.push_back(
                evaluate(run, persona, ctx.eval_lexicon, ctx.prompts.suggestions()));
            if (runs) runs->push_back(std::move(run));
        } catch (const ScriptExhausted& ex) {
            logger()->warn("persona {}: {}; dialogue dropped", persona.persona_id, ex.what());
        } catch (const BackendUnavailable& ex) {
            logger()->warn("persona {}: {}; dialogue dropped", persona.persona_id, ex.what());
        }
    }
    report.aggregate = aggregate(report.dialogues);
    return report;
}

AblationReport run_ablation(std::span<const Persona> personas, std::span<const ArmFlags> arms,
                            const EvalContext& ctx) {
    if (arms.empty()) throw std::invalid_argument("run_ablation: no arms");
    AblationReport out;
    for (const auto& arm : arms) {
        AgentFlags flags = ctx.options.flags;
        flags.stage_info = arm.stage_info;
        flags.thinking = arm.thinking;
        out.arms.push_back(ArmReport{arm, run_eval(personas, ctx, flags), {}, {}});
    }
    const auto& base = out.arms.front().report;
    for (auto& arm : out.arms) {
        const auto& d = arm.report.dialogues;
        bool paired = d.size() == base.dialogues.size();
        for (std::size_t i = 0; paired && i < d.size(); ++i) {
            paired = d[i].persona_id == base.dialogues[i].persona_id;
        }
        out.comparable = out.comparable && paired;
        arm.delta = difference(arm.report.aggregate, base.aggregate);
        if (!paired) continue;
        for (std::size_t i = 0; i < d.size(); ++i) {
            arm.paired.push_back(difference(aggregate(std::span(&d[i], 1)),
                                            aggregate(std::span(&base.dialogues[i], 1))));
        }
    }
    return out;
}

json to_json(const AblationReport& r) {
    json arms = json::array();
    for (const auto& a : r.arms) {
        json paired = json::array();
        for (std::size_t i = 0; i < a.paired.size(); ++i) {
            auto p = to_json(a.paired[i]);
            p.erase("dialogues");
            p["persona_id"] = a.report.dialogues[i].persona_id;
            paired.push_back(std::move(p));
        }
        auto delta = to_json(a.delta);
        delta.erase("dialogues");
        arms.push_back(json{{"name", a.flags.name},
                            {"stage_info", a.flags.stage_info},
                            {"thinking", a.flags.thinking},
                            {"report", to_json(a.report)},
                            {"delta", delta},
                            {"paired_deltas", paired}});
    }
    return json{{"arms", arms}, {"comparable", r.comparable}};
}

std::string format_table(const AblationReport& r) {
    std::ostringstream out;
    for (const auto& a : r.arms) {
        out << fmt::format("== {} (stage_info={}, thinking={})\n", a.flags.name, a.flags.stage_info,
                           a.flags.thinking);
        out << format_table(a.report);
        if (&a != &r.arms.front()) {
            const auto& d = a.delta;
            out << fmt::format("{:<20} {:>+8.3f} {:>+8.3f} {:>+8.3f} {:>+9.3f} {:>+11.3f} {:>+9.3f}\n",
                               "delta", d.exposure_completeness, d.restructuring_success,
                               d.adoption_rate, d.premature_suggestion_rate,
                               d.ineffective_suggestion_rate, d.root_cause_identified);
        }
    }
    if (!r.comparable) out << "warning: arms are not comparable (persona sets differ)\n";
    return out.str();
}

}  // namespace stagewise::eval
