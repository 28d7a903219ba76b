#include "stagewise/config.hpp"

#include <algorithm>
#include <fstream>

#include "stagewise/errors.hpp"
#include "stagewise/text.hpp"

extern char** environ;

namespace stagewise {

namespace {

using json = nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

BackendConfig backend_from(const json& j, const std::filesystem::path& base) {
    auto c = backend_config_from_json(j);
    if (!c.script_path.empty()) c.script_path = resolve(base, c.script_path).string();
    return c;
}

}  // namespace

std::map<std::string, std::string> process_environment() {
    std::map<std::string, std::string> env;
    for (char** e = environ; e && *e; ++e) {
        std::string_view kv(*e);
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) continue;
        env.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
    }
    return env;
}

void apply_env_overrides(json& doc, const std::map<std::string, std::string>& env) {
    const std::string prefix = kEnvPrefix;
    for (const auto& [name, value] : env) {
        if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size()) continue;
        std::string path = "/" + text::to_lower(text::replace_all(name.substr(prefix.size()), "__", "/"));
        json parsed;
        try {
            parsed = json::parse(value);
        } catch (const json::exception&) {
            parsed = value;
        }
        try {
            doc[json::json_pointer(path)] = parsed;
        } catch (const json::exception& ex) {
            throw ConfigError("cannot apply " + name + ": " + ex.what());
        }
    }
}

EngineConfig parse_config(const json& doc, const std::filesystem::path& base) {
    EngineConfig c;
    try {
        c.backend = backend_from(doc.at("backend"), base);
        if (doc.contains("classifier_backend") && !doc.at("classifier_backend").is_null()) {
            c.classifier_backend = backend_from(doc.at("classifier_backend"), base);
        }
        auto& o = c.orchestrator;
        const auto det = doc.value("detector", json::object());
        const auto mode = parse_detector_mode(det.value("mode", std::string("rules")));
        if (!mode) throw ConfigError("detector.mode must be rules, llm or hybrid");
        o.detector.mode = *mode;
        o.detector.avoidance_threshold = det.value("avoidance_threshold", 2);
        o.detector.confidence_floor = det.value("confidence_floor", 0.3);
        o.detector.context_window = det.value("context_window", 4);
        if (o.detector.avoidance_threshold < 1) throw ConfigError("avoidance_threshold must be >= 1");
        if (o.detector.mode != DetectorMode::Rules && !c.classifier_backend) {
            throw ConfigError("detector mode " + std::string(to_string(*mode)) +
                              " requires classifier_backend");
        }

        const auto agent = doc.value("agent", json::object());
        o.flags.gating = agent.value("gating", true);
        o.flags.thinking = agent.value("thinking", true);
        o.flags.stage_info = agent.value("stage_info", true);
        o.history_window = agent.value("history_window", 6);
        o.params.temperature = agent.value("temperature", 0.0);
        o.params.max_tokens = agent.value("max_tokens", 1024);

        o.crisis_referral_text = doc.at("crisis_referral_text").get<std::string>();
        o.closing_text = doc.value("closing_text", std::string("Thank you for talking with me today. Take care."));
        for (const auto& r : doc.value("resources", json::array())) {
            o.default_resources.push_back(resource_from_json(r));
        }

        const auto assets = doc.at("assets");
        c.lexicon_path = resolve(base, assets.at("lexicon").get<std::string>());
        c.prompt_dir = resolve(base, assets.at("prompt_dir").get<std::string>());
        c.eval_lexicon_path = resolve(base, assets.value("eval_lexicon", std::string()));
        c.store_dir = resolve(base, doc.value("store_dir", std::string()));
        c.turn_cap = doc.value("turn_cap", 30);
        if (c.turn_cap < 1) throw ConfigError("turn_cap must be >= 1");
        const auto listen = doc.value("listen", json::object());
        c.host = listen.value("host", c.host);
        c.port = listen.value("port", c.port);
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(std::string("config: ") + ex.what());
    }
    if (c.orchestrator.crisis_referral_text.empty()) {
        throw ConfigError("config: crisis_referral_text must be non-empty");
    }
    return c;
}

EngineConfig load_config(const std::filesystem::path& path,
                         const std::map<std::string, std::string>& env) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& ex) {
        throw ConfigError(path.string() + ": " + ex.what());
    }
    apply_env_overrides(doc, env);
    return parse_config(doc, std::filesystem::absolute(path).parent_path());
}

std::unique_ptr<Runtime> Runtime::build(EngineConfig config) {
    auto lexicon = CueLexicon::load(config.lexicon_path.string());
    auto prompts = PromptEngine(PromptAssets::load(config.prompt_dir, lexicon.generic_suggestions()));
    auto rt = std::unique_ptr<Runtime>(new Runtime{std::move(config), std::move(lexicon),
                                                   std::move(prompts), nullptr, nullptr, nullptr, std::nullopt});
    rt->backend = make_backend(rt->config.backend);
    if (rt->config.classifier_backend) rt->classifier = make_backend(*rt->config.classifier_backend);
    if (rt->config.store_dir.empty()) {
        rt->store = std::make_unique<MemoryEventStore>();
    } else {
        rt->store = std::make_unique<FileEventStore>(rt->config.store_dir);
    }
    if (!rt->config.eval_lexicon_path.empty()) {
        rt->eval_lexicon = eval::EvalLexicon::load(rt->config.eval_lexicon_path);
    }
    return rt;
}

Orchestrator Runtime::make_orchestrator(Clock clock) {
    return Orchestrator(lexicon, prompts, *backend, classifier.get(), *store, config.orchestrator,
                        std::move(clock));
}

}  // namespace stagewise
