#pragma once
// Engine configuration file (JSON) and the runtime it assembles.
//
// Any value may be overridden through the environment: a variable
// STAGEWISE_<A>__<B>=<value> sets the key path a.b (lowercased); the value
// is parsed as JSON when it parses, else taken as a string. E.g.
//   STAGEWISE_BACKEND__TIMEOUT_MS=5000
//   STAGEWISE_DETECTOR__MODE=hybrid
// Relative paths are resolved against the config file's directory.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "stagewise/eval.hpp"
#include "stagewise/event_store.hpp"
#include "stagewise/gateway.hpp"
#include "stagewise/lexicon.hpp"
#include "stagewise/orchestrator.hpp"
#include "stagewise/prompt.hpp"

namespace stagewise {

inline constexpr const char* kEnvPrefix = "STAGEWISE_";

struct EngineConfig {
    BackendConfig backend;
    std::optional<BackendConfig> classifier_backend;  // llm / hybrid detection
    OrchestratorOptions orchestrator;
    std::filesystem::path lexicon_path;
    std::filesystem::path prompt_dir;
    std::filesystem::path eval_lexicon_path;
    std::filesystem::path store_dir;  // empty: in-memory
    int turn_cap = 30;
    std::string host = "127.0.0.1";
    int port = 8080;
};

// Applies STAGEWISE_* overrides from `env` onto a parsed config document.
void apply_env_overrides(nlohmann::json& doc, const std::map<std::string, std::string>& env);
std::map<std::string, std::string> process_environment();

// Throws ConfigError on a malformed or incomplete document.
EngineConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
EngineConfig load_config(const std::filesystem::path& path,
                         const std::map<std::string, std::string>& env = process_environment());

// Immutable shared assets plus the backends and store named by a config.
struct Runtime {
    EngineConfig config;
    CueLexicon lexicon;
    PromptEngine prompts;
    std::unique_ptr<ChatBackend> backend;
    std::unique_ptr<ChatBackend> classifier;
    std::unique_ptr<EventStore> store;
    std::optional<eval::EvalLexicon> eval_lexicon;  // when eval_lexicon_path is set

    static std::unique_ptr<Runtime> build(EngineConfig config);

    Orchestrator make_orchestrator(Clock clock = system_clock());
};

}  // namespace stagewise
