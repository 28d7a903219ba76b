#pragma once
// Shared fixtures for the unit and acceptance tests.

#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <spdlog/sinks/ostream_sink.h>

#include "stagewise/config.hpp"
#include "stagewise/eval.hpp"
#include "stagewise/logging.hpp"

namespace stagewise::testing {

inline std::filesystem::path data_dir() { return STAGEWISE_TEST_DATA_DIR; }
inline std::filesystem::path data(const std::string& rel) { return data_dir() / rel; }

// Config from the bundled scripted example, without environment overrides.
inline EngineConfig bundled_config() { return load_config(data("config/scripted.json"), {}); }

// Immutable assets shared by a test: lexicons, prompt engine, options.
struct Assets {
    EngineConfig config = bundled_config();
    CueLexicon lexicon = CueLexicon::load(config.lexicon_path.string());
    PromptEngine prompts{PromptAssets::load(config.prompt_dir, lexicon.generic_suggestions())};
    eval::EvalLexicon eval_lexicon = eval::EvalLexicon::load(config.eval_lexicon_path);

    const OrchestratorOptions& options() const { return config.orchestrator; }

    eval::EvalContext eval_context(ChatBackend* backend = nullptr) const {
        return eval::EvalContext{lexicon, prompts, eval_lexicon, config.orchestrator, backend, nullptr,
                                 config.turn_cap};
    }
};

inline const Assets& assets() {
    static const Assets a;
    return a;
}

// Routes the engine logger into a string for the lifetime of the object.
class LogCapture {
public:
    LogCapture() : logger_(logger()), saved_(logger_->sinks()), level_(logger_->level()) {
        logger_->sinks() = {std::make_shared<spdlog::sinks::ostream_sink_mt>(out_)};
        logger_->set_level(spdlog::level::trace);
    }
    ~LogCapture() {
        logger_->sinks() = saved_;
        logger_->set_level(level_);
    }
    std::string text() {
        logger_->flush();
        return out_.str();
    }

private:
    std::ostringstream out_;
    std::shared_ptr<spdlog::logger> logger_;
    std::vector<spdlog::sink_ptr> saved_;
    spdlog::level::level_enum level_;
};

// A scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("stagewise-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Scripted backend from inline turn -> response pairs.
inline std::unique_ptr<ScriptedBackend> script(std::vector<std::pair<int, std::string>> turns) {
    std::vector<ScriptEntry> entries;
    for (auto& [t, text] : turns) entries.push_back(ScriptEntry{t, std::nullopt, std::move(text)});
    return std::make_unique<ScriptedBackend>(std::move(entries));
}

}  // namespace stagewise::testing
