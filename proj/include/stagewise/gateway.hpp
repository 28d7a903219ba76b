#pragma once
// Chat-completion backends: a remote HTTP backend speaking the common
// chat-completions wire shape, and a scripted backend for offline runs.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace stagewise {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct CompletionParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    CompletionParams params;
    // Dialogue turn the request belongs to; scripted backends key on it.
    std::optional<int> turn_index;
};

enum class BackendKind { Remote, Scripted };

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string endpoint_url;  // remote
    std::string model_name;
    std::string api_key_env;  // name of the variable, never the key itself
    int timeout_ms = 30000;
    int max_retries = 2;
    int backoff_base_ms = 500;
    std::string script_path;  // scripted
};

// Throws ConfigError when the kind-specific field is missing.
void validate(const BackendConfig& config);
BackendConfig backend_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BackendConfig& config);

// Stable hex digest of a message list (FNV-1a 64).
std::string prompt_digest(const std::vector<ChatMessage>& messages);

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    // Throws std::invalid_argument when messages is empty or does not start
    // with a system message; BackendUnavailable / ScriptExhausted otherwise.
    std::string complete(const CompletionRequest& request);

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    virtual std::string do_complete(const CompletionRequest& request) = 0;

    std::atomic<std::size_t> calls_{0};
};

struct ScriptEntry {
    std::optional<int> turn;
    std::optional<std::string> digest;
    std::string response_text;
};

// Newline-delimited records {"match": {"turn": N} | {"digest": "..."},
// "response_text": "..."}.
std::vector<ScriptEntry> load_script(const std::string& path);

class ScriptedBackend final : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptEntry> entries);
    static std::unique_ptr<ScriptedBackend> from_file(const std::string& path);

private:
    std::string do_complete(const CompletionRequest& request) override;

    std::map<int, std::string> by_turn_;
    std::map<std::string, std::string> by_digest_;
};

class RemoteBackend final : public ChatBackend {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    // Reads the API key from config.api_key_env (if named) at construction.
    explicit RemoteBackend(BackendConfig config, Sleeper sleeper = {});

    int last_attempts() const noexcept { return last_attempts_.load(); }

private:
    std::string do_complete(const CompletionRequest& request) override;
    std::string redact(std::string message) const;

    BackendConfig config_;
    std::string api_key_;
    std::string scheme_host_port_;
    std::string path_;
    Sleeper sleeper_;
    std::atomic<int> last_attempts_{0};
};

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

}  // namespace stagewise
