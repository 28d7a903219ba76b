#include "stagewise/gateway.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "stagewise/errors.hpp"
#include "stagewise/logging.hpp"
#include "stagewise/text.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
    return buf;
}

}  // namespace

void validate(const BackendConfig& config) {
    if (config.kind == BackendKind::Remote && config.endpoint_url.empty()) {
        throw ConfigError("remote backend requires endpoint_url");
    }
    if (config.kind == BackendKind::Scripted && config.script_path.empty()) {
        throw ConfigError("scripted backend requires script_path");
    }
    if (config.timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
    if (config.max_retries < 0) throw ConfigError("max_retries must be non-negative");
}

BackendConfig backend_config_from_json(const json& j) {
    BackendConfig c;
    const auto kind = j.value("kind", std::string("scripted"));
    if (kind == "remote") {
        c.kind = BackendKind::Remote;
    } else if (kind == "scripted") {
        c.kind = BackendKind::Scripted;
    } else {
        throw ConfigError("backend.kind must be remote or scripted, got: " + kind);
    }
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_name = j.value("model_name", c.model_name);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
    c.script_path = j.value("script_path", c.script_path);
    validate(c);
    return c;
}

json to_json(const BackendConfig& c) {
    return json{{"kind", c.kind == BackendKind::Remote ? "remote" : "scripted"},
                {"endpoint_url", c.endpoint_url},
                {"model_name", c.model_name},
                {"api_key_env", c.api_key_env},
                {"timeout_ms", c.timeout_ms},
                {"max_retries", c.max_retries},
                {"backoff_base_ms", c.backoff_base_ms},
                {"script_path", c.script_path}};
}

std::string prompt_digest(const std::vector<ChatMessage>& messages) {
    std::uint64_t h = 14695981039346656037ULL;
    auto feed = [&h](std::string_view s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    };
    for (const auto& m : messages) {
        feed(m.role);
        feed("\x1f");
        feed(m.content);
        feed("\x1e");
    }
    return hex64(h);
}

std::string ChatBackend::complete(const CompletionRequest& request) {
    if (request.messages.empty()) throw std::invalid_argument("complete: no messages");
    if (request.messages.front().role != "system") {
        throw std::invalid_argument("complete: first message must be the system prompt");
    }
    ++calls_;
    return do_complete(request);
}

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> entries) {
    for (auto& e : entries) {
        if (e.turn) {
            if (!by_turn_.emplace(*e.turn, e.response_text).second) {
                throw ConfigError("duplicate script entry for turn " + std::to_string(*e.turn));
            }
        } else if (e.digest) {
            if (!by_digest_.emplace(*e.digest, e.response_text).second) {
                throw ConfigError("duplicate script entry for digest " + *e.digest);
            }
        } else {
            throw ConfigError("script entry without match key");
        }
    }
}

std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script: " + path);
    std::vector<ScriptEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        try {
            const auto j = json::parse(line);
            ScriptEntry e;
            const auto& m = j.at("match");
            if (m.contains("turn")) e.turn = m.at("turn").get<int>();
            if (m.contains("digest")) e.digest = m.at("digest").get<std::string>();
            e.response_text = j.at("response_text").get<std::string>();
            entries.push_back(std::move(e));
        } catch (const json::exception& ex) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return entries;
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
    return std::make_unique<ScriptedBackend>(load_script(path));
}

std::string ScriptedBackend::do_complete(const CompletionRequest& request) {
    if (request.turn_index) {
        if (auto it = by_turn_.find(*request.turn_index); it != by_turn_.end()) return it->second;
    }
    const auto digest = prompt_digest(request.messages);
    if (auto it = by_digest_.find(digest); it != by_digest_.end()) return it->second;
    if (request.turn_index) throw ScriptExhausted("turn " + std::to_string(*request.turn_index));
    throw ScriptExhausted("digest " + digest);
}

// ------------------------------------------------------------------ remote

RemoteBackend::RemoteBackend(BackendConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
    validate(config_);
    if (config_.kind != BackendKind::Remote) throw ConfigError("RemoteBackend needs kind=remote");
    if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    if (!config_.api_key_env.empty()) {
        if (const char* v = std::getenv(config_.api_key_env.c_str())) api_key_ = v;
    }
    const auto& url = config_.endpoint_url;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url lacks scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_begin);
    path_ = path_begin == std::string::npos ? "/" : url.substr(path_begin);
}

std::string RemoteBackend::redact(std::string message) const {
    if (api_key_.empty()) return message;
    return text::replace_all(std::move(message), api_key_, "[redacted]");
}

std::string RemoteBackend::do_complete(const CompletionRequest& request) {
    json body{{"model", config_.model_name},
              {"temperature", request.params.temperature},
              {"max_tokens", request.params.max_tokens},
              {"messages", json::array()}};
    for (const auto& m : request.messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const auto payload = body.dump();

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    const int max_attempts = config_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        last_attempts_ = attempt;
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);

        auto res = client.Post(path_, headers, payload, "application/json");
        bool retryable = true;
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "http " + std::to_string(res->status);
        } else if (res->status >= 400) {
            last_error = "http " + std::to_string(res->status) + ": " + res->body;
            retryable = false;
        } else {
            try {
                const auto j = json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& ex) {
                last_error = std::string("malformed completion body: ") + ex.what();
                retryable = false;
            }
        }
        logger()->warn("completion attempt {}/{} to {} failed: {}", attempt, max_attempts,
                       redact(scheme_host_port_ + path_), redact(last_error));
        if (!retryable) throw BackendUnavailable(attempt, redact(last_error));
        if (attempt < max_attempts) {
            sleeper_(std::chrono::milliseconds(config_.backoff_base_ms) * (1 << (attempt - 1)));
        }
    }
    throw BackendUnavailable(max_attempts, redact(last_error));
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
    validate(config);
    if (config.kind == BackendKind::Remote) return std::make_unique<RemoteBackend>(config);
    return ScriptedBackend::from_file(config.script_path);
}

}  // namespace stagewise
