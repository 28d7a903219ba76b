#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include "stagewise/errors.hpp"
#include "stagewise/gateway.hpp"
#include "support/flaky_server.hpp"
#include "support/support.hpp"

using namespace stagewise;
using stagewise::testing::FlakyServer;
using stagewise::testing::LogCapture;
using stagewise::testing::TempDir;

namespace {

constexpr const char* kKeyVar = "STAGEWISE_TEST_GATEWAY_KEY";
constexpr const char* kKey = "sk-test-9f2c41d7e0";

CompletionRequest request(std::optional<int> turn = std::nullopt) {
    return CompletionRequest{{{"system", "You are kind."}, {"user", "Hello"}}, {}, turn};
}

BackendConfig remote(const std::string& url, int timeout_ms, int retries, int backoff_ms) {
    BackendConfig c;
    c.kind = BackendKind::Remote;
    c.endpoint_url = url;
    c.model_name = "test-model";
    c.api_key_env = kKeyVar;
    c.timeout_ms = timeout_ms;
    c.max_retries = retries;
    c.backoff_base_ms = backoff_ms;
    return c;
}

struct KeyEnv {
    KeyEnv() { ::setenv(kKeyVar, kKey, 1); }
    ~KeyEnv() { ::unsetenv(kKeyVar); }
};

}  // namespace

TEST_CASE("scripted backend keys on turn, then digest") {
    const auto digest = prompt_digest(request().messages);
    ScriptedBackend b({{1, std::nullopt, "first"}, {std::nullopt, digest, "by digest"}});
    CHECK(b.complete(request(1)) == "first");
    CHECK(b.complete(request(7)) == "by digest");
    CHECK(b.complete(request()) == "by digest");
    CHECK(b.calls() == 3);

    ScriptedBackend only_turns({{1, std::nullopt, "first"}});
    CHECK_THROWS_AS(only_turns.complete(request(2)), ScriptExhausted);
    try {
        only_turns.complete(request(2));
    } catch (const ScriptExhausted& e) {
        CHECK(e.key() == "turn 2");
    }
}

TEST_CASE("scripted backend rejects duplicates and bad requests") {
    CHECK_THROWS_AS(ScriptedBackend({{1, std::nullopt, "a"}, {1, std::nullopt, "b"}}), ConfigError);
    CHECK_THROWS_AS(ScriptedBackend({{std::nullopt, std::nullopt, "a"}}), ConfigError);
    ScriptedBackend b({{1, std::nullopt, "a"}});
    CHECK_THROWS_AS(b.complete(CompletionRequest{}), std::invalid_argument);
    CHECK_THROWS_AS(b.complete(CompletionRequest{{{"user", "hi"}}, {}, 1}), std::invalid_argument);
}

TEST_CASE("script files") {
    TempDir dir("script");
    const auto path = dir.path() / "s.jsonl";
    std::ofstream(path) << R"({"match": {"turn": 1}, "response_text": "one"})" << "\n\n"
                        << R"({"match": {"digest": "abc"}, "response_text": "two"})" << "\n";
    const auto entries = load_script(path.string());
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].turn == 1);
    CHECK(entries[1].digest == std::optional<std::string>("abc"));
    CHECK(ScriptedBackend::from_file(path.string())->complete(request(1)) == "one");

    std::ofstream(path) << "{broken\n";
    CHECK_THROWS_AS(load_script(path.string()), ConfigError);
    CHECK_THROWS_AS(load_script((dir.path() / "missing").string()), ConfigError);
}

TEST_CASE("prompt digest is stable and content sensitive") {
    const auto a = prompt_digest(request().messages);
    CHECK(a.size() == 16);
    CHECK(a == prompt_digest(request().messages));
    auto other = request().messages;
    other[1].content = "Hello!";
    CHECK(a != prompt_digest(other));
}

TEST_CASE("backend config validation") {
    BackendConfig c;
    c.kind = BackendKind::Remote;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.endpoint_url = "http://x";
    c.model_name = "m";
    CHECK_NOTHROW(validate(c));
    c.timeout_ms = 0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    BackendConfig s;
    CHECK_THROWS_AS(validate(s), ConfigError);

    const auto j = to_json(remote("http://h/p", 100, 1, 5));
    CHECK(j.dump().find(kKey) == std::string::npos);
    const auto back = backend_config_from_json(j);
    CHECK(back.endpoint_url == "http://h/p");
    CHECK(back.max_retries == 1);
}

TEST_CASE("success after two timeouts within the latency bound") {
    KeyEnv env;
    LogCapture logs;
    FlakyServer server({FlakyServer::stall(), FlakyServer::stall(), FlakyServer::reply("finally")}, 600);
    const auto cfg = remote(server.url(), 200, 2, 50);
    RemoteBackend b(cfg);

    const auto t0 = std::chrono::steady_clock::now();
    const auto out = b.complete(request(1));
    const auto elapsed = std::chrono::steady_clock::now() - t0;

    CHECK(out == "finally");
    CHECK(b.last_attempts() == 3);
    CHECK(server.hits() == 3);
    const auto bound = std::chrono::milliseconds((cfg.max_retries + 1) * cfg.timeout_ms + 50 + 100);
    CHECK(elapsed <= bound);
    CHECK(server.authorization() == std::string("Bearer ") + kKey);
    const auto body = nlohmann::json::parse(server.bodies().back());
    CHECK(body.at("model") == "test-model");
    CHECK(body.at("messages").size() == 2);

    const auto text = logs.text();
    CHECK(text.find("attempt 1/3") != std::string::npos);
    CHECK(text.find(kKey) == std::string::npos);
}

TEST_CASE("backoff doubles between attempts") {
    FlakyServer server({FlakyServer::status(503)}, 0);
    std::vector<std::chrono::milliseconds> sleeps;
    RemoteBackend b(remote(server.url(), 500, 3, 500), [&](std::chrono::milliseconds d) { sleeps.push_back(d); });
    CHECK_THROWS_AS(b.complete(request()), BackendUnavailable);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500), std::chrono::milliseconds(1000),
                                                           std::chrono::milliseconds(2000)});
}

TEST_CASE("5xx exhausts after max_retries + 1 attempts") {
    KeyEnv env;
    LogCapture logs;
    FlakyServer server({FlakyServer::status(500, std::string("bad key ") + kKey)}, 0);
    RemoteBackend b(remote(server.url(), 500, 2, 1));
    try {
        b.complete(request());
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(e.attempts() == 3);
        CHECK(std::string(e.what()).find(kKey) == std::string::npos);
    }
    CHECK(server.hits() == 3);
    CHECK(logs.text().find(kKey) == std::string::npos);
}

TEST_CASE("4xx is not retried and the key is redacted from the error") {
    KeyEnv env;
    LogCapture logs;
    FlakyServer server({FlakyServer::status(401, std::string("invalid key ") + kKey)}, 0);
    RemoteBackend b(remote(server.url(), 500, 2, 1));
    try {
        b.complete(request());
        FAIL("expected BackendUnavailable");
    } catch (const BackendUnavailable& e) {
        CHECK(e.attempts() == 1);
        const std::string what = e.what();
        CHECK(what.find("401") != std::string::npos);
        CHECK(what.find(kKey) == std::string::npos);
        CHECK(what.find("[redacted]") != std::string::npos);
    }
    CHECK(server.hits() == 1);
    CHECK(logs.text().find(kKey) == std::string::npos);
}

TEST_CASE("malformed completion bodies and unreachable endpoints") {
    FlakyServer server({FlakyServer::Step{FlakyServer::Step::Reply, 200, "{\"nope\": 1}"}}, 0);
    RemoteBackend b(remote(server.url(), 500, 2, 1));
    CHECK_THROWS_AS(b.complete(request()), BackendUnavailable);
    CHECK(server.hits() == 1);

    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    RemoteBackend down(remote("http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", 200, 1, 1));
    CHECK_THROWS_AS(down.complete(request()), BackendUnavailable);
    CHECK(down.last_attempts() == 2);

    CHECK_THROWS_AS(RemoteBackend(remote("no-scheme", 100, 0, 1)), ConfigError);
}
