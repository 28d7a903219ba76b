#pragma once
// A Service on a free local port over the bundled scripted config, with an
// optional replacement backend, plus a client pointed at it.

#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "stagewise/service.hpp"
#include "support/support.hpp"

namespace stagewise::testing {

struct Served {
    std::unique_ptr<Runtime> runtime;
    Orchestrator orch;
    Service service;
    int port;
    std::thread thread;
    httplib::Client client;

    static std::unique_ptr<Runtime> runtime_with(std::unique_ptr<ChatBackend> backend) {
        auto rt = Runtime::build(bundled_config());
        if (backend) rt->backend = std::move(backend);
        return rt;
    }

    explicit Served(std::unique_ptr<ChatBackend> backend = nullptr)
        : runtime(runtime_with(std::move(backend))),
          orch(runtime->make_orchestrator(logical_clock())),
          service(*runtime, orch),
          port(service.bind_any("127.0.0.1")),
          thread([this] { service.listen_after_bind(); }),
          client("127.0.0.1", port) {
        service.wait_until_ready();
        client.set_read_timeout(10, 0);
    }
    ~Served() {
        service.stop();
        thread.join();
    }

    httplib::Result post(const std::string& path, const nlohmann::json& body) {
        return client.Post(path.c_str(), body.dump(), "application/json");
    }
    httplib::Result get(const std::string& path) { return client.Get(path.c_str()); }

    std::string create() {
        auto r = post("/v1/sessions", nlohmann::json::object());
        if (!r || r->status != 201) throw std::runtime_error("session creation failed");
        return nlohmann::json::parse(r->body).at("session_id").get<std::string>();
    }
    static std::string base(const std::string& sid) { return "/v1/sessions/" + sid; }
};

// Parses an ndjson transcript body; blank lines are an error.
inline std::vector<SessionEvent> parse_ndjson(const std::string& text) {
    std::vector<SessionEvent> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) throw std::runtime_error("blank line in transcript");
        out.push_back(event_from_record(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace stagewise::testing
