#pragma once
// HTTP/1.1 JSON surface over one orchestrator.
//
//   POST /v1/sessions                         201 {session_id, stage}
//   POST /v1/sessions/{id}/messages           200 TurnResult | 404 | 409 | 410 | 502
//   GET  /v1/sessions/{id}/state              200 SessionState
//   GET  /v1/sessions/{id}/transcript         200 event log (application/x-ndjson)
//   POST /v1/sessions/{id}/stage_override     200 SessionState
//   POST /v1/eval/run                         200 MetricsReport | AblationReport
//   GET  /healthz                             200
//
// Errors carry {"error": <code>, "message": ..., "field"?: ...}; a malformed
// body is 400.

#include <memory>
#include <string>

#include "stagewise/config.hpp"
#include "stagewise/orchestrator.hpp"

namespace httplib {
class Server;
}

namespace stagewise {

class Service {
public:
    // `runtime` and `orchestrator` must outlive the service.
    Service(Runtime& runtime, Orchestrator& orchestrator);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves until stop(). Port 0 picks a free port.
    bool listen(const std::string& host, int port);
    // Binds to a free port and returns it; serve with listen_after_bind().
    int bind_any(const std::string& host);
    bool listen_after_bind();
    void wait_until_ready() const;
    void stop();

private:
    void routes();

    Runtime& runtime_;
    Orchestrator& orchestrator_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace stagewise
