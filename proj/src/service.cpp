#include "stagewise/service.hpp"

#include <httplib.h>

#include "stagewise/errors.hpp"
#include "stagewise/eval.hpp"
#include "stagewise/logging.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

struct BadRequest : std::runtime_error {
    BadRequest(std::string field, const std::string& message)
        : std::runtime_error(message), field(std::move(field)) {}
    std::string field;
};

void reply_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view code, std::string_view message,
                 std::string_view field = {}) {
    json body{{"error", code}, {"message", message}};
    if (!field.empty()) body["field"] = field;
    reply_json(res, status, body);
}

json parse_body(const httplib::Request& req, bool allow_empty = false) {
    if (req.body.empty() && allow_empty) return json::object();
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::exception& ex) {
        throw BadRequest("", std::string("body is not valid JSON: ") + ex.what());
    }
    if (!body.is_object()) throw BadRequest("", "body must be a JSON object");
    return body;
}

template <typename T>
T field(const json& body, const char* name, bool required = true, T fallback = T{}) {
    if (!body.contains(name) || body.at(name).is_null()) {
        if (required) throw BadRequest(name, std::string(name) + " is required");
        return fallback;
    }
    try {
        return body.at(name).get<T>();
    } catch (const json::exception&) {
        throw BadRequest(name, std::string(name) + " has the wrong type");
    }
}

// Maps domain errors to status codes around a handler.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const BadRequest& ex) {
            reply_error(res, 400, "bad_request", ex.what(), ex.field);
        } catch (const NotFound& ex) {
            reply_error(res, 404, "not_found", ex.what());
        } catch (const SessionBusy& ex) {
            reply_error(res, 409, "turn_in_flight", ex.what());
        } catch (const SessionClosed& ex) {
            reply_error(res, 410, "session_closed", ex.what());
        } catch (const BackendUnavailable& ex) {
            reply_error(res, 502, "backend_unavailable", ex.what());
        } catch (const ScriptExhausted& ex) {
            reply_error(res, 502, "backend_unavailable", ex.what());
        } catch (const ConfigError& ex) {
            reply_error(res, 400, "bad_request", ex.what());
        } catch (const std::invalid_argument& ex) {
            reply_error(res, 400, "bad_request", ex.what());
        } catch (const std::exception& ex) {
            logger()->error("{} {}: {}", req.method, req.path, ex.what());
            reply_error(res, 500, "internal", ex.what());
        }
    };
}

std::vector<Resource> parse_resources(const json& overrides) {
    std::vector<Resource> out;
    if (!overrides.contains("resources")) return out;
    try {
        for (const auto& r : overrides.at("resources")) out.push_back(resource_from_json(r));
    } catch (const std::exception& ex) {
        throw BadRequest("config_overrides.resources", ex.what());
    }
    return out;
}

}  // namespace

Service::Service(Runtime& runtime, Orchestrator& orchestrator)
    : runtime_(runtime), orchestrator_(orchestrator), server_(std::make_unique<httplib::Server>()) {
    routes();
}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }
int Service::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }
bool Service::listen_after_bind() { return server_->listen_after_bind(); }
void Service::wait_until_ready() const { server_->wait_until_ready(); }
void Service::stop() {
    if (server_->is_running()) server_->stop();
}

void Service::routes() {
    auto& s = *server_;
    const std::string sid = R"(/v1/sessions/([A-Za-z0-9_.\-]+))";

    s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        reply_json(res, 200, json{{"status", "ok"}});
    });

    s.Post("/v1/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req, true);
        SessionConfig config;
        const auto overrides = field<json>(body, "config_overrides", false, json::object());
        if (!overrides.is_object()) throw BadRequest("config_overrides", "config_overrides must be an object");
        config.resources = parse_resources(overrides);
        if (overrides.contains("session_id")) {
            config.session_id = field<std::string>(overrides, "session_id");
        }
        const auto state = orchestrator_.create_session(config);
        reply_json(res, 201, json{{"session_id", state.session_id}, {"stage", to_string(state.stage)}});
    }));

    s.Post(sid + "/messages", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto text = field<std::string>(body, "text");
        if (text.empty()) throw BadRequest("text", "text must be non-empty");
        std::vector<StepUpdate> updates;
        for (const auto& u : field<json>(body, "step_updates", false, json::array())) {
            const auto status = parse_step_status(field<std::string>(u, "status"));
            if (!status) throw BadRequest("step_updates.status", "unknown step status");
            updates.push_back(StepUpdate{field<int>(u, "step"), *status});
        }
        const auto result = orchestrator_.handle_message(req.matches[1], text, updates);
        reply_json(res, 200, to_json(result));
    }));

    s.Get(sid + "/state", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply_json(res, 200, to_json(orchestrator_.state(req.matches[1])));
    }));

    s.Get(sid + "/transcript", guarded([this](const httplib::Request& req, httplib::Response& res) {
        std::string out;
        for (const auto& e : orchestrator_.transcript(req.matches[1])) {
            out += to_line(e);
        }
        res.status = 200;
        res.set_content(out, "application/x-ndjson");
    }));

    s.Post(sid + "/stage_override", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto stage = parse_stage(field<std::string>(body, "stage"));
        if (!stage) throw BadRequest("stage", "unknown stage");
        const auto note = field<std::string>(body, "operator_note");
        if (note.empty()) throw BadRequest("operator_note", "operator_note must be non-empty");
        reply_json(res, 200, to_json(orchestrator_.override_stage(req.matches[1], *stage, note)));
    }));

    s.Post("/v1/eval/run", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto dir = field<std::string>(body, "persona_dir");
        if (!runtime_.eval_lexicon) throw BadRequest("", "service has no eval lexicon configured");
        const auto flags_json = field<json>(body, "flags", false, json::object());
        AgentFlags flags = runtime_.config.orchestrator.flags;
        flags.stage_info = field<bool>(flags_json, "stage_info", false, flags.stage_info);
        flags.thinking = field<bool>(flags_json, "thinking", false, flags.thinking);
        flags.gating = field<bool>(flags_json, "gating", false, flags.gating);
        const auto ablate = field<std::string>(body, "ablate", false, "");
        if (!ablate.empty() && ablate != "stage" && ablate != "thinking" && ablate != "both") {
            throw BadRequest("ablate", "ablate must be stage, thinking or both");
        }

        const auto personas = eval::load_personas(dir);
        auto options = runtime_.config.orchestrator;
        options.flags = flags;
        eval::EvalContext ctx{runtime_.lexicon, runtime_.prompts, *runtime_.eval_lexicon, options,
                              nullptr, runtime_.classifier.get(), runtime_.config.turn_cap};
        if (ablate.empty()) {
            reply_json(res, 200, to_json(eval::run_eval(personas, ctx, flags)));
        } else {
            const auto arms = eval::ablation_arms(ablate != "thinking", ablate != "stage");
            reply_json(res, 200, to_json(eval::run_ablation(personas, arms, ctx)));
        }
    }));
}

}  // namespace stagewise
