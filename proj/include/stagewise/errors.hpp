#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stagewise {

// Base for every recoverable error raised by the engine. Caller bugs
// (violated preconditions) use std::invalid_argument / std::logic_error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& what) : Error("not found: " + what) {}
};

class SessionClosed : public Error {
public:
    explicit SessionClosed(const std::string& sid) : Error("session closed: " + sid) {}
};

class SessionBusy : public Error {
public:
    explicit SessionBusy(const std::string& sid)
        : Error("turn already in flight for session: " + sid) {}
};

class CorruptedLog : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class BackendUnavailable : public Error {
public:
    BackendUnavailable(int attempts, const std::string& detail)
        : Error("backend unavailable after " + std::to_string(attempts) +
                " attempt(s): " + detail),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class ScriptExhausted : public Error {
public:
    explicit ScriptExhausted(std::string key)
        : Error("script exhausted: no entry for " + key), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace stagewise
