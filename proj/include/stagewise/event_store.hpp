#pragma once
// Append-only event logs, one per session.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "stagewise/session.hpp"

namespace stagewise {

struct LoadResult {
    std::vector<SessionEvent> events;
    bool truncated = false;  // a partial trailing record was dropped
    std::string warning;
};

class EventStore {
public:
    virtual ~EventStore() = default;

    virtual void append(const SessionEvent& event) = 0;
    // Throws NotFound for an unknown session id.
    virtual LoadResult load(const std::string& session_id) = 0;
    virtual bool exists(const std::string& session_id) const = 0;
};

// Keeps logs in memory; used by evaluation runs and tests.
class MemoryEventStore final : public EventStore {
public:
    void append(const SessionEvent& event) override;
    LoadResult load(const std::string& session_id) override;
    bool exists(const std::string& session_id) const override;

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<SessionEvent>> logs_;
};

// One "<session_id>.events.jsonl" file per session under a directory.
// Appends to distinct sessions may run concurrently.
class FileEventStore final : public EventStore {
public:
    explicit FileEventStore(std::filesystem::path dir);

    void append(const SessionEvent& event) override;
    // A half-written final line is cut from the file and reported through
    // LoadResult::truncated; a malformed line anywhere else throws
    // CorruptedLog.
    LoadResult load(const std::string& session_id) override;
    bool exists(const std::string& session_id) const override;

    std::filesystem::path path_for(const std::string& session_id) const;

private:
    std::mutex& lock_for(const std::string& session_id);

    std::filesystem::path dir_;
    std::mutex table_mu_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

std::string to_line(const SessionEvent& event);
// Parses a whole log text (newline-delimited records). Same recovery rule
// as FileEventStore::load, minus the file truncation.
LoadResult parse_log(const std::string& content);
LoadResult read_log_file(const std::filesystem::path& path);

}  // namespace stagewise
