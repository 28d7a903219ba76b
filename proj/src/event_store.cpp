#include "stagewise/event_store.hpp"

#include <fstream>
#include <sstream>

#include "stagewise/errors.hpp"
#include "stagewise/logging.hpp"

namespace stagewise {

namespace {

using json = nlohmann::json;

struct ParsedLog {
    LoadResult result;
    std::size_t complete_bytes = 0;  // length of the valid prefix
};

ParsedLog parse_with_offset(const std::string& content) {
    ParsedLog out;
    std::size_t pos = 0;
    int lineno = 0;
    while (pos < content.size()) {
        ++lineno;
        const auto nl = content.find('\n', pos);
        const bool terminated = nl != std::string::npos;
        const auto line = content.substr(pos, terminated ? nl - pos : std::string::npos);
        const auto next = terminated ? nl + 1 : content.size();
        const bool last = next >= content.size();
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            pos = next;
            if (terminated) out.complete_bytes = pos;
            continue;
        }
        std::optional<SessionEvent> event;
        std::string error;
        if (terminated) {
            try {
                event = event_from_record(json::parse(line));
            } catch (const json::exception& ex) {
                error = ex.what();
            } catch (const CorruptedLog& ex) {
                error = ex.what();
            }
        } else {
            error = "record not newline-terminated";
        }
        if (!event) {
            if (!last) {
                throw CorruptedLog("line " + std::to_string(lineno) + ": " + error);
            }
            out.result.truncated = true;
            out.result.warning = "dropped partial trailing record at line " +
                                 std::to_string(lineno) + ": " + error;
            break;
        }
        out.result.events.push_back(std::move(*event));
        pos = next;
        out.complete_bytes = pos;
    }
    return out;
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("event log " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string to_line(const SessionEvent& event) { return to_record(event).dump() + "\n"; }

LoadResult parse_log(const std::string& content) { return parse_with_offset(content).result; }

LoadResult read_log_file(const std::filesystem::path& path) { return parse_log(read_all(path)); }

// ------------------------------------------------------------------ memory

void MemoryEventStore::append(const SessionEvent& event) {
    std::lock_guard lock(mu_);
    logs_[event.session_id].push_back(event);
}

LoadResult MemoryEventStore::load(const std::string& session_id) {
    std::lock_guard lock(mu_);
    auto it = logs_.find(session_id);
    if (it == logs_.end()) throw NotFound("session " + session_id);
    return LoadResult{it->second, false, {}};
}

bool MemoryEventStore::exists(const std::string& session_id) const {
    std::lock_guard lock(mu_);
    return logs_.count(session_id) != 0;
}

// -------------------------------------------------------------------- file

FileEventStore::FileEventStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::filesystem::path FileEventStore::path_for(const std::string& session_id) const {
    if (session_id.empty() || session_id.find_first_of("/\\") != std::string::npos ||
        session_id.find("..") != std::string::npos) {
        throw std::invalid_argument("unsafe session id: " + session_id);
    }
    return dir_ / (session_id + ".events.jsonl");
}

std::mutex& FileEventStore::lock_for(const std::string& session_id) {
    std::lock_guard lock(table_mu_);
    auto& slot = locks_[session_id];
    if (!slot) slot = std::make_unique<std::mutex>();
    return *slot;
}

void FileEventStore::append(const SessionEvent& event) {
    const auto path = path_for(event.session_id);
    const auto line = to_line(event);
    std::lock_guard lock(lock_for(event.session_id));
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error("cannot open event log for append: " + path.string());
    out << line;
    out.flush();
    if (!out) throw Error("write failed: " + path.string());
}

LoadResult FileEventStore::load(const std::string& session_id) {
    const auto path = path_for(session_id);
    std::lock_guard lock(lock_for(session_id));
    if (!std::filesystem::exists(path)) throw NotFound("session " + session_id);
    auto parsed = parse_with_offset(read_all(path));
    if (parsed.result.truncated) {
        std::filesystem::resize_file(path, parsed.complete_bytes);
        logger()->warn("{}: {}", path.string(), parsed.result.warning);
    }
    return std::move(parsed.result);
}

bool FileEventStore::exists(const std::string& session_id) const {
    return std::filesystem::exists(path_for(session_id));
}

}  // namespace stagewise
