#include "worldsmith/telemetry.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "worldsmith/error.hpp"

namespace fs = std::filesystem;

namespace worldsmith {

namespace {

constexpr std::pair<EventKind, std::string_view> kKindNames[] = {
    {EventKind::modify_text, "modify_text"},     {EventKind::modify_region, "modify_region"},
    {EventKind::modify_sketch, "modify_sketch"}, {EventKind::modify_tile, "modify_tile"},
    {EventKind::run_diffusion, "run_diffusion"}, {EventKind::blend, "blend"},
    {EventKind::tree_add, "tree_add"},           {EventKind::tree_select, "tree_select"},
};

void write_all(int fd, const char* data, std::size_t size, const std::string& what) {
    while (size > 0) {
        const auto n = ::write(fd, data, size);
        if (n < 0) {
            if (errno == EINTR) continue;
            fail(ErrorCode::storage, "write to " + what + " failed: " + std::strerror(errno));
        }
        data += n;
        size -= static_cast<std::size_t>(n);
    }
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

bool valid_session_id(std::string_view id) noexcept {
    if (id.empty() || id.size() > 64) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_';
        if (!ok) return false;
    }
    return true;
}

nlohmann::json event_to_json(const InteractionEvent& e) {
    return {{"event_id", e.event_id},
            {"timestamp", e.timestamp_ms},
            {"session_id", e.session_id},
            {"tile_id", e.tile_id ? nlohmann::json(*e.tile_id) : nlohmann::json(nullptr)},
            {"kind", to_string(e.kind)},
            {"payload", e.payload}};
}

InteractionEvent event_from_json(const nlohmann::json& j) {
    try {
        InteractionEvent e;
        e.event_id = j.value("event_id", std::uint64_t{0});
        e.timestamp_ms = j.value("timestamp", std::int64_t{0});
        e.session_id = j.at("session_id").get<std::string>();
        if (j.contains("tile_id") && !j["tile_id"].is_null()) e.tile_id = j["tile_id"].get<std::string>();
        const auto kind = j.at("kind").get<std::string>();
        auto k = event_kind_from_string(kind);
        if (!k) fail(ErrorCode::validation, "unknown event kind '" + kind + "'");
        e.kind = *k;
        e.payload = j.value("payload", nlohmann::json::object());
        return e;
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::validation, std::string("malformed event: ") + ex.what());
    }
}

std::vector<InteractionEvent> parse_ndjson(std::string_view text) {
    std::vector<InteractionEvent> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) fail(ErrorCode::validation, "malformed NDJSON line");
        out.push_back(event_from_json(j));
    }
    return out;
}

struct EventStore::Log {
    std::mutex mu;
    fs::path dir;
    int fd = -1;
    int index_fd = -1;
    std::uint64_t last_id = 0;
    std::int64_t last_ts = 0;
    std::uint64_t committed = 0;  // bytes

    ~Log() {
        if (fd >= 0) ::close(fd);
        if (index_fd >= 0) ::close(index_fd);
    }
};

EventStore::EventStore(fs::path root) : EventStore(std::move(root), Options{}) {}

EventStore::EventStore(fs::path root, Options options) : root_(std::move(root)), options_(options) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) fail(ErrorCode::storage, "cannot create event root " + root_.string() + ": " + ec.message());
}

EventStore::~EventStore() = default;

EventStore::Log& EventStore::open_log(const std::string& session_id) const {
    if (!valid_session_id(session_id)) fail(ErrorCode::invalid_argument, "invalid session id '" + session_id + "'");
    std::lock_guard lock(mu_);
    if (auto it = logs_.find(session_id); it != logs_.end()) return *it->second;

    auto log = std::make_unique<Log>();
    log->dir = root_ / session_id;
    std::error_code ec;
    fs::create_directories(log->dir, ec);
    if (ec) fail(ErrorCode::storage, "cannot create " + log->dir.string() + ": " + ec.message());
    const auto data_path = log->dir / "events.ndjson";

    // Recovery: keep the longest prefix of complete lines that parse and carry
    // strictly increasing event ids.
    std::string content;
    {
        std::ifstream in(data_path, std::ios::binary);
        if (in) content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    std::size_t pos = 0;
    while (pos < content.size()) {
        const auto end = content.find('\n', pos);
        if (end == std::string::npos) break;
        auto j = nlohmann::json::parse(std::string_view(content).substr(pos, end - pos), nullptr, false);
        if (j.is_discarded() || !j.is_object()) break;
        const auto id = j.value("event_id", std::uint64_t{0});
        if (id != log->last_id + 1) break;
        log->last_id = id;
        log->last_ts = std::max(log->last_ts, j.value("timestamp", std::int64_t{0}));
        pos = end + 1;
    }
    log->committed = pos;

    log->fd = ::open(data_path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
    if (log->fd < 0) fail(ErrorCode::storage, "cannot open " + data_path.string() + ": " + std::strerror(errno));
    if (pos != content.size()) {
        if (::ftruncate(log->fd, static_cast<off_t>(pos)) != 0) {
            fail(ErrorCode::storage, "cannot truncate torn event log tail: " + std::string(std::strerror(errno)));
        }
        ::fsync(log->fd);
    }
    if (::lseek(log->fd, static_cast<off_t>(pos), SEEK_SET) < 0) {
        fail(ErrorCode::storage, "cannot seek event log: " + std::string(std::strerror(errno)));
    }
    const auto index_path = log->dir / "events.idx";
    log->index_fd = ::open(index_path.c_str(), O_WRONLY | O_CREAT | O_CLOEXEC, 0644);
    if (log->index_fd < 0) fail(ErrorCode::storage, "cannot open " + index_path.string());

    auto& ref = *log;
    logs_.emplace(session_id, std::move(log));
    return ref;
}

InteractionEvent EventStore::append(InteractionEvent event) {
    auto& log = open_log(event.session_id);
    std::lock_guard lock(log.mu);
    event.event_id = log.last_id + 1;
    event.timestamp_ms = std::max(event.timestamp_ms, log.last_ts);
    const std::string line = event_to_json(event).dump() + "\n";
    write_all(log.fd, line.data(), line.size(), "event log");
    if (options_.fsync && ::fsync(log.fd) != 0) {
        fail(ErrorCode::storage, "fsync of event log failed: " + std::string(std::strerror(errno)));
    }
    log.last_id = event.event_id;
    log.last_ts = event.timestamp_ms;
    log.committed += line.size();

    char index[64];
    const int n = std::snprintf(index, sizeof index, "%020llu %020llu\n",
                                static_cast<unsigned long long>(log.last_id),
                                static_cast<unsigned long long>(log.committed));
    if (::pwrite(log.index_fd, index, static_cast<std::size_t>(n), 0) != n) {
        fail(ErrorCode::storage, "cannot update event index");
    }
    return event;
}

std::vector<InteractionEvent> EventStore::scan(const std::string& session_id) const {
    auto& log = open_log(session_id);
    std::string content;
    {
        std::lock_guard lock(log.mu);
        std::ifstream in(log.dir / "events.ndjson", std::ios::binary);
        content.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        content.resize(std::min<std::size_t>(content.size(), log.committed));
    }
    return parse_ndjson(content);
}

std::string EventStore::export_ndjson(const std::string& session_id) const {
    auto& log = open_log(session_id);
    std::lock_guard lock(log.mu);
    std::ifstream in(log.dir / "events.ndjson", std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    content.resize(std::min<std::size_t>(content.size(), log.committed));
    return content;
}

std::vector<std::string> EventStore::sessions() const {
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && fs::exists(entry.path() / "events.ndjson")) {
            out.push_back(entry.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace worldsmith
