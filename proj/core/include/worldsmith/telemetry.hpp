#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace worldsmith {

enum class EventKind {
    modify_text,
    modify_region,
    modify_sketch,
    modify_tile,
    run_diffusion,
    blend,
    tree_add,
    tree_select,
};

inline constexpr EventKind all_event_kinds[] = {
    EventKind::modify_text,   EventKind::modify_region, EventKind::modify_sketch, EventKind::modify_tile,
    EventKind::run_diffusion, EventKind::blend,         EventKind::tree_add,      EventKind::tree_select,
};

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> event_kind_from_string(std::string_view name) noexcept;

struct InteractionEvent {
    std::uint64_t event_id = 0;  // assigned by the store, 1-based per session
    std::int64_t timestamp_ms = 0;
    std::string session_id;
    std::optional<std::string> tile_id;
    EventKind kind = EventKind::modify_text;
    nlohmann::json payload = nlohmann::json::object();

    friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

nlohmann::json event_to_json(const InteractionEvent& e);
InteractionEvent event_from_json(const nlohmann::json& j);
std::vector<InteractionEvent> parse_ndjson(std::string_view text);

/// Callback through which engine operations report user actions.
using EventEmitter =
    std::function<void(EventKind kind, const std::optional<std::string>& tile_id, nlohmann::json payload)>;

/// Append-only per-session interaction log.
///
/// Layout: `<root>/<session_id>/events.ndjson` (one JSON event per line) and
/// `<root>/<session_id>/events.idx` (event count and committed byte length).
/// An append is acknowledged only after the line is written and, with
/// `fsync` enabled, synced. Opening a session log recovers from a torn tail by
/// truncating to the last complete, well-formed line.
class EventStore {
public:
    struct Options {
        bool fsync = true;
    };

    explicit EventStore(std::filesystem::path root);
    EventStore(std::filesystem::path root, Options options);
    ~EventStore();

    EventStore(const EventStore&) = delete;
    EventStore& operator=(const EventStore&) = delete;

    /// Assigns the next event_id and clamps the timestamp so that events stay
    /// ordered by (timestamp, event_id). Returns the stored event.
    InteractionEvent append(InteractionEvent event);

    std::vector<InteractionEvent> scan(const std::string& session_id) const;
    std::string export_ndjson(const std::string& session_id) const;
    std::vector<std::string> sessions() const;

    const std::filesystem::path& root() const noexcept { return root_; }

private:
    struct Log;
    Log& open_log(const std::string& session_id) const;

    std::filesystem::path root_;
    Options options_;
    mutable std::mutex mu_;
    mutable std::map<std::string, std::unique_ptr<Log>> logs_;
};

/// Session ids double as directory names: [A-Za-z0-9_-]{1,64}.
bool valid_session_id(std::string_view id) noexcept;

}  // namespace worldsmith
