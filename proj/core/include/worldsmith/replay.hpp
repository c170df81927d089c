#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "worldsmith/telemetry.hpp"

namespace worldsmith {

struct ReplayOptions {
    std::chrono::milliseconds job_timeout{120000};
    std::chrono::milliseconds poll_interval{5};
};

struct ReplayReport {
    std::map<std::string, std::string> sessions;  // recorded id -> replayed id
    std::size_t events_applied = 0;
    std::size_t jobs = 0;
    std::size_t failed_jobs = 0;
};

/// Replays recorded telemetry through the service API at `base_url`.
///
/// Events are grouped by session and applied in (timestamp, event_id) order.
/// Each session log must start with its layout event. Generations and blends
/// reuse the recorded seeds and are awaited before the next event, so a
/// deterministic backend reproduces trees and image hashes exactly as long as
/// the recording did not interleave edits with running jobs. Throws on the
/// first request the server rejects.
ReplayReport replay_events(std::span<const InteractionEvent> events, const std::string& base_url,
                           const ReplayOptions& options = {});

}  // namespace worldsmith
