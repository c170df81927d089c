#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/compositor.hpp"
#include "worldsmith/image_store.hpp"
#include "worldsmith/protocol.hpp"
#include "worldsmith/session.hpp"
#include "worldsmith/telemetry.hpp"

namespace worldsmith {

struct EngineOptions {
    std::filesystem::path data_dir;
    int batch_count = default_batch_count;
    Size generation_resolution = default_generation_resolution;
    std::optional<double> blur_sigma;  // empty: derived from each session's grid gap
    bool fsync = true;
    std::chrono::milliseconds poll_interval{10};
};

/// Partial update of a tile's working inputs. Absent members stay untouched;
/// the nested optionals distinguish "clear" from "leave alone".
struct InputsPatch {
    std::optional<std::string> scene_prompt;
    std::optional<std::vector<RegionSpec>> regions;
    std::optional<std::optional<SketchLayer>> sketch;
    std::optional<std::optional<std::string>> base_image_id;
    std::optional<std::optional<std::uint64_t>> seed;
    std::optional<double> img2img_strength;
};

/// {scene_prompt?, regions?, sketch?: {png_b64} | null, base_image_id?: id | null,
///  seed?: n | null, img2img_strength?}
InputsPatch inputs_patch_from_json(const nlohmann::json& j);
nlohmann::json inputs_patch_to_json(const InputsPatch& patch);

/// Readable view of working inputs; the sketch is referenced by image id.
nlohmann::json inputs_to_json(const GenerationInputs& inputs);

/// Engine-side view of one backend job.
struct JobInfo {
    std::string job_id;
    std::string backend_job_id;
    std::string session_id;
    std::optional<std::string> tile_id;   // empty for blends
    std::optional<std::string> blend_id;  // set for blends
    RequestKind kind = RequestKind::text2img;
    std::uint64_t seed = 0;
    int count = 0;
    JobState state = JobState::queued;
    std::vector<ImageRef> results;
    std::string error;
    std::optional<std::string> node_id;  // tree node the results were recorded on

    bool finished() const noexcept { return state == JobState::done || state == JobState::failed; }
};

nlohmann::json job_to_json(const JobInfo& job);

/// Kind inference: a sketch or base image makes img2img (regions ride along),
/// regions alone make region_guided, neither makes text2img.
RequestKind infer_request_kind(const GenerationInputs& inputs);

/// Builds the backend request for a tile's working inputs. The init image is
/// the base image (resampled to `resolution`) or white, overlaid with the
/// covered sketch pixels. Region masks come from extract_binary_masks over the
/// composed segmentation.
GenerationRequest build_tile_request(const GenerationInputs& inputs, Size resolution, std::uint64_t seed,
                                     int count, const ImageLookup& images);

/// Stateful orchestration of sessions, jobs, persistence and telemetry.
///
/// Each session lives in `<data_dir>/sessions/<id>/` as session.json,
/// tree.json, events.ndjson (+ events.idx) and images/. Every mutation is
/// serialized per session, bumps the session version, and is persisted before
/// the call returns. Passing `expected_version` turns a mutation into a
/// compare-and-swap that throws conflict on mismatch.
class Engine {
public:
    Engine(std::shared_ptr<Backend> backend, EngineOptions options);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    /// SessionConfig carrying the engine's resolution and blur settings.
    SessionConfig default_session_config() const;
    /// Emits a modify_tile event with op "layout" describing the new session,
    /// so a telemetry log alone is enough to rebuild it.
    WorldSession create_session(const SessionConfig& config);
    WorldSession session(const std::string& session_id) const;
    std::vector<std::string> session_ids() const;

    std::uint64_t update_inputs(const std::string& session_id, const std::string& tile_id, const InputsPatch& patch,
                                std::optional<std::uint64_t> expected_version = std::nullopt);
    std::uint64_t move_tile(const std::string& session_id, const std::string& tile_id, const TileRect& rect,
                            std::optional<std::uint64_t> expected_version = std::nullopt);
    std::uint64_t set_grid_gap(const std::string& session_id, int gap,
                               std::optional<std::uint64_t> expected_version = std::nullopt);
    std::uint64_t set_blend_prompt(const std::string& session_id, const std::string& prompt,
                                   std::optional<std::uint64_t> expected_version = std::nullopt);
    /// Picks the image a tile shows in the global view; it must already be in
    /// the session's image store.
    std::uint64_t set_tile_image(const std::string& session_id, const std::string& tile_id,
                                 const std::string& image_id,
                                 std::optional<std::uint64_t> expected_version = std::nullopt);

    /// Submits the tile's working inputs. Backend refusals become failed jobs.
    /// On completion the results are recorded in the tile tree and the first
    /// result becomes the tile image.
    std::string generate(const std::string& session_id, const std::string& tile_id,
                         std::optional<std::uint64_t> seed = std::nullopt, std::optional<int> count = std::nullopt);
    /// Blends the current tile images; results go to a new blend record.
    std::string blend(const std::string& session_id, std::optional<std::uint64_t> seed = std::nullopt);

    JobInfo job(const std::string& job_id) const;
    /// Blocks until the job finishes or the timeout expires; returns the last
    /// known state either way.
    JobInfo wait_job(const std::string& job_id,
                     std::chrono::milliseconds timeout = std::chrono::milliseconds(60000)) const;

    struct NodeChange {
        std::string node_id;
        GenerationInputs inputs;
        std::uint64_t version = 0;
    };
    /// Adds a manual node and loads its inputs into the editor.
    NodeChange add_node(const std::string& session_id, const std::string& tile_id, const std::string& at_node,
                        ManualMode mode, std::optional<std::uint64_t> expected_version = std::nullopt);
    /// Selects a node and loads its inputs into the editor.
    NodeChange select_node(const std::string& session_id, const std::string& tile_id, const std::string& node_id,
                           std::optional<std::uint64_t> expected_version = std::nullopt);

    std::vector<InteractionEvent> events(const std::string& session_id) const;
    std::string events_ndjson(const std::string& session_id) const;

    /// Looks the id up in every session's image store.
    std::optional<Image> image(const std::string& image_id) const;
    std::optional<Bytes> image_png(const std::string& image_id) const;
    /// Stores an image in a session's store (uploads, base images).
    ImageRef put_image(const std::string& session_id, const Image& image);

    BackendDescriptor backend_descriptor() const { return backend_->describe(); }
    const EngineOptions& options() const noexcept { return options_; }
    EventStore& event_store() noexcept { return *events_; }

private:
    struct Slot;
    struct PendingJob;

    std::shared_ptr<Slot> slot(const std::string& session_id) const;
    void load_existing();
    void persist(const Slot& slot) const;
    void check_version(const Slot& slot, std::optional<std::uint64_t> expected) const;
    void emit(const std::string& session_id, EventKind kind, const std::optional<std::string>& tile_id,
              nlohmann::json payload);
    std::string submit_job(JobInfo info, const GenerationRequest& request, std::shared_ptr<PendingJob> pending);
    void monitor_loop();
    void complete(const std::string& job_id, GenerationJob result);
    std::uint64_t draw_seed();

    std::shared_ptr<Backend> backend_;
    EngineOptions options_;
    std::unique_ptr<EventStore> events_;

    mutable std::mutex mu_;  // sessions_, jobs_, pending_, next_job_
    mutable std::condition_variable job_cv_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::map<std::string, JobInfo> jobs_;
    std::map<std::string, std::shared_ptr<PendingJob>> pending_;
    std::uint64_t next_job_ = 1;
    std::mutex rng_mu_;
    std::uint64_t rng_state_;

    bool stopping_ = false;
    std::condition_variable monitor_cv_;
    std::thread monitor_;
};

}  // namespace worldsmith
