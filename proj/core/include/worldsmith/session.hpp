#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/canonical.hpp"
#include "worldsmith/inputs.hpp"
#include "worldsmith/telemetry.hpp"
#include "worldsmith/tree.hpp"

namespace worldsmith {

inline constexpr Size default_canvas_size{1024, 1024};
inline constexpr int default_tile_count = 4;
inline constexpr int default_grid_gap = 32;
inline constexpr int session_format_version = 1;

/// Tile placement in global canvas pixels.
struct TileRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    std::int64_t area() const noexcept { return static_cast<std::int64_t>(w) * h; }
    bool contains(int px, int py) const noexcept { return px >= x && py >= y && px < x + w && py < y + h; }
    bool intersects(const TileRect& o) const noexcept {
        return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h;
    }
    bool inside(Size canvas) const noexcept {
        return x >= 0 && y >= 0 && w > 0 && h > 0 && static_cast<std::int64_t>(x) + w <= canvas.width &&
               static_cast<std::int64_t>(y) + h <= canvas.height;
    }
    friend bool operator==(const TileRect&, const TileRect&) = default;
};

struct Tile {
    std::string tile_id;
    TileRect rect;
    std::optional<ImageRef> current_image;
    TileTree tree;
    GenerationInputs inputs;  // working copy, possibly uncommitted
    int grid_slot = 0;
    bool in_default_slot = true;  // cleared once the user moves or resizes the tile
};

/// A finished or pending blend of the whole canvas. Tiles are never modified
/// by blending; results live here.
struct BlendRecord {
    std::string blend_id;
    std::string job_id;
    std::string prompt;
    std::uint64_t seed = 0;
    std::string state;  // queued | running | done | failed
    std::vector<ImageRef> results;
    std::string error;
    std::int64_t created_at = 0;

    friend bool operator==(const BlendRecord&, const BlendRecord&) = default;
};

struct SessionConfig {
    Size canvas_size = default_canvas_size;
    int tile_count = default_tile_count;
    Size generation_resolution = default_generation_resolution;
    int grid_gap = default_grid_gap;
    std::optional<double> blur_sigma;  // empty: derived from the grid gap
};

struct WorldSession {
    std::string session_id;
    std::vector<Tile> tiles;
    std::string global_blend_prompt;
    int grid_gap = default_grid_gap;
    Size canvas_size = default_canvas_size;
    Size generation_resolution = default_generation_resolution;
    std::optional<double> blur_sigma;
    std::vector<BlendRecord> blends;
    std::int64_t created_at = 0;
    std::uint64_t version = 0;  // optimistic-concurrency token, bumped per mutation

    Tile& tile(const std::string& tile_id);
    const Tile& tile(const std::string& tile_id) const;
};

struct GridShape {
    int cols = 1;
    int rows = 1;
};

/// Near-square grid: cols = ceil(sqrt(n)), rows = ceil(n / cols).
GridShape grid_shape(int tile_count);

/// Cell of `slot` (row-major) shrunk by gap/2 on the leading side and the rest
/// of the gap on the trailing side. Throws invalid_argument when the gap
/// leaves no room.
TileRect default_tile_rect(Size canvas, GridShape shape, int slot, int gap);

std::string new_session_id();

WorldSession create_session(const SessionConfig& config, std::string session_id = new_session_id(),
                            std::int64_t now = now_ms());

/// Replaces the tile rect. Overlap with other tiles is allowed.
void move_resize_tile(WorldSession& session, const std::string& tile_id, const TileRect& rect,
                      const EventEmitter& emit = {});

/// Re-spaces tiles still in their default grid slot; moved tiles keep their
/// rects. Fails without changes when the gap is negative or leaves no room.
void set_grid_gap(WorldSession& session, int gap, const EventEmitter& emit = {});

/// Persisted session document. Working inputs are stored as canonical
/// snapshots, trees by reference to a separate document.
nlohmann::json session_to_json(const WorldSession& session);
nlohmann::json trees_to_json(const WorldSession& session);
WorldSession session_from_json(const nlohmann::json& session_doc, const nlohmann::json& trees_doc,
                               const SketchResolver& sketches = {});

nlohmann::json rect_to_json(const TileRect& rect);
TileRect rect_from_json(const nlohmann::json& j);
/// {"width": w, "height": h}
nlohmann::json size_to_json(Size size);
Size size_from_json(const nlohmann::json& j);
nlohmann::json blend_to_json(const BlendRecord& blend);
BlendRecord blend_from_json(const nlohmann::json& j);

}  // namespace worldsmith
