#include "worldsmith/session.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "worldsmith/error.hpp"

namespace worldsmith {

Tile& WorldSession::tile(const std::string& tile_id) {
    for (auto& t : tiles) {
        if (t.tile_id == tile_id) return t;
    }
    fail(ErrorCode::not_found, "unknown tile '" + tile_id + "'");
}

const Tile& WorldSession::tile(const std::string& tile_id) const {
    return const_cast<WorldSession&>(*this).tile(tile_id);
}

GridShape grid_shape(int tile_count) {
    if (tile_count <= 0) fail(ErrorCode::invalid_argument, "tile_count must be positive");
    int cols = 1;
    while (cols * cols < tile_count) ++cols;
    const int rows = (tile_count + cols - 1) / cols;
    return {cols, rows};
}

TileRect default_tile_rect(Size canvas, GridShape shape, int slot, int gap) {
    if (gap < 0) fail(ErrorCode::invalid_argument, "grid_gap must be non-negative");
    const int cell_w = canvas.width / shape.cols;
    const int cell_h = canvas.height / shape.rows;
    const TileRect r{(slot % shape.cols) * cell_w + gap / 2, (slot / shape.cols) * cell_h + gap / 2,
                     cell_w - gap, cell_h - gap};
    if (r.w <= 0 || r.h <= 0) {
        fail(ErrorCode::invalid_argument, "grid_gap " + std::to_string(gap) + " exceeds the " +
                                              std::to_string(cell_w) + "x" + std::to_string(cell_h) +
                                              " grid cell");
    }
    return r;
}

std::string new_session_id() {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    return "s" + hex_u64(rng());
}

WorldSession create_session(const SessionConfig& config, std::string session_id, std::int64_t now) {
    if (config.canvas_size.width <= 0 || config.canvas_size.height <= 0) {
        fail(ErrorCode::invalid_argument, "canvas_size must be positive in both dimensions");
    }
    if (config.generation_resolution.width <= 0 || config.generation_resolution.height <= 0) {
        fail(ErrorCode::invalid_argument, "generation_resolution must be positive in both dimensions");
    }
    if (config.tile_count <= 0) fail(ErrorCode::invalid_argument, "tile_count must be positive");
    if (config.blur_sigma && *config.blur_sigma < 0) fail(ErrorCode::invalid_argument, "blur_sigma must be non-negative");
    if (!valid_session_id(session_id)) fail(ErrorCode::invalid_argument, "invalid session id");

    WorldSession s;
    s.session_id = std::move(session_id);
    s.canvas_size = config.canvas_size;
    s.generation_resolution = config.generation_resolution;
    s.grid_gap = config.grid_gap;
    s.blur_sigma = config.blur_sigma;
    s.created_at = now;
    const auto shape = grid_shape(config.tile_count);
    for (int i = 0; i < config.tile_count; ++i) {
        Tile t;
        t.tile_id = "t" + std::to_string(i);
        t.rect = default_tile_rect(config.canvas_size, shape, i, config.grid_gap);
        t.grid_slot = i;
        t.tree = TileTree(now);
        s.tiles.push_back(std::move(t));
    }
    return s;
}

void move_resize_tile(WorldSession& session, const std::string& tile_id, const TileRect& rect,
                      const EventEmitter& emit) {
    auto& t = session.tile(tile_id);
    if (!rect.inside(session.canvas_size)) {
        fail(ErrorCode::invalid_argument, "tile rect lies outside the canvas");
    }
    t.rect = rect;
    t.in_default_slot = false;
    if (emit) emit(EventKind::modify_tile, tile_id, {{"rect", rect_to_json(rect)}});
}

void set_grid_gap(WorldSession& session, int gap, const EventEmitter& emit) {
    if (gap < 0) fail(ErrorCode::invalid_argument, "grid_gap must be non-negative");
    const auto shape = grid_shape(static_cast<int>(session.tiles.size()));
    std::vector<TileRect> rects;
    for (const auto& t : session.tiles) {
        // Validates the gap against the grid even if every tile has been moved.
        rects.push_back(default_tile_rect(session.canvas_size, shape, t.grid_slot, gap));
    }
    if (session.tiles.empty()) default_tile_rect(session.canvas_size, shape, 0, gap);
    for (std::size_t i = 0; i < session.tiles.size(); ++i) {
        if (session.tiles[i].in_default_slot) session.tiles[i].rect = rects[i];
    }
    session.grid_gap = gap;
    if (emit) emit(EventKind::modify_tile, std::nullopt, {{"grid_gap", gap}});
}

nlohmann::json rect_to_json(const TileRect& rect) {
    return {{"x", rect.x}, {"y", rect.y}, {"w", rect.w}, {"h", rect.h}};
}

TileRect rect_from_json(const nlohmann::json& j) {
    try {
        return {j.at("x").get<int>(), j.at("y").get<int>(), j.at("w").get<int>(), j.at("h").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed rect: ") + e.what());
    }
}

nlohmann::json size_to_json(Size s) { return {{"width", s.width}, {"height", s.height}}; }

Size size_from_json(const nlohmann::json& j) {
    try {
        return {j.at("width").get<int>(), j.at("height").get<int>()};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed size: ") + e.what());
    }
}

nlohmann::json blend_to_json(const BlendRecord& b) {
    nlohmann::json results = nlohmann::json::array();
    for (const auto& r : b.results) results.push_back(image_ref_to_json(r));
    return {{"blend_id", b.blend_id}, {"job_id", b.job_id},   {"prompt", b.prompt},
            {"seed", b.seed},         {"state", b.state},     {"results", std::move(results)},
            {"error", b.error},       {"created_at", b.created_at}};
}

BlendRecord blend_from_json(const nlohmann::json& j) {
    BlendRecord b;
    b.blend_id = j.at("blend_id").get<std::string>();
    b.job_id = j.value("job_id", std::string{});
    b.prompt = j.value("prompt", std::string{});
    b.seed = j.value("seed", std::uint64_t{0});
    b.state = j.value("state", std::string{"queued"});
    for (const auto& r : j.value("results", nlohmann::json::array())) b.results.push_back(image_ref_from_json(r));
    b.error = j.value("error", std::string{});
    b.created_at = j.value("created_at", std::int64_t{0});
    return b;
}

nlohmann::json session_to_json(const WorldSession& s) {
    nlohmann::json tiles = nlohmann::json::array();
    std::vector<std::string> image_keys;
    for (const auto& t : s.tiles) {
        const auto snap = canonicalize_inputs(t.inputs);
        nlohmann::json tile{
            {"tile_id", t.tile_id},
            {"rect", rect_to_json(t.rect)},
            {"grid_slot", t.grid_slot},
            {"in_default_slot", t.in_default_slot},
            {"current_image", t.current_image ? image_ref_to_json(*t.current_image) : nlohmann::json(nullptr)},
            {"inputs", {{"snapshot", base64_encode(snap.bytes)}, {"digest", snap.digest}}},
        };
        if (t.current_image) image_keys.push_back(t.current_image->image_id);
        if (t.inputs.sketch) image_keys.push_back(t.inputs.sketch->content_id());
        for (const auto& n : t.tree.nodes()) {
            for (const auto& r : n.results) image_keys.push_back(r.image_id);
        }
        tiles.push_back(std::move(tile));
    }
    nlohmann::json blends = nlohmann::json::array();
    for (const auto& b : s.blends) {
        blends.push_back(blend_to_json(b));
        for (const auto& r : b.results) image_keys.push_back(r.image_id);
    }
    std::sort(image_keys.begin(), image_keys.end());
    image_keys.erase(std::unique(image_keys.begin(), image_keys.end()), image_keys.end());
    return {{"format_version", session_format_version},
            {"session_id", s.session_id},
            {"version", s.version},
            {"created_at", s.created_at},
            {"canvas_size", size_to_json(s.canvas_size)},
            {"generation_resolution", size_to_json(s.generation_resolution)},
            {"grid_gap", s.grid_gap},
            {"blur_sigma", s.blur_sigma ? nlohmann::json(*s.blur_sigma) : nlohmann::json(nullptr)},
            {"global_blend_prompt", s.global_blend_prompt},
            {"tiles", std::move(tiles)},
            {"tree", "tree.json"},
            {"blends", std::move(blends)},
            {"images", std::move(image_keys)}};
}

nlohmann::json trees_to_json(const WorldSession& s) {
    nlohmann::json trees = nlohmann::json::object();
    for (const auto& t : s.tiles) trees[t.tile_id] = t.tree.to_json();
    return {{"format_version", session_format_version}, {"trees", std::move(trees)}};
}

WorldSession session_from_json(const nlohmann::json& doc, const nlohmann::json& trees_doc,
                               const SketchResolver& sketches) {
    try {
        const int version = doc.at("format_version").get<int>();
        if (version != session_format_version) {
            fail(ErrorCode::validation, "unsupported session format_version " + std::to_string(version));
        }
        WorldSession s;
        s.session_id = doc.at("session_id").get<std::string>();
        s.version = doc.value("version", std::uint64_t{0});
        s.created_at = doc.value("created_at", std::int64_t{0});
        s.canvas_size = size_from_json(doc.at("canvas_size"));
        s.generation_resolution = size_from_json(doc.at("generation_resolution"));
        s.grid_gap = doc.at("grid_gap").get<int>();
        if (!doc.at("blur_sigma").is_null()) s.blur_sigma = doc["blur_sigma"].get<double>();
        s.global_blend_prompt = doc.value("global_blend_prompt", std::string{});
        const auto& trees = trees_doc.at("trees");
        for (const auto& j : doc.at("tiles")) {
            Tile t;
            t.tile_id = j.at("tile_id").get<std::string>();
            t.rect = rect_from_json(j.at("rect"));
            t.grid_slot = j.value("grid_slot", 0);
            t.in_default_slot = j.value("in_default_slot", true);
            if (!j.at("current_image").is_null()) t.current_image = image_ref_from_json(j["current_image"]);
            const auto snap = snapshot_from_bytes(base64_decode(j.at("inputs").at("snapshot").get<std::string>()));
            if (snap.digest != j.at("inputs").at("digest").get<std::string>()) {
                fail(ErrorCode::validation, "input snapshot digest mismatch on tile '" + t.tile_id + "'");
            }
            t.inputs = decode_snapshot(snap, sketches);
            t.tree = TileTree::from_json(trees.at(t.tile_id));
            s.tiles.push_back(std::move(t));
        }
        for (const auto& b : doc.value("blends", nlohmann::json::array())) s.blends.push_back(blend_from_json(b));
        return s;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::validation, std::string("malformed session document: ") + e.what());
    }
}

}  // namespace worldsmith
