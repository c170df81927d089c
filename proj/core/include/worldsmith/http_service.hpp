#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "worldsmith/engine.hpp"

namespace worldsmith {

/// Session state as the API reports it: layout, readable working inputs per
/// tile, selected node and blend records.
nlohmann::json session_view_json(const WorldSession& session);

/// Tree with per-node layout hints (depth, sibling index) and the first
/// result as thumbnail reference.
nlohmann::json tree_view_json(const TileTree& tree);

/// SessionConfig from a create-session body; absent fields keep `defaults`.
SessionConfig session_config_from_json(const nlohmann::json& body, const SessionConfig& defaults);

/// JSON-over-HTTP facade of an Engine.
///
///   GET    /api/health
///   GET    /api/sessions
///   POST   /api/sessions                               {canvas_size?, tile_count?, grid_gap?, ...}
///   GET    /api/sessions/{sid}
///   PATCH  /api/sessions/{sid}/tiles/{tid}/inputs      {expected_version, ...InputsPatch}
///   PUT    /api/sessions/{sid}/tiles/{tid}/rect        {rect, expected_version?}
///   PUT    /api/sessions/{sid}/tiles/{tid}/image       {image_id, expected_version?}
///   PUT    /api/sessions/{sid}/grid-gap                {grid_gap, expected_version?}
///   PUT    /api/sessions/{sid}/blend-prompt            {prompt, expected_version?}
///   POST   /api/sessions/{sid}/images                  {png_b64}
///   POST   /api/sessions/{sid}/tiles/{tid}/generate    {seed?, count?}
///   POST   /api/sessions/{sid}/blend                   {seed?}
///   GET    /api/sessions/{sid}/blends
///   GET    /api/sessions/{sid}/tiles/{tid}/tree
///   POST   /api/sessions/{sid}/tiles/{tid}/tree/nodes  {at, mode, expected_version?}
///   POST   /api/sessions/{sid}/tiles/{tid}/tree/select {node_id, expected_version?}
///   GET    /api/sessions/{sid}/events                  NDJSON
///   GET    /api/jobs/{job_id}[?thumbnails=0]
///   GET    /api/images/{image_id}[?thumbnail=1]        PNG
///
/// Errors answer {"error": code, "message": text} with the status from
/// http_status().
class HttpService {
public:
    explicit HttpService(Engine& engine);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace worldsmith
