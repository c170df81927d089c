#include "worldsmith/http_service.hpp"

#include <thread>

#include <httplib.h>

#include "worldsmith/codec.hpp"
#include "worldsmith/compositor.hpp"
#include "worldsmith/error.hpp"

namespace worldsmith {

using nlohmann::json;

json tree_view_json(const TileTree& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
        json results = json::array();
        for (const auto& r : n.results) results.push_back(image_ref_to_json(r));
        nodes.push_back({{"node_id", n.node_id},
                         {"parent_id", n.parent_id ? json(*n.parent_id) : json(nullptr)},
                         {"children", n.children},
                         {"label", n.label},
                         {"digest", n.snapshot.digest},
                         {"results", std::move(results)},
                         {"seeds", n.seeds},
                         {"created_at", n.created_at},
                         {"depth", tree.depth(n.node_id)},
                         {"sibling_index", tree.sibling_index(n.node_id)},
                         {"thumbnail", n.results.empty() ? json(nullptr) : json(n.results.front().image_id)}});
    }
    return {{"root_id", tree.root_id()}, {"selected_id", tree.selected_id()}, {"nodes", std::move(nodes)}};
}

json session_view_json(const WorldSession& s) {
    json tiles = json::array();
    for (const auto& t : s.tiles) {
        tiles.push_back({{"tile_id", t.tile_id},
                         {"rect", rect_to_json(t.rect)},
                         {"grid_slot", t.grid_slot},
                         {"in_default_slot", t.in_default_slot},
                         {"current_image", t.current_image ? image_ref_to_json(*t.current_image) : json(nullptr)},
                         {"inputs", inputs_to_json(t.inputs)},
                         {"selected_node", t.tree.selected_id()},
                         {"node_count", t.tree.size()}});
    }
    json blends = json::array();
    for (const auto& b : s.blends) blends.push_back(blend_to_json(b));
    return {{"session_id", s.session_id},
            {"version", s.version},
            {"created_at", s.created_at},
            {"canvas_size", size_to_json(s.canvas_size)},
            {"generation_resolution", size_to_json(s.generation_resolution)},
            {"grid_gap", s.grid_gap},
            {"blur_sigma", s.blur_sigma ? json(*s.blur_sigma) : json(nullptr)},
            {"effective_blur_sigma", s.blur_sigma.value_or(default_blur_sigma(s.grid_gap))},
            {"global_blend_prompt", s.global_blend_prompt},
            {"tiles", std::move(tiles)},
            {"blends", std::move(blends)}};
}

SessionConfig session_config_from_json(const json& body, const SessionConfig& defaults) {
    if (!body.is_object()) fail(ErrorCode::invalid_argument, "session config must be an object");
    SessionConfig c = defaults;
    auto field = [&](const char* name, auto&& apply) {
        if (!body.contains(name) || body[name].is_null()) return;
        try {
            apply(body[name]);
        } catch (const json::exception&) {
            fail(ErrorCode::invalid_argument, std::string("malformed field ") + name);
        } catch (const Error&) {
            fail(ErrorCode::invalid_argument, std::string("malformed field ") + name);
        }
    };
    field("canvas_size", [&](const json& v) { c.canvas_size = size_from_json(v); });
    field("tile_count", [&](const json& v) { c.tile_count = v.get<int>(); });
    field("grid_gap", [&](const json& v) { c.grid_gap = v.get<int>(); });
    field("generation_resolution", [&](const json& v) { c.generation_resolution = size_from_json(v); });
    field("blur_sigma", [&](const json& v) { c.blur_sigma = v.get<double>(); });
    if (c.tile_count > 64) fail(ErrorCode::invalid_argument, "tile_count must be at most 64");
    if (c.canvas_size.width > 16384 || c.canvas_size.height > 16384) {
        fail(ErrorCode::invalid_argument, "canvas_size must be at most 16384 per side");
    }
    if (c.generation_resolution.width > max_request_edge || c.generation_resolution.height > max_request_edge) {
        fail(ErrorCode::invalid_argument,
             "generation_resolution must be at most " + std::to_string(max_request_edge) + " per side");
    }
    return c;
}

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    send_json(res, http_status(code), {{"error", std::string(to_string(code))}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::invalid_argument, "request body is not JSON");
    if (!j.is_object()) fail(ErrorCode::invalid_argument, "request body must be a JSON object");
    return j;
}

std::optional<std::uint64_t> opt_u64(const json& body, const char* name) {
    if (!body.contains(name) || body[name].is_null()) return std::nullopt;
    if (!body[name].is_number_unsigned() && !(body[name].is_number_integer() && body[name].get<std::int64_t>() >= 0)) {
        fail(ErrorCode::invalid_argument, std::string(name) + " must be a non-negative integer");
    }
    return body[name].get<std::uint64_t>();
}

template <typename T>
T required(const json& body, const char* name) {
    if (!body.contains(name)) fail(ErrorCode::invalid_argument, std::string("missing field ") + name);
    try {
        return body[name].get<T>();
    } catch (const json::exception&) {
        fail(ErrorCode::invalid_argument, std::string("malformed field ") + name);
    }
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
        try {
            h(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const json::exception& e) {
            send_error(res, ErrorCode::invalid_argument, e.what());
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
        }
    };
}

json node_change_json(const Engine::NodeChange& c) {
    return {{"node_id", c.node_id}, {"inputs", inputs_to_json(c.inputs)}, {"version", c.version}};
}

}  // namespace

struct HttpService::Impl {
    Engine& engine;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Engine& e) : engine(e) { routes(); }

    void routes() {
        const std::string sid = R"(/api/sessions/([A-Za-z0-9_\-]+))";
        const std::string tid = sid + R"(/tiles/([A-Za-z0-9_\-]+))";

        server.Get("/api/health", guarded([this](const httplib::Request&, httplib::Response& res) {
                       json backend;
                       try {
                           backend = encode_health(engine.backend_descriptor());
                       } catch (const std::exception& e) {
                           backend = {{"healthy", false}, {"error", e.what()}};
                       }
                       send_json(res, 200,
                                 {{"ok", true},
                                  {"batch_count", engine.options().batch_count},
                                  {"generation_resolution", size_to_json(engine.options().generation_resolution)},
                                  {"backend", backend}});
                   }));

        server.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                       send_json(res, 200, {{"sessions", engine.session_ids()}});
                   }));

        server.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto config = session_config_from_json(parse_body(req), engine.default_session_config());
                        const auto s = engine.create_session(config);
                        send_json(res, 201,
                                  {{"session_id", s.session_id}, {"version", s.version}, {"state", session_view_json(s)}});
                    }));

        server.Get(sid, guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, 200, session_view_json(engine.session(req.matches[1])));
                   }));

        server.Patch(tid + "/inputs", guarded([this](const httplib::Request& req, httplib::Response& res) {
                         const auto body = parse_body(req);
                         const auto expected = opt_u64(body, "expected_version");
                         if (!expected) fail(ErrorCode::invalid_argument, "missing field expected_version");
                         const auto patch = inputs_patch_from_json(body);
                         const auto version = engine.update_inputs(req.matches[1], req.matches[2], patch, expected);
                         const auto s = engine.session(req.matches[1]);
                         send_json(res, 200,
                                   {{"version", version}, {"inputs", inputs_to_json(s.tile(req.matches[2]).inputs)}});
                     }));

        server.Put(tid + "/rect", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto body = parse_body(req);
                       if (!body.contains("rect")) fail(ErrorCode::invalid_argument, "missing field rect");
                       const auto version = engine.move_tile(req.matches[1], req.matches[2],
                                                             rect_from_json(body["rect"]),
                                                             opt_u64(body, "expected_version"));
                       send_json(res, 200, {{"version", version}});
                   }));

        server.Put(tid + "/image", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto body = parse_body(req);
                       const auto version =
                           engine.set_tile_image(req.matches[1], req.matches[2], required<std::string>(body, "image_id"),
                                                 opt_u64(body, "expected_version"));
                       send_json(res, 200, {{"version", version}});
                   }));

        server.Put(sid + "/grid-gap", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto body = parse_body(req);
                       const auto version = engine.set_grid_gap(req.matches[1], required<int>(body, "grid_gap"),
                                                                opt_u64(body, "expected_version"));
                       send_json(res, 200, {{"version", version}});
                   }));

        server.Put(sid + "/blend-prompt", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto body = parse_body(req);
                       const auto version = engine.set_blend_prompt(
                           req.matches[1], required<std::string>(body, "prompt"), opt_u64(body, "expected_version"));
                       send_json(res, 200, {{"version", version}});
                   }));

        server.Post(sid + "/images", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        Image img;
                        try {
                            img = decode_png(base64_decode(required<std::string>(body, "png_b64")));
                        } catch (const Error& e) {
                            fail(ErrorCode::invalid_argument, std::string("png_b64: ") + e.what());
                        }
                        send_json(res, 201, image_ref_to_json(engine.put_image(req.matches[1], img)));
                    }));

        server.Post(tid + "/generate", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        std::optional<int> count;
                        if (body.contains("count") && !body["count"].is_null()) count = required<int>(body, "count");
                        const auto job =
                            engine.generate(req.matches[1], req.matches[2], opt_u64(body, "seed"), count);
                        send_json(res, 202, {{"job_id", job}});
                    }));

        server.Post(sid + "/blend", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto job_id = engine.blend(req.matches[1], opt_u64(body, "seed"));
                        const auto info = engine.job(job_id);
                        send_json(res, 202, {{"job_id", job_id}, {"blend_id", info.blend_id.value_or("")}});
                    }));

        server.Get(sid + "/blends", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       json out = json::array();
                       for (const auto& b : engine.session(req.matches[1]).blends) out.push_back(blend_to_json(b));
                       send_json(res, 200, {{"blends", std::move(out)}});
                   }));

        server.Get(tid + "/tree", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto s = engine.session(req.matches[1]);
                       send_json(res, 200, tree_view_json(s.tile(req.matches[2]).tree));
                   }));

        server.Post(tid + "/tree/nodes", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto mode_name = body.value("mode", std::string("copy"));
                        ManualMode mode;
                        if (mode_name == "copy") {
                            mode = ManualMode::copy;
                        } else if (mode_name == "blank") {
                            mode = ManualMode::blank;
                        } else {
                            fail(ErrorCode::invalid_argument, "mode must be copy or blank");
                        }
                        const auto change = engine.add_node(req.matches[1], req.matches[2],
                                                            required<std::string>(body, "at"), mode,
                                                            opt_u64(body, "expected_version"));
                        send_json(res, 201, node_change_json(change));
                    }));

        server.Post(tid + "/tree/select", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        const auto body = parse_body(req);
                        const auto change = engine.select_node(req.matches[1], req.matches[2],
                                                               required<std::string>(body, "node_id"),
                                                               opt_u64(body, "expected_version"));
                        send_json(res, 200, node_change_json(change));
                    }));

        server.Get(sid + "/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       res.status = 200;
                       res.set_content(engine.events_ndjson(req.matches[1]), "application/x-ndjson");
                   }));

        server.Get(R"(/api/jobs/([A-Za-z0-9_\-]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto info = engine.job(req.matches[1]);
                       auto body = job_to_json(info);
                       const bool thumbs = !req.has_param("thumbnails") || req.get_param_value("thumbnails") != "0";
                       if (thumbs && info.state == JobState::done) {
                           json list = json::array();
                           for (const auto& r : info.results) {
                               auto img = engine.image(r.image_id);
                               list.push_back(img ? json(base64_encode(encode_png(make_thumbnail(*img))))
                                                  : json(nullptr));
                           }
                           body["thumbnails"] = std::move(list);
                       }
                       send_json(res, 200, body);
                   }));

        server.Get(R"(/api/images/([0-9a-f]{64}))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       const bool thumb = req.has_param("thumbnail") && req.get_param_value("thumbnail") == "1";
                       std::optional<Bytes> png;
                       if (thumb) {
                           if (auto img = engine.image(id)) png = encode_png(make_thumbnail(*img));
                       } else {
                           png = engine.image_png(id);
                       }
                       if (!png) fail(ErrorCode::not_found, "unknown image '" + id + "'");
                       res.status = 200;
                       res.set_header("Cache-Control", "public, max-age=31536000, immutable");
                       res.set_header("ETag", "\"" + id + (thumb ? "-t" : "") + "\"");
                       res.set_content(std::string(png->begin(), png->end()), "image/png");
                   }));

        server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
            if (res.body.empty()) {
                send_json(res, res.status, {{"error", res.status == 404 ? "not-found" : "http"},
                                            {"message", "no such route"}});
            }
        });
    }
};

HttpService::HttpService(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) fail(ErrorCode::unavailable, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpService::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        fail(ErrorCode::unavailable, "cannot listen on " + host + ":" + std::to_string(port));
    }
}

void HttpService::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace worldsmith
