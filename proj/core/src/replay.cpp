#include "worldsmith/replay.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "worldsmith/error.hpp"

namespace worldsmith {

using nlohmann::json;

namespace {

class ApiClient {
public:
    explicit ApiClient(const std::string& base_url) : client_(base_url) {
        client_.set_read_timeout(120, 0);
        client_.set_write_timeout(120, 0);
    }

    json call(const std::string& method, const std::string& path, const json& body = nullptr) {
        httplib::Result res = [&] {
            const std::string payload = body.is_null() ? std::string() : body.dump();
            if (method == "GET") return client_.Get(path);
            if (method == "POST") return client_.Post(path, payload, "application/json");
            if (method == "PUT") return client_.Put(path, payload, "application/json");
            return client_.Patch(path, payload, "application/json");
        }();
        if (!res) fail(ErrorCode::unavailable, method + " " + path + ": " + httplib::to_string(res.error()));
        auto j = json::parse(res->body, nullptr, false);
        if (res->status >= 300) {
            std::string message = res->body;
            if (!j.is_discarded() && j.contains("message")) message = j["message"].get<std::string>();
            const ErrorCode code = res->status == 404   ? ErrorCode::not_found
                                   : res->status == 409 ? ErrorCode::conflict
                                   : res->status == 422 ? ErrorCode::invalid_argument
                                                        : ErrorCode::unavailable;
            fail(code, method + " " + path + " -> " + std::to_string(res->status) + ": " + message);
        }
        if (j.is_discarded()) fail(ErrorCode::validation, method + " " + path + ": malformed JSON reply");
        return j;
    }

private:
    httplib::Client client_;
};

struct SessionReplay {
    ApiClient& api;
    const ReplayOptions& options;
    ReplayReport& report;
    std::string sid;
    std::uint64_t version = 0;

    std::string base() const { return "/api/sessions/" + sid; }
    std::string tile(const InteractionEvent& e) const {
        if (!e.tile_id) fail(ErrorCode::validation, "event " + std::to_string(e.event_id) + " lacks tile_id");
        return base() + "/tiles/" + *e.tile_id;
    }

    void mutate(const std::string& method, const std::string& path, json body) {
        body["expected_version"] = version;
        const auto r = api.call(method, path, body);
        version = r.at("version").get<std::uint64_t>();
    }

    void refresh_version() { version = api.call("GET", base()).at("version").get<std::uint64_t>(); }

    void await(const std::string& job_id) {
        const auto deadline = std::chrono::steady_clock::now() + options.job_timeout;
        for (;;) {
            const auto j = api.call("GET", "/api/jobs/" + job_id + "?thumbnails=0");
            const auto state = j.at("state").get<std::string>();
            if (state == "done" || state == "failed") {
                ++report.jobs;
                if (state == "failed") ++report.failed_jobs;
                break;
            }
            if (std::chrono::steady_clock::now() > deadline) {
                fail(ErrorCode::unavailable, "job " + job_id + " did not finish in time");
            }
            std::this_thread::sleep_for(options.poll_interval);
        }
        refresh_version();
    }

    void apply(const InteractionEvent& e) {
        const auto& p = e.payload;
        switch (e.kind) {
            case EventKind::modify_text:
                if (p.contains("text")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"scene_prompt", p["text"]}});
                } else if (p.contains("blend_prompt")) {
                    mutate("PUT", base() + "/blend-prompt", {{"prompt", p["blend_prompt"]}});
                }
                break;
            case EventKind::modify_region:
                mutate("PATCH", tile(e) + "/inputs", {{"regions", p.at("regions")}});
                break;
            case EventKind::modify_sketch:
                if (p.contains("sketch_png_b64")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"sketch", {{"png_b64", p["sketch_png_b64"]}}}});
                } else if (p.contains("cleared")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"sketch", nullptr}});
                } else if (p.contains("base_image_id")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"base_image_id", p["base_image_id"]}});
                }
                break;
            case EventKind::modify_tile:
                if (p.contains("rect")) {
                    mutate("PUT", tile(e) + "/rect", {{"rect", p["rect"]}});
                } else if (p.contains("grid_gap")) {
                    mutate("PUT", base() + "/grid-gap", {{"grid_gap", p["grid_gap"]}});
                } else if (p.contains("image_id")) {
                    mutate("PUT", tile(e) + "/image", {{"image_id", p["image_id"]}});
                } else if (p.contains("seed")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"seed", p["seed"]}});
                } else if (p.contains("img2img_strength")) {
                    mutate("PATCH", tile(e) + "/inputs", {{"img2img_strength", p["img2img_strength"]}});
                }
                break;
            case EventKind::run_diffusion: {
                const auto r = api.call("POST", tile(e) + "/generate",
                                        {{"seed", p.at("seed")}, {"count", p.value("count", 0) > 0 ? p["count"] : json(nullptr)}});
                await(r.at("job_id").get<std::string>());
                break;
            }
            case EventKind::blend: {
                const auto r = api.call("POST", base() + "/blend", {{"seed", p.at("seed")}});
                await(r.at("job_id").get<std::string>());
                break;
            }
            case EventKind::tree_add:
                mutate("POST", tile(e) + "/tree/nodes", {{"at", p.at("at")}, {"mode", p.at("mode")}});
                break;
            case EventKind::tree_select:
                mutate("POST", tile(e) + "/tree/select", {{"node_id", p.at("node_id")}});
                break;
        }
        ++report.events_applied;
    }
};

}  // namespace

ReplayReport replay_events(std::span<const InteractionEvent> events, const std::string& base_url,
                           const ReplayOptions& options) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const InteractionEvent*>> by_session;
    for (const auto& e : events) {
        auto& list = by_session[e.session_id];
        if (list.empty()) order.push_back(e.session_id);
        list.push_back(&e);
    }

    ApiClient api(base_url);
    ReplayReport report;
    for (const auto& recorded : order) {
        auto& list = by_session[recorded];
        std::stable_sort(list.begin(), list.end(), [](const InteractionEvent* a, const InteractionEvent* b) {
            if (a->timestamp_ms != b->timestamp_ms) return a->timestamp_ms < b->timestamp_ms;
            return a->event_id < b->event_id;
        });
        const auto& first = *list.front();
        if (first.kind != EventKind::modify_tile || first.payload.value("op", std::string{}) != "layout") {
            fail(ErrorCode::validation, "session " + recorded + " log does not start with a layout event");
        }
        json config = first.payload;
        config.erase("op");
        const auto created = api.call("POST", "/api/sessions", config);

        SessionReplay s{api, options, report, created.at("session_id").get<std::string>(),
                        created.at("version").get<std::uint64_t>()};
        report.sessions[recorded] = s.sid;
        ++report.events_applied;
        for (std::size_t i = 1; i < list.size(); ++i) s.apply(*list[i]);
    }
    return report;
}

}  // namespace worldsmith
