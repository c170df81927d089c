#include "worldsmith/http_backend.hpp"

#include <httplib.h>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

[[noreturn]] void raise_from_response(const httplib::Result& res, const std::string& what) {
    if (!res) {
        fail(ErrorCode::unavailable, what + ": " + httplib::to_string(res.error()));
    }
    std::string message = res->body;
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("error")) message = j["error"].get<std::string>();
    switch (res->status) {
        case 404: fail(ErrorCode::not_found, message);
        case 400: fail(ErrorCode::unsupported, message);
        case 422: fail(ErrorCode::validation, message);
        default: fail(ErrorCode::unavailable, what + ": HTTP " + std::to_string(res->status) + " " + message);
    }
}

nlohmann::json parse_body(const httplib::Result& res) {
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded()) fail(ErrorCode::validation, "backend returned malformed JSON");
    return j;
}

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

struct HttpBackend::Impl {
    std::string base_url;
    httplib::Client client;

    Impl(std::string url, int timeout) : base_url(url), client(url) {
        client.set_connection_timeout(timeout, 0);
        client.set_read_timeout(timeout, 0);
        client.set_write_timeout(timeout, 0);
    }
};

HttpBackend::HttpBackend(std::string base_url, int timeout_seconds)
    : impl_(std::make_unique<Impl>(std::move(base_url), timeout_seconds)) {}

HttpBackend::~HttpBackend() = default;

BackendDescriptor HttpBackend::describe() {
    auto res = impl_->client.Get("/v1/health");
    if (!res || res->status != 200) raise_from_response(res, "health check failed");
    auto d = decode_health(parse_body(res));
    d.endpoint = impl_->base_url;
    return d;
}

std::string HttpBackend::submit(const GenerationRequest& request) {
    validate_request(request);
    auto res = impl_->client.Post("/v1/generate", encode_request(request).dump(), "application/json");
    if (!res || res->status != 200) raise_from_response(res, "submit failed");
    const auto body = parse_body(res);
    if (!body.contains("job_id") || !body["job_id"].is_string()) {
        fail(ErrorCode::validation, "backend reply lacks job_id");
    }
    return body["job_id"].get<std::string>();
}

GenerationJob HttpBackend::poll(const std::string& job_id) {
    auto res = impl_->client.Get("/v1/jobs/" + job_id);
    if (!res || res->status != 200) raise_from_response(res, "poll failed");
    return decode_job_status(job_id, parse_body(res));
}

struct BackendServer::Impl {
    Backend& backend;
    httplib::Server server;
    std::thread thread;

    explicit Impl(Backend& b) : backend(b) {
        server.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                auto body = nlohmann::json::parse(req.body, nullptr, false);
                if (body.is_discarded()) fail(ErrorCode::validation, "request body is not JSON");
                const auto request = decode_request(body);
                send_json(res, 200, {{"job_id", backend.submit(request)}});
            } catch (const Error& e) {
                send_json(res, http_status(e.code()), {{"error", e.what()}});
            }
        });
        server.Get(R"(/v1/jobs/([A-Za-z0-9_\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                send_json(res, 200, encode_job_status(backend.poll(req.matches[1])));
            } catch (const Error& e) {
                send_json(res, http_status(e.code()), {{"error", e.what()}});
            }
        });
        server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
            try {
                send_json(res, 200, encode_health(backend.describe()));
            } catch (const Error& e) {
                send_json(res, http_status(e.code()), {{"error", e.what()}});
            }
        });
    }
};

BackendServer::BackendServer(Backend& backend) : impl_(std::make_unique<Impl>(backend)) {}

BackendServer::~BackendServer() { stop(); }

int BackendServer::start(const std::string& host, int port) {
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

void BackendServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        fail(ErrorCode::unavailable, "cannot listen on " + host + ":" + std::to_string(port));
    }
}

void BackendServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace worldsmith
