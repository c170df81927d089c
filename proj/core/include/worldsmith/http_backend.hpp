#pragma once

#include <memory>
#include <string>
#include <thread>

#include "worldsmith/protocol.hpp"

namespace worldsmith {

/// Backend client speaking the `/v1` JSON-over-HTTP protocol.
class HttpBackend final : public Backend {
public:
    /// `base_url` like "http://127.0.0.1:7860".
    explicit HttpBackend(std::string base_url, int timeout_seconds = 30);
    ~HttpBackend() override;

    BackendDescriptor describe() override;
    std::string submit(const GenerationRequest& request) override;
    GenerationJob poll(const std::string& job_id) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Serves any Backend over the `/v1` protocol:
///   POST /v1/generate   -> {job_id}
///   GET  /v1/jobs/{id}  -> {state, images?, error?}
///   GET  /v1/health     -> {name, kinds, max_resolution, healthy}
class BackendServer {
public:
    explicit BackendServer(Backend& backend);
    ~BackendServer();

    BackendServer(const BackendServer&) = delete;
    BackendServer& operator=(const BackendServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port.
    int start(const std::string& host = "127.0.0.1", int port = 0);
    /// Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace worldsmith
