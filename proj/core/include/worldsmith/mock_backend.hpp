#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "worldsmith/protocol.hpp"

namespace worldsmith {

/// Flat color the mock paints over a region described by `text`: the first
/// three bytes of FNV-1a(text), with the low bit of red forced to 1. Mock
/// noise textures always have an even red channel, so region pixels are
/// exactly identifiable.
Rgb mock_region_color(std::string_view text);

/// Seed of the procedural texture for image `index`: FNV-1a over the prompt,
/// then the little-endian seed, then the little-endian index.
std::uint64_t mock_texture_seed(std::string_view prompt, std::uint64_t seed, std::uint32_t index);

/// Value-noise texture (32 px lattice, integer bilinear interpolation), every
/// channel rounded down to an even value.
Image mock_texture(std::uint64_t texture_seed, Size size);

/// Deterministic stand-in for a diffusion model. Per image:
///  - start from mock_texture;
///  - blend: out = (init*(255-m) + texture*m + 127) / 255 with m the mask
///    sample, so m == 0 keeps the init pixel exactly;
///  - any other kind with an init image: mix init and texture by strength;
///  - finally paint each region's mask with mock_region_color(text).
std::vector<Image> mock_generate(const GenerationRequest& request);

/// In-process Backend running mock_generate on worker threads. With
/// `auto_run` off, jobs stay queued until run_pending() is called.
class MockBackend final : public Backend {
public:
    struct Options {
        std::string name = "mock";
        std::vector<RequestKind> kinds{std::begin(all_request_kinds), std::end(all_request_kinds)};
        Size max_resolution{2048, 2048};
        bool auto_run = true;
        int workers = 1;
        std::chrono::milliseconds latency{0};
    };

    MockBackend();
    explicit MockBackend(Options options);
    ~MockBackend() override;

    MockBackend(const MockBackend&) = delete;
    MockBackend& operator=(const MockBackend&) = delete;

    BackendDescriptor describe() override;
    std::string submit(const GenerationRequest& request) override;
    GenerationJob poll(const std::string& job_id) override;

    /// Runs queued jobs on the calling thread; returns how many ran.
    std::size_t run_pending();
    /// The next job to run fails with this message instead of generating.
    void fail_next(std::string error);

private:
    struct Entry {
        GenerationJob job;
        GenerationRequest request;
    };

    void worker_loop();
    void run_one(const std::string& job_id);

    Options options_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::map<std::string, Entry> jobs_;
    std::deque<std::string> queue_;
    std::optional<std::string> fail_next_;
    std::uint64_t next_id_ = 1;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

}  // namespace worldsmith
