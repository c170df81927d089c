#include "worldsmith/mock_backend.hpp"

#include <algorithm>
#include <cmath>

#include "worldsmith/error.hpp"
#include "worldsmith/tree.hpp"

namespace worldsmith {

namespace {

constexpr int kLattice = 32;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint32_t lattice_value(std::uint64_t seed, std::int64_t gx, std::int64_t gy, int channel) {
    std::uint64_t h = splitmix64(seed ^ static_cast<std::uint64_t>(gx) * 0x9e3779b185ebca87ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(gy) * 0xc2b2ae3d27d4eb4fULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(channel + 1));
    return static_cast<std::uint32_t>(h & 0xFF);
}

std::uint64_t le_hash(std::uint64_t v, int bytes, std::uint64_t h) {
    std::uint8_t buf[8];
    for (int i = 0; i < bytes; ++i) buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return fnv1a64(std::span<const std::uint8_t>(buf, static_cast<std::size_t>(bytes)), h);
}

}  // namespace

Rgb mock_region_color(std::string_view text) {
    const std::uint64_t h = fnv1a64(text);
    return {static_cast<std::uint8_t>((h & 0xFF) | 1), static_cast<std::uint8_t>((h >> 8) & 0xFF),
            static_cast<std::uint8_t>((h >> 16) & 0xFF)};
}

std::uint64_t mock_texture_seed(std::string_view prompt, std::uint64_t seed, std::uint32_t index) {
    return le_hash(index, 4, le_hash(seed, 8, fnv1a64(prompt)));
}

Image mock_texture(std::uint64_t texture_seed, Size size) {
    Image img(size.width, size.height, 3);
    for (int y = 0; y < size.height; ++y) {
        const std::int64_t gy = y / kLattice;
        const std::uint32_t fy = static_cast<std::uint32_t>(y % kLattice);
        for (int x = 0; x < size.width; ++x) {
            const std::int64_t gx = x / kLattice;
            const std::uint32_t fx = static_cast<std::uint32_t>(x % kLattice);
            auto* p = img.pixel(x, y);
            for (int c = 0; c < 3; ++c) {
                const std::uint32_t v00 = lattice_value(texture_seed, gx, gy, c);
                const std::uint32_t v10 = lattice_value(texture_seed, gx + 1, gy, c);
                const std::uint32_t v01 = lattice_value(texture_seed, gx, gy + 1, c);
                const std::uint32_t v11 = lattice_value(texture_seed, gx + 1, gy + 1, c);
                const std::uint32_t v = (v00 * (kLattice - fx) * (kLattice - fy) + v10 * fx * (kLattice - fy) +
                                         v01 * (kLattice - fx) * fy + v11 * fx * fy) /
                                        (kLattice * kLattice);
                p[c] = static_cast<std::uint8_t>(v & 0xFE);
            }
        }
    }
    return img;
}

std::vector<Image> mock_generate(const GenerationRequest& request) {
    validate_request(request);
    const auto strength = static_cast<std::uint64_t>(std::llround(request.strength * 1e6));
    constexpr std::uint64_t kOne = 1000000;
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(request.count));
    for (int i = 0; i < request.count; ++i) {
        Image img = mock_texture(mock_texture_seed(request.prompt, request.seed, static_cast<std::uint32_t>(i)),
                                 request.resolution);
        if (request.kind == RequestKind::blend) {
            const auto& init = *request.init_image;
            const auto& mask = *request.mask_image;
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    const std::uint32_t m = mask.pixel(x, y)[0];
                    auto* d = img.pixel(x, y);
                    const auto* s = init.pixel(x, y);
                    for (int c = 0; c < 3; ++c) d[c] = static_cast<std::uint8_t>((s[c] * (255 - m) + d[c] * m + 127) / 255);
                }
            }
        } else if (request.init_image) {
            const auto& init = *request.init_image;
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    auto* d = img.pixel(x, y);
                    const auto* s = init.pixel(x, y);
                    for (int c = 0; c < 3; ++c) {
                        d[c] = static_cast<std::uint8_t>((s[c] * (kOne - strength) + d[c] * strength + kOne / 2) / kOne);
                    }
                }
            }
        }
        for (const auto& region : request.regions) {
            const Rgb color = mock_region_color(region.text);
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    if (region.mask.get(x, y)) img.set_rgb(x, y, color);
                }
            }
        }
        out.push_back(std::move(img));
    }
    return out;
}

MockBackend::MockBackend() : MockBackend(Options{}) {}

MockBackend::MockBackend(Options options) : options_(std::move(options)) {
    if (options_.auto_run) {
        for (int i = 0; i < std::max(1, options_.workers); ++i) workers_.emplace_back([this] { worker_loop(); });
    }
}

MockBackend::~MockBackend() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) t.join();
}

BackendDescriptor MockBackend::describe() {
    return {options_.name, "in-process", options_.kinds, options_.max_resolution, true};
}

std::string MockBackend::submit(const GenerationRequest& request) {
    if (std::find(options_.kinds.begin(), options_.kinds.end(), request.kind) == options_.kinds.end()) {
        fail(ErrorCode::unsupported, "backend '" + options_.name + "' does not support " +
                                         std::string(to_string(request.kind)));
    }
    validate_request(request);
    if (request.resolution.width > options_.max_resolution.width ||
        request.resolution.height > options_.max_resolution.height) {
        fail(ErrorCode::validation, "resolution exceeds the backend maximum");
    }
    std::string id;
    {
        std::lock_guard lock(mu_);
        id = "job-" + options_.name + "-" + std::to_string(next_id_++);
        Entry e;
        e.job.job_id = id;
        e.job.request_digest = request_digest(request);
        e.job.timings.submitted_ms = now_ms();
        e.request = request;
        jobs_.emplace(id, std::move(e));
        queue_.push_back(id);
    }
    cv_.notify_one();
    return id;
}

GenerationJob MockBackend::poll(const std::string& job_id) {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) fail(ErrorCode::not_found, "unknown job '" + job_id + "'");
    return it->second.job;
}

void MockBackend::fail_next(std::string error) {
    std::lock_guard lock(mu_);
    fail_next_ = std::move(error);
}

void MockBackend::run_one(const std::string& job_id) {
    GenerationRequest request;
    std::optional<std::string> forced_error;
    {
        std::lock_guard lock(mu_);
        auto& e = jobs_.at(job_id);
        e.job.state = JobState::running;
        e.job.timings.started_ms = now_ms();
        request = e.request;
        forced_error.swap(fail_next_);
    }
    if (options_.latency.count() > 0) std::this_thread::sleep_for(options_.latency);
    std::vector<Image> images;
    std::string error;
    if (forced_error) {
        error = *forced_error;
    } else {
        try {
            images = mock_generate(request);
        } catch (const std::exception& ex) {
            error = ex.what();
        }
    }
    std::lock_guard lock(mu_);
    auto& e = jobs_.at(job_id);
    e.job.timings.finished_ms = now_ms();
    if (error.empty()) {
        e.job.images = std::move(images);
        e.job.state = JobState::done;
    } else {
        e.job.error = std::move(error);
        e.job.state = JobState::failed;
    }
    e.request = {};
}

std::size_t MockBackend::run_pending() {
    std::size_t ran = 0;
    for (;;) {
        std::string id;
        {
            std::lock_guard lock(mu_);
            if (queue_.empty()) return ran;
            id = queue_.front();
            queue_.pop_front();
        }
        run_one(id);
        ++ran;
    }
}

void MockBackend::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
        }
        run_one(id);
    }
}

}  // namespace worldsmith
