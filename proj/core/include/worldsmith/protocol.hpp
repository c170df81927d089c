#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/codec.hpp"
#include "worldsmith/image.hpp"
#include "worldsmith/inputs.hpp"

namespace worldsmith {

inline constexpr int default_batch_count = 12;
inline constexpr int max_batch_count = 64;
inline constexpr int max_request_edge = 4096;

enum class RequestKind : std::uint8_t { text2img = 0, img2img = 1, region_guided = 2, blend = 3 };

inline constexpr RequestKind all_request_kinds[] = {RequestKind::text2img, RequestKind::img2img,
                                                    RequestKind::region_guided, RequestKind::blend};

std::string_view to_string(RequestKind kind) noexcept;
RequestKind request_kind_from_string(std::string_view name);

struct RegionPrompt {
    BinaryMask mask;
    std::string text;

    friend bool operator==(const RegionPrompt&, const RegionPrompt&) = default;
};

/// One backend call. Images cross the wire as PNG: region masks 1-bit,
/// the blend mask 8-bit grayscale, init images 8-bit RGB.
struct GenerationRequest {
    RequestKind kind = RequestKind::text2img;
    std::string prompt;
    std::vector<RegionPrompt> regions;
    std::optional<Image> init_image;  // RGB
    std::optional<Image> mask_image;  // 8-bit gray, 255 = synthesize
    double strength = default_img2img_strength;
    std::uint64_t seed = 0;
    int count = default_batch_count;
    Size resolution = default_generation_resolution;

    friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

/// Throws validation with a message naming the violated invariant.
void validate_request(const GenerationRequest& request);

/// Fixed-order binary encoding; the basis of request_digest.
Bytes canonical_request_bytes(const GenerationRequest& request);
/// 64-bit FNV-1a over canonical_request_bytes.
std::uint64_t request_digest(const GenerationRequest& request);

/// `POST /v1/generate` body.
nlohmann::json encode_request(const GenerationRequest& request);
GenerationRequest decode_request(const nlohmann::json& body);

enum class JobState { queued, running, done, failed };

std::string_view to_string(JobState state) noexcept;
JobState job_state_from_string(std::string_view name);

struct JobTimings {
    std::int64_t submitted_ms = 0;
    std::int64_t started_ms = 0;
    std::int64_t finished_ms = 0;
};

struct GenerationJob {
    std::string job_id;
    std::uint64_t request_digest = 0;
    JobState state = JobState::queued;
    std::vector<Image> images;  // set when done
    std::string error;          // set when failed
    JobTimings timings;

    bool finished() const noexcept { return state == JobState::done || state == JobState::failed; }
};

/// `GET /v1/jobs/{id}` body.
nlohmann::json encode_job_status(const GenerationJob& job);
GenerationJob decode_job_status(const std::string& job_id, const nlohmann::json& body);

struct BackendDescriptor {
    std::string name;
    std::string endpoint;
    std::vector<RequestKind> kinds;
    Size max_resolution{2048, 2048};
    bool healthy = true;

    bool supports(RequestKind kind) const noexcept;
};

/// `GET /v1/health` body.
nlohmann::json encode_health(const BackendDescriptor& d);
BackendDescriptor decode_health(const nlohmann::json& body);

/// Pixel synthesis service. submit() validates, queues and returns a fresh
/// job id (identical requests are never deduplicated); poll() reports the job.
/// Implementations are safe for concurrent callers.
class Backend {
public:
    virtual ~Backend() = default;
    virtual BackendDescriptor describe() = 0;
    virtual std::string submit(const GenerationRequest& request) = 0;
    virtual GenerationJob poll(const std::string& job_id) = 0;
};

}  // namespace worldsmith
