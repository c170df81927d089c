#include "worldsmith/protocol.hpp"

#include <cmath>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

constexpr std::pair<RequestKind, std::string_view> kKindNames[] = {
    {RequestKind::text2img, "text2img"},
    {RequestKind::img2img, "img2img"},
    {RequestKind::region_guided, "region_guided"},
    {RequestKind::blend, "blend"},
};

[[noreturn]] void invalid(const std::string& what) { fail(ErrorCode::validation, what); }

void write_image(ByteWriter& w, const std::optional<Image>& img) {
    w.u8(img ? 1 : 0);
    if (!img) return;
    w.u8(static_cast<std::uint8_t>(img->channels()));
    w.u32(static_cast<std::uint32_t>(img->width()));
    w.u32(static_cast<std::uint32_t>(img->height()));
    w.blob(img->bytes());
}

Bytes pack_bits(const BinaryMask& mask) {
    Bytes out((static_cast<std::size_t>(mask.size().area()) + 7) / 8, 0);
    auto cells = mask.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

std::string png_b64(const Image& img) { return base64_encode(encode_png(img)); }

Image image_from_b64(const nlohmann::json& v, const char* field) {
    if (!v.is_string()) invalid(std::string(field) + " must be a base64 string");
    return decode_png(base64_decode(v.get<std::string>()));
}

}  // namespace

std::string_view to_string(RequestKind kind) noexcept {
    for (const auto& [k, n] : kKindNames) {
        if (k == kind) return n;
    }
    return "unknown";
}

RequestKind request_kind_from_string(std::string_view name) {
    for (const auto& [k, n] : kKindNames) {
        if (n == name) return k;
    }
    fail(ErrorCode::validation, "unknown request kind '" + std::string(name) + "'");
}

void validate_request(const GenerationRequest& r) {
    if (r.resolution.width <= 0 || r.resolution.height <= 0 || r.resolution.width > max_request_edge ||
        r.resolution.height > max_request_edge) {
        invalid("resolution must be positive and at most " + std::to_string(max_request_edge));
    }
    if (r.count < 1 || r.count > max_batch_count) {
        invalid("count must lie in [1, " + std::to_string(max_batch_count) + "]");
    }
    if (!(r.strength >= 0.0 && r.strength <= 1.0)) invalid("strength must lie in [0,1]");
    switch (r.kind) {
        case RequestKind::text2img:
            if (r.init_image) invalid("text2img request must not carry init_image");
            if (r.mask_image) invalid("text2img request must not carry mask_image");
            break;
        case RequestKind::img2img:
            if (!r.init_image) invalid("img2img request requires init_image");
            break;
        case RequestKind::region_guided:
            if (r.regions.empty()) invalid("region_guided request requires at least one region");
            break;
        case RequestKind::blend:
            if (!r.init_image) invalid("blend request requires init_image");
            if (!r.mask_image) invalid("blend request requires mask_image");
            break;
    }
    if (r.init_image && (r.init_image->channels() != 3 || r.init_image->size() != r.resolution)) {
        invalid("init_image must be RGB at the request resolution");
    }
    if (r.mask_image && (r.mask_image->channels() != 1 || r.mask_image->size() != r.resolution)) {
        invalid("mask_image must be 8-bit grayscale at the request resolution");
    }
    for (std::size_t i = 0; i < r.regions.size(); ++i) {
        if (r.regions[i].mask.size() != r.resolution) {
            invalid("region mask " + std::to_string(i) + " does not match the request resolution");
        }
    }
    if (r.regions.size() > 1) {
        std::vector<std::uint8_t> claimed(static_cast<std::size_t>(r.resolution.area()), 0);
        for (std::size_t i = 0; i < r.regions.size(); ++i) {
            auto cells = r.regions[i].mask.cells();
            for (std::size_t p = 0; p < cells.size(); ++p) {
                if (!cells[p]) continue;
                if (claimed[p]) invalid("region masks must be pairwise disjoint");
                claimed[p] = 1;
            }
        }
    }
}

Bytes canonical_request_bytes(const GenerationRequest& r) {
    ByteWriter w;
    for (char c : std::string_view("WSRQ")) w.u8(static_cast<std::uint8_t>(c));
    w.u8(1);
    w.u8(static_cast<std::uint8_t>(r.kind));
    w.str(r.prompt);
    w.u32(static_cast<std::uint32_t>(r.regions.size()));
    for (const auto& region : r.regions) {
        w.str(region.text);
        w.u32(static_cast<std::uint32_t>(region.mask.width()));
        w.u32(static_cast<std::uint32_t>(region.mask.height()));
        w.blob(pack_bits(region.mask));
    }
    write_image(w, r.init_image);
    write_image(w, r.mask_image);
    w.i64(std::llround(r.strength * 1e6));
    w.u64(r.seed);
    w.u32(static_cast<std::uint32_t>(r.count));
    w.u32(static_cast<std::uint32_t>(r.resolution.width));
    w.u32(static_cast<std::uint32_t>(r.resolution.height));
    return w.take();
}

std::uint64_t request_digest(const GenerationRequest& r) { return fnv1a64(canonical_request_bytes(r)); }

nlohmann::json encode_request(const GenerationRequest& r) {
    nlohmann::json regions = nlohmann::json::array();
    for (const auto& region : r.regions) {
        regions.push_back({{"mask_png_b64", base64_encode(encode_mask_png(region.mask))}, {"text", region.text}});
    }
    nlohmann::json body{{"kind", to_string(r.kind)},
                        {"prompt", r.prompt},
                        {"regions", std::move(regions)},
                        {"strength", r.strength},
                        {"seed", r.seed},
                        {"count", r.count},
                        {"width", r.resolution.width},
                        {"height", r.resolution.height}};
    if (r.init_image) body["init_image_png_b64"] = png_b64(*r.init_image);
    if (r.mask_image) body["mask_png_b64"] = png_b64(*r.mask_image);
    return body;
}

GenerationRequest decode_request(const nlohmann::json& body) {
    try {
        GenerationRequest r;
        r.kind = request_kind_from_string(body.at("kind").get<std::string>());
        r.prompt = body.value("prompt", std::string{});
        for (const auto& region : body.value("regions", nlohmann::json::array())) {
            const auto& m = region.at("mask_png_b64");
            if (!m.is_string()) invalid("regions[].mask_png_b64 must be a base64 string");
            r.regions.push_back({decode_mask_png(base64_decode(m.get<std::string>())),
                                 region.value("text", std::string{})});
        }
        if (body.contains("init_image_png_b64") && !body["init_image_png_b64"].is_null()) {
            r.init_image = image_from_b64(body["init_image_png_b64"], "init_image_png_b64");
        }
        if (body.contains("mask_png_b64") && !body["mask_png_b64"].is_null()) {
            r.mask_image = image_from_b64(body["mask_png_b64"], "mask_png_b64");
        }
        r.strength = body.value("strength", default_img2img_strength);
        r.seed = body.at("seed").get<std::uint64_t>();
        r.count = body.value("count", default_batch_count);
        r.resolution = {body.value("width", default_generation_resolution.width),
                        body.value("height", default_generation_resolution.height)};
        return r;
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed generation request: ") + e.what());
    }
}

std::string_view to_string(JobState state) noexcept {
    switch (state) {
        case JobState::queued: return "queued";
        case JobState::running: return "running";
        case JobState::done: return "done";
        case JobState::failed: return "failed";
    }
    return "failed";
}

JobState job_state_from_string(std::string_view name) {
    if (name == "queued") return JobState::queued;
    if (name == "running") return JobState::running;
    if (name == "done") return JobState::done;
    if (name == "failed") return JobState::failed;
    fail(ErrorCode::validation, "unknown job state '" + std::string(name) + "'");
}

nlohmann::json encode_job_status(const GenerationJob& job) {
    nlohmann::json body{{"state", to_string(job.state)}};
    if (job.state == JobState::done) {
        nlohmann::json images = nlohmann::json::array();
        for (const auto& img : job.images) images.push_back(png_b64(img));
        body["images"] = std::move(images);
    }
    if (job.state == JobState::failed) body["error"] = job.error;
    return body;
}

GenerationJob decode_job_status(const std::string& job_id, const nlohmann::json& body) {
    try {
        GenerationJob job;
        job.job_id = job_id;
        job.state = job_state_from_string(body.at("state").get<std::string>());
        for (const auto& img : body.value("images", nlohmann::json::array())) {
            job.images.push_back(image_from_b64(img, "images[]"));
        }
        job.error = body.value("error", std::string{});
        return job;
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed job status: ") + e.what());
    }
}

bool BackendDescriptor::supports(RequestKind kind) const noexcept {
    for (auto k : kinds) {
        if (k == kind) return true;
    }
    return false;
}

nlohmann::json encode_health(const BackendDescriptor& d) {
    nlohmann::json kinds = nlohmann::json::array();
    for (auto k : d.kinds) kinds.push_back(to_string(k));
    return {{"name", d.name},
            {"kinds", std::move(kinds)},
            {"max_resolution", {d.max_resolution.width, d.max_resolution.height}},
            {"healthy", d.healthy}};
}

BackendDescriptor decode_health(const nlohmann::json& body) {
    try {
        BackendDescriptor d;
        d.name = body.at("name").get<std::string>();
        for (const auto& k : body.at("kinds")) d.kinds.push_back(request_kind_from_string(k.get<std::string>()));
        const auto& mr = body.at("max_resolution");
        if (mr.is_array()) {
            d.max_resolution = {mr.at(0).get<int>(), mr.at(1).get<int>()};
        } else {
            d.max_resolution = {mr.get<int>(), mr.get<int>()};
        }
        d.healthy = body.value("healthy", true);
        return d;
    } catch (const nlohmann::json::exception& e) {
        invalid(std::string("malformed health document: ") + e.what());
    }
}

}  // namespace worldsmith
