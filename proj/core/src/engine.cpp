#include "worldsmith/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include <fcntl.h>
#include <unistd.h>

#include "worldsmith/codec.hpp"
#include "worldsmith/compositor.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/segmentation.hpp"

namespace worldsmith {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- JSON bindings ---------------------------------------------------------

namespace {

Image to_rgba_image(const Image& img) {
    if (img.channels() == 4) return img;
    Image out(img.width(), img.height(), 4, 255);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto* s = img.pixel(x, y);
            auto* d = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) d[c] = img.channels() == 1 ? s[0] : s[c];
        }
    }
    return out;
}

Image to_rgb_image(const Image& img) {
    if (img.channels() == 3) return img;
    Image out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const auto* s = img.pixel(x, y);
            auto* d = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) d[c] = img.channels() == 1 ? s[0] : s[c];
        }
    }
    return out;
}

}  // namespace

InputsPatch inputs_patch_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::invalid_argument, "inputs patch must be an object");
    InputsPatch p;
    try {
        if (j.contains("scene_prompt")) p.scene_prompt = j["scene_prompt"].get<std::string>();
        if (j.contains("regions")) p.regions = regions_from_json(j["regions"]);
        if (j.contains("sketch")) {
            const auto& s = j["sketch"];
            if (s.is_null()) {
                p.sketch = std::optional<SketchLayer>{};
            } else {
                const auto png = base64_decode(s.at("png_b64").get<std::string>());
                p.sketch = SketchLayer::from_rgba(to_rgba_image(decode_png(png)));
            }
        }
        if (j.contains("base_image_id")) {
            const auto& b = j["base_image_id"];
            p.base_image_id = b.is_null() ? std::optional<std::string>{} : b.get<std::string>();
        }
        if (j.contains("seed")) {
            const auto& s = j["seed"];
            p.seed = s.is_null() ? std::optional<std::uint64_t>{} : s.get<std::uint64_t>();
        }
        if (j.contains("img2img_strength")) p.img2img_strength = j["img2img_strength"].get<double>();
    } catch (const json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed inputs patch: ") + e.what());
    }
    return p;
}

json inputs_patch_to_json(const InputsPatch& p) {
    json j = json::object();
    if (p.scene_prompt) j["scene_prompt"] = *p.scene_prompt;
    if (p.regions) j["regions"] = regions_to_json(*p.regions);
    if (p.sketch) {
        j["sketch"] = *p.sketch ? json{{"png_b64", base64_encode(encode_png((*p.sketch)->to_rgba()))}} : json(nullptr);
    }
    if (p.base_image_id) j["base_image_id"] = *p.base_image_id ? json(**p.base_image_id) : json(nullptr);
    if (p.seed) j["seed"] = *p.seed ? json(**p.seed) : json(nullptr);
    if (p.img2img_strength) j["img2img_strength"] = *p.img2img_strength;
    return j;
}

json inputs_to_json(const GenerationInputs& in) {
    json sketch = nullptr;
    if (in.sketch) {
        sketch = {{"image_id", in.sketch->content_id()},
                  {"width", in.sketch->size().width},
                  {"height", in.sketch->size().height}};
    }
    return {{"scene_prompt", in.scene_prompt},
            {"regions", regions_to_json(in.regions)},
            {"sketch", std::move(sketch)},
            {"base_image", in.base_image ? image_ref_to_json(*in.base_image) : json(nullptr)},
            {"seed", in.seed ? json(*in.seed) : json(nullptr)},
            {"img2img_strength", in.img2img_strength},
            {"digest", canonicalize_inputs(in).digest}};
}

json job_to_json(const JobInfo& job) {
    json results = json::array();
    for (const auto& r : job.results) results.push_back(image_ref_to_json(r));
    json j{{"job_id", job.job_id},
           {"session_id", job.session_id},
           {"kind", std::string(to_string(job.kind))},
           {"seed", job.seed},
           {"count", job.count},
           {"state", std::string(to_string(job.state))},
           {"results", std::move(results)}};
    if (job.tile_id) j["tile_id"] = *job.tile_id;
    if (job.blend_id) j["blend_id"] = *job.blend_id;
    if (job.node_id) j["node_id"] = *job.node_id;
    if (job.state == JobState::failed) j["error"] = job.error;
    return j;
}

// ---- request construction --------------------------------------------------

RequestKind infer_request_kind(const GenerationInputs& in) {
    if (in.sketch || in.base_image) return RequestKind::img2img;
    if (!in.regions.empty()) return RequestKind::region_guided;
    return RequestKind::text2img;
}

GenerationRequest build_tile_request(const GenerationInputs& in, Size resolution, std::uint64_t seed, int count,
                                     const ImageLookup& images) {
    GenerationRequest req;
    req.kind = infer_request_kind(in);
    req.prompt = in.scene_prompt;
    req.strength = in.img2img_strength;
    req.seed = seed;
    req.count = count;
    req.resolution = resolution;

    if (!in.regions.empty()) {
        const auto seg = compose_segmentation(in.regions, resolution);
        for (auto& m : extract_binary_masks(seg)) req.regions.push_back({std::move(m.mask), m.description});
    }

    if (req.kind == RequestKind::img2img) {
        Image init = Image::rgb(resolution.width, resolution.height, Rgb{255, 255, 255});
        if (in.base_image) {
            auto base = images ? images(*in.base_image) : std::nullopt;
            if (!base) fail(ErrorCode::not_found, "base image '" + in.base_image->image_id + "' not found");
            init = resample(to_rgb_image(*base), resolution);
        }
        if (in.sketch) {
            if (in.sketch->size() != resolution) {
                fail(ErrorCode::invalid_argument, "sketch size must equal the generation resolution");
            }
            for (int y = 0; y < resolution.height; ++y) {
                for (int x = 0; x < resolution.width; ++x) {
                    if (in.sketch->coverage.get(x, y)) init.set_rgb(x, y, in.sketch->image.rgb_at(x, y));
                }
            }
        }
        req.init_image = std::move(init);
    }
    return req;
}

// ---- engine ----------------------------------------------------------------

struct Engine::Slot {
    mutable std::mutex mu;
    WorldSession session;
    fs::path dir;
    std::unique_ptr<ImageStore> images;

    ImageLookup lookup() const {
        return [this](const ImageRef& ref) { return images->get(ref.image_id); };
    }
};

struct Engine::PendingJob {
    CanonicalSnapshot snapshot;
    std::string label;
    int poll_failures = 0;
};

namespace {

constexpr int max_poll_failures = 50;

void write_file_atomic(const fs::path& path, const std::string& content, bool sync) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) fail(ErrorCode::storage, "cannot write " + tmp.string());
    std::size_t off = 0;
    while (off < content.size()) {
        const auto n = ::write(fd, content.data() + off, content.size() - off);
        if (n <= 0) {
            ::close(fd);
            fail(ErrorCode::storage, "short write to " + tmp.string());
        }
        off += static_cast<std::size_t>(n);
    }
    if (sync && ::fsync(fd) != 0) {
        ::close(fd);
        fail(ErrorCode::storage, "fsync failed on " + tmp.string());
    }
    ::close(fd);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::storage, "cannot replace " + path.string() + ": " + ec.message());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::storage, "cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorCode::validation, path.string() + ": " + e.what());
    }
}

}  // namespace

Engine::Engine(std::shared_ptr<Backend> backend, EngineOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
    if (!backend_) fail(ErrorCode::invalid_argument, "engine needs a backend");
    if (options_.batch_count < 1 || options_.batch_count > max_batch_count) {
        fail(ErrorCode::invalid_argument, "batch_count must lie in [1, " + std::to_string(max_batch_count) + "]");
    }
    if (options_.data_dir.empty()) fail(ErrorCode::invalid_argument, "engine needs a data directory");
    std::error_code ec;
    fs::create_directories(options_.data_dir / "sessions", ec);
    if (ec) fail(ErrorCode::storage, "cannot create " + (options_.data_dir / "sessions").string());
    events_ = std::make_unique<EventStore>(options_.data_dir / "sessions", EventStore::Options{options_.fsync});
    rng_state_ = (static_cast<std::uint64_t>(std::random_device{}()) << 32) ^ std::random_device{}();
    load_existing();
    monitor_ = std::thread([this] { monitor_loop(); });
}

Engine::~Engine() {
    {
        std::lock_guard lk(mu_);
        stopping_ = true;
    }
    monitor_cv_.notify_all();
    if (monitor_.joinable()) monitor_.join();
}

void Engine::load_existing() {
    for (const auto& entry : fs::directory_iterator(options_.data_dir / "sessions")) {
        const auto dir = entry.path();
        if (!fs::exists(dir / "session.json")) continue;
        auto slot = std::make_shared<Slot>();
        slot->dir = dir;
        slot->images = std::make_unique<ImageStore>(dir / "images");
        slot->session = session_from_json(read_json_file(dir / "session.json"), read_json_file(dir / "tree.json"),
                                          slot->images->sketch_resolver());
        for (auto& b : slot->session.blends) {
            if (b.state == "queued" || b.state == "running") {
                b.state = "failed";
                b.error = "interrupted by restart";
            }
        }
        sessions_[slot->session.session_id] = std::move(slot);
    }
}

std::shared_ptr<Engine::Slot> Engine::slot(const std::string& session_id) const {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(ErrorCode::not_found, "unknown session '" + session_id + "'");
    return it->second;
}

void Engine::persist(const Slot& s) const {
    write_file_atomic(s.dir / "tree.json", trees_to_json(s.session).dump(), options_.fsync);
    write_file_atomic(s.dir / "session.json", session_to_json(s.session).dump(), options_.fsync);
}

void Engine::check_version(const Slot& s, std::optional<std::uint64_t> expected) const {
    if (expected && *expected != s.session.version) {
        fail(ErrorCode::conflict, "version mismatch: expected " + std::to_string(*expected) + ", session is at " +
                                      std::to_string(s.session.version));
    }
}

void Engine::emit(const std::string& session_id, EventKind kind, const std::optional<std::string>& tile_id,
                  json payload) {
    InteractionEvent e;
    e.timestamp_ms = now_ms();
    e.session_id = session_id;
    e.tile_id = tile_id;
    e.kind = kind;
    e.payload = std::move(payload);
    // Logging failures must not fail the user's action.
    try {
        events_->append(std::move(e));
    } catch (const std::exception& ex) {
        std::cerr << "worldsmith: dropped " << to_string(kind) << " event: " << ex.what() << '\n';
    }
}

std::uint64_t Engine::draw_seed() {
    std::lock_guard lk(rng_mu_);
    std::uint64_t z = (rng_state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z & ((std::uint64_t{1} << 53) - 1);  // exact in JSON doubles
}

SessionConfig Engine::default_session_config() const {
    SessionConfig c;
    c.generation_resolution = options_.generation_resolution;
    c.blur_sigma = options_.blur_sigma;
    return c;
}

WorldSession Engine::create_session(const SessionConfig& config) {
    auto slot = std::make_shared<Slot>();
    std::string id;
    {
        std::lock_guard lk(mu_);
        do {
            id = new_session_id();
        } while (sessions_.count(id) || fs::exists(options_.data_dir / "sessions" / id));
    }
    slot->session = worldsmith::create_session(config, id);
    slot->dir = options_.data_dir / "sessions" / id;
    std::error_code ec;
    fs::create_directories(slot->dir / "images", ec);
    if (ec) fail(ErrorCode::storage, "cannot create " + slot->dir.string());
    slot->images = std::make_unique<ImageStore>(slot->dir / "images");
    persist(*slot);
    {
        std::lock_guard lk(mu_);
        sessions_[id] = slot;
    }
    emit(id, EventKind::modify_tile, std::nullopt,
         {{"op", "layout"},
          {"canvas_size", size_to_json(config.canvas_size)},
          {"tile_count", config.tile_count},
          {"grid_gap", config.grid_gap},
          {"generation_resolution", size_to_json(config.generation_resolution)},
          {"blur_sigma", config.blur_sigma ? json(*config.blur_sigma) : json(nullptr)}});
    return slot->session;
}

WorldSession Engine::session(const std::string& session_id) const {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    return s->session;
}

std::vector<std::string> Engine::session_ids() const {
    std::lock_guard lk(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
}

std::uint64_t Engine::update_inputs(const std::string& session_id, const std::string& tile_id,
                                    const InputsPatch& patch, std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    Tile& tile = s->session.tile(tile_id);
    GenerationInputs next = tile.inputs;
    std::vector<std::pair<EventKind, json>> events;

    if (patch.scene_prompt && *patch.scene_prompt != next.scene_prompt) {
        next.scene_prompt = *patch.scene_prompt;
        events.emplace_back(EventKind::modify_text, json{{"text", next.scene_prompt}});
    }

    if (patch.regions) {
        GenerationInputs staged;
        for (const auto& r : *patch.regions) staged.add_region(r);
        if (staged.regions != next.regions) {
            json changed = json::array();
            json removed = json::array();
            for (const auto& r : staged.regions) {
                const auto* old = next.find_region(r.region_id);
                if (!old || !(*old == r)) changed.push_back(r.region_id);
            }
            for (const auto& r : next.regions) {
                if (!staged.find_region(r.region_id)) removed.push_back(r.region_id);
            }
            next.regions = std::move(staged.regions);
            events.emplace_back(EventKind::modify_region, json{{"regions", regions_to_json(next.regions)},
                                                               {"changed", std::move(changed)},
                                                               {"removed", std::move(removed)}});
        }
    }

    Bytes sketch_png;
    if (patch.sketch && *patch.sketch != next.sketch) {
        if (*patch.sketch) {
            const auto& layer = **patch.sketch;
            if (layer.size() != s->session.generation_resolution) {
                fail(ErrorCode::invalid_argument, "sketch size must equal the generation resolution");
            }
            sketch_png = encode_png(layer.to_rgba());
            events.emplace_back(EventKind::modify_sketch, json{{"sketch_png_b64", base64_encode(sketch_png)}});
        } else {
            events.emplace_back(EventKind::modify_sketch, json{{"cleared", true}});
        }
        next.sketch = *patch.sketch;
    }

    if (patch.base_image_id) {
        std::optional<ImageRef> ref;
        if (*patch.base_image_id) {
            auto img = s->images->get(**patch.base_image_id);
            if (!img) fail(ErrorCode::not_found, "unknown image '" + **patch.base_image_id + "'");
            ref = ImageRef{**patch.base_image_id, img->width(), img->height()};
        }
        if (ref != next.base_image) {
            next.base_image = ref;
            events.emplace_back(EventKind::modify_sketch,
                                json{{"base_image_id", ref ? json(ref->image_id) : json(nullptr)}});
        }
    }

    if (patch.seed && *patch.seed != next.seed) {
        next.seed = *patch.seed;
        events.emplace_back(EventKind::modify_tile, json{{"seed", next.seed ? json(*next.seed) : json(nullptr)}});
    }

    if (patch.img2img_strength && *patch.img2img_strength != next.img2img_strength) {
        next.img2img_strength = *patch.img2img_strength;
        events.emplace_back(EventKind::modify_tile, json{{"img2img_strength", next.img2img_strength}});
    }

    validate_inputs(next);
    if (next.sketch) s->images->put(next.sketch->to_rgba());
    tile.inputs = std::move(next);
    ++s->session.version;
    persist(*s);
    for (auto& [kind, payload] : events) emit(session_id, kind, tile_id, std::move(payload));
    return s->session.version;
}

std::uint64_t Engine::move_tile(const std::string& session_id, const std::string& tile_id, const TileRect& rect,
                                std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    std::vector<json> events;
    move_resize_tile(s->session, tile_id, rect,
                     [&](EventKind, const std::optional<std::string>&, json p) { events.push_back(std::move(p)); });
    ++s->session.version;
    persist(*s);
    for (auto& p : events) emit(session_id, EventKind::modify_tile, tile_id, std::move(p));
    return s->session.version;
}

std::uint64_t Engine::set_grid_gap(const std::string& session_id, int gap,
                                   std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    std::vector<json> events;
    worldsmith::set_grid_gap(s->session, gap, [&](EventKind, const std::optional<std::string>&, json p) {
        events.push_back(std::move(p));
    });
    ++s->session.version;
    persist(*s);
    for (auto& p : events) emit(session_id, EventKind::modify_tile, std::nullopt, std::move(p));
    return s->session.version;
}

std::uint64_t Engine::set_blend_prompt(const std::string& session_id, const std::string& prompt,
                                       std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    const bool changed = s->session.global_blend_prompt != prompt;
    s->session.global_blend_prompt = prompt;
    ++s->session.version;
    persist(*s);
    if (changed) emit(session_id, EventKind::modify_text, std::nullopt, {{"blend_prompt", prompt}});
    return s->session.version;
}

std::uint64_t Engine::set_tile_image(const std::string& session_id, const std::string& tile_id,
                                     const std::string& image_id, std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    Tile& tile = s->session.tile(tile_id);
    auto img = s->images->get(image_id);
    if (!img) fail(ErrorCode::not_found, "unknown image '" + image_id + "'");
    tile.current_image = ImageRef{image_id, img->width(), img->height()};
    ++s->session.version;
    persist(*s);
    emit(session_id, EventKind::modify_tile, tile_id, {{"image_id", image_id}});
    return s->session.version;
}

std::string Engine::generate(const std::string& session_id, const std::string& tile_id,
                             std::optional<std::uint64_t> seed, std::optional<int> count) {
    auto s = slot(session_id);
    JobInfo info;
    GenerationRequest request;
    auto pending = std::make_shared<PendingJob>();
    {
        std::lock_guard lk(s->mu);
        const Tile& tile = s->session.tile(tile_id);
        const auto& in = tile.inputs;
        info.seed = seed ? *seed : in.seed ? *in.seed : draw_seed();
        info.count = count.value_or(options_.batch_count);
        request = build_tile_request(in, s->session.generation_resolution, info.seed, info.count, s->lookup());
        pending->snapshot = canonicalize_inputs(in);
        pending->label = node_label(in);
        {
            std::lock_guard jl(mu_);
            info.job_id = "j" + std::to_string(next_job_++);
        }
        info.session_id = session_id;
        info.tile_id = tile_id;
        info.kind = request.kind;
        emit(session_id, EventKind::run_diffusion, tile_id,
             {{"job_id", info.job_id},
              {"kind", std::string(to_string(info.kind))},
              {"seed", info.seed},
              {"count", info.count}});
    }
    return submit_job(std::move(info), request, std::move(pending));
}

std::string Engine::blend(const std::string& session_id, std::optional<std::uint64_t> seed) {
    auto s = slot(session_id);
    JobInfo info;
    GenerationRequest request;
    {
        std::lock_guard lk(s->mu);
        const auto plan = make_blend_plan(s->session, s->lookup());
        request.kind = RequestKind::blend;
        request.prompt = plan.prompt;
        request.init_image = plan.base_image;
        request.mask_image = quantize_plane(plan.blend_mask);
        request.strength = 1.0;
        request.seed = seed ? *seed : draw_seed();
        request.count = options_.batch_count;
        request.resolution = plan.base_image.size();
        {
            std::lock_guard jl(mu_);
            info.job_id = "j" + std::to_string(next_job_++);
        }
        info.session_id = session_id;
        info.kind = RequestKind::blend;
        info.seed = request.seed;
        info.count = request.count;
        info.blend_id = "b" + std::to_string(s->session.blends.size());

        BlendRecord rec;
        rec.blend_id = *info.blend_id;
        rec.job_id = info.job_id;
        rec.prompt = plan.prompt;
        rec.seed = request.seed;
        rec.state = "queued";
        rec.created_at = now_ms();
        s->session.blends.push_back(std::move(rec));
        ++s->session.version;
        persist(*s);
        emit(session_id, EventKind::blend, std::nullopt,
             {{"job_id", info.job_id}, {"blend_id", *info.blend_id}, {"prompt", plan.prompt}, {"seed", info.seed}});
    }
    return submit_job(std::move(info), request, nullptr);
}

std::string Engine::submit_job(JobInfo info, const GenerationRequest& request, std::shared_ptr<PendingJob> pending) {
    const std::string job_id = info.job_id;
    std::optional<std::string> refused;
    try {
        info.backend_job_id = backend_->submit(request);
    } catch (const std::exception& e) {
        refused = e.what();
    }
    {
        std::lock_guard lk(mu_);
        jobs_[job_id] = std::move(info);
        if (!refused) pending_[job_id] = pending ? std::move(pending) : std::make_shared<PendingJob>();
    }
    if (refused) {
        GenerationJob failed;
        failed.state = JobState::failed;
        failed.error = *refused;
        complete(job_id, std::move(failed));
    } else {
        monitor_cv_.notify_all();
    }
    return job_id;
}

void Engine::monitor_loop() {
    std::unique_lock lk(mu_);
    while (!stopping_) {
        std::vector<std::pair<std::string, std::string>> active;
        for (const auto& [id, _] : pending_) active.emplace_back(id, jobs_[id].backend_job_id);
        lk.unlock();

        for (const auto& [id, backend_id] : active) {
            GenerationJob status;
            try {
                status = backend_->poll(backend_id);
            } catch (const Error& e) {
                std::shared_ptr<PendingJob> p;
                {
                    std::lock_guard g(mu_);
                    auto it = pending_.find(id);
                    if (it != pending_.end()) p = it->second;
                }
                if (p && (e.code() == ErrorCode::not_found || ++p->poll_failures >= max_poll_failures)) {
                    status.state = JobState::failed;
                    status.error = e.what();
                } else {
                    continue;
                }
            } catch (const std::exception& e) {
                status.state = JobState::failed;
                status.error = e.what();
            }
            if (status.finished()) {
                complete(id, std::move(status));
            } else {
                std::lock_guard g(mu_);
                auto& j = jobs_[id];
                if (j.state != status.state) {
                    j.state = status.state;
                    job_cv_.notify_all();
                }
            }
        }

        lk.lock();
        if (stopping_) break;
        if (pending_.empty()) {
            monitor_cv_.wait(lk, [&] { return stopping_ || !pending_.empty(); });
        } else {
            monitor_cv_.wait_for(lk, options_.poll_interval);
        }
    }
}

void Engine::complete(const std::string& job_id, GenerationJob result) {
    JobInfo info;
    std::shared_ptr<PendingJob> pending;
    {
        std::lock_guard lk(mu_);
        info = jobs_.at(job_id);
        if (auto it = pending_.find(job_id); it != pending_.end()) pending = it->second;
    }
    if (result.state == JobState::done && result.images.empty()) {
        result.state = JobState::failed;
        result.error = "backend returned no images";
    }

    std::optional<std::string> node_id;
    std::vector<ImageRef> refs;
    std::string error = result.error;
    try {
        auto s = slot(info.session_id);
        std::lock_guard lk(s->mu);
        if (result.state == JobState::done) {
            for (const auto& img : result.images) refs.push_back(s->images->put(img));
        }
        bool changed = false;
        if (info.tile_id && result.state == JobState::done) {
            Tile& tile = s->session.tile(*info.tile_id);
            node_id = tile.tree.record_generation(pending->snapshot, pending->label, refs, info.seed);
            tile.current_image = refs.front();
            changed = true;
        } else if (info.blend_id) {
            for (auto& b : s->session.blends) {
                if (b.blend_id != *info.blend_id) continue;
                b.state = std::string(to_string(result.state));
                b.results = refs;
                b.error = result.state == JobState::failed ? result.error : std::string{};
                changed = true;
            }
        }
        if (changed) {
            ++s->session.version;
            persist(*s);
        }
    } catch (const std::exception& e) {
        result.state = JobState::failed;
        error = std::string("recording results failed: ") + e.what();
        refs.clear();
        node_id.reset();
    }

    {
        std::lock_guard lk(mu_);
        auto& j = jobs_.at(job_id);
        j.state = result.state;
        j.results = std::move(refs);
        j.error = result.state == JobState::failed ? error : std::string{};
        j.node_id = node_id;
        pending_.erase(job_id);
    }
    job_cv_.notify_all();
}

JobInfo Engine::job(const std::string& job_id) const {
    std::lock_guard lk(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) fail(ErrorCode::not_found, "unknown job '" + job_id + "'");
    return it->second;
}

JobInfo Engine::wait_job(const std::string& job_id, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) fail(ErrorCode::not_found, "unknown job '" + job_id + "'");
    job_cv_.wait_for(lk, timeout, [&] { return jobs_.at(job_id).finished(); });
    return jobs_.at(job_id);
}

Engine::NodeChange Engine::add_node(const std::string& session_id, const std::string& tile_id,
                                    const std::string& at_node, ManualMode mode,
                                    std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    Tile& tile = s->session.tile(tile_id);
    TileTree tree = tile.tree;
    NodeChange out;
    out.node_id = tree.add_node_manual(at_node, mode);
    out.inputs = tree.select_node(out.node_id, s->images->sketch_resolver());
    tile.tree = std::move(tree);
    tile.inputs = out.inputs;
    out.version = ++s->session.version;
    persist(*s);
    emit(session_id, EventKind::tree_add, tile_id,
         {{"node_id", out.node_id}, {"at", at_node}, {"mode", mode == ManualMode::copy ? "copy" : "blank"}});
    return out;
}

Engine::NodeChange Engine::select_node(const std::string& session_id, const std::string& tile_id,
                                       const std::string& node_id, std::optional<std::uint64_t> expected_version) {
    auto s = slot(session_id);
    std::lock_guard lk(s->mu);
    check_version(*s, expected_version);
    Tile& tile = s->session.tile(tile_id);
    NodeChange out;
    out.node_id = node_id;
    out.inputs = tile.tree.select_node(node_id, s->images->sketch_resolver());
    tile.inputs = out.inputs;
    out.version = ++s->session.version;
    persist(*s);
    emit(session_id, EventKind::tree_select, tile_id, {{"node_id", node_id}});
    return out;
}

std::vector<InteractionEvent> Engine::events(const std::string& session_id) const {
    slot(session_id);
    return events_->scan(session_id);
}

std::string Engine::events_ndjson(const std::string& session_id) const {
    slot(session_id);
    return events_->export_ndjson(session_id);
}

std::optional<Image> Engine::image(const std::string& image_id) const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lk(mu_);
        for (const auto& [_, s] : sessions_) slots.push_back(s);
    }
    for (const auto& s : slots) {
        if (auto img = s->images->get(image_id)) return img;
    }
    return std::nullopt;
}

std::optional<Bytes> Engine::image_png(const std::string& image_id) const {
    std::vector<std::shared_ptr<Slot>> slots;
    {
        std::lock_guard lk(mu_);
        for (const auto& [_, s] : sessions_) slots.push_back(s);
    }
    for (const auto& s : slots) {
        if (auto png = s->images->png(image_id)) return png;
    }
    return std::nullopt;
}

ImageRef Engine::put_image(const std::string& session_id, const Image& image) {
    return slot(session_id)->images->put(image);
}

}  // namespace worldsmith
