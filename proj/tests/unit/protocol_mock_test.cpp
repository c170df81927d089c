#include <gtest/gtest.h>

#include <chrono>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "fuzz.hpp"
#include "oracles.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/http_backend.hpp"
#include "worldsmith/mock_backend.hpp"
#include "worldsmith/protocol.hpp"

using namespace worldsmith;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::storage;
}

GenerationRequest text_request(std::uint64_t seed = 1) {
    GenerationRequest r;
    r.prompt = "rolling hills";
    r.seed = seed;
    r.count = 2;
    r.resolution = {40, 24};
    return r;
}

GenerationJob wait_done(Backend& b, const std::string& id) {
    for (int i = 0; i < 2000; ++i) {
        auto job = b.poll(id);
        if (job.finished()) return job;
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ADD_FAILURE() << "job " << id << " did not finish";
    return {};
}

}  // namespace

TEST(Protocol, KindAndStateNames) {
    for (auto k : all_request_kinds) EXPECT_EQ(request_kind_from_string(to_string(k)), k);
    EXPECT_EQ(to_string(RequestKind::region_guided), "region_guided");
    EXPECT_EQ(code_of([] { request_kind_from_string("upscale"); }), ErrorCode::validation);
    for (auto s : {JobState::queued, JobState::running, JobState::done, JobState::failed})
        EXPECT_EQ(job_state_from_string(to_string(s)), s);
    EXPECT_EQ(code_of([] { job_state_from_string("lost"); }), ErrorCode::validation);
}

TEST(Protocol, ValidationRules) {
    EXPECT_NO_THROW(validate_request(text_request()));
    auto r = text_request();
    r.count = 0;
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r = text_request();
    r.count = max_batch_count + 1;
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r = text_request();
    r.resolution = {max_request_edge + 1, 8};
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r = text_request();
    r.strength = -0.1;
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r = text_request();
    r.init_image = Image(40, 24, 3);
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);

    r = text_request();
    r.kind = RequestKind::img2img;
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.init_image = Image(40, 23, 3);
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.init_image = Image(40, 24, 3);
    EXPECT_NO_THROW(validate_request(r));

    r = text_request();
    r.kind = RequestKind::region_guided;
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.regions = {{BinaryMask({40, 24}), "a"}, {BinaryMask({40, 24}), "b"}};
    EXPECT_NO_THROW(validate_request(r));
    r.regions[0].mask.set(3, 3);
    r.regions[1].mask.set(3, 3);
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.regions[1].mask = BinaryMask({8, 8});
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);

    r = text_request();
    r.kind = RequestKind::blend;
    r.init_image = Image(40, 24, 3);
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.mask_image = Image(40, 24, 3);
    EXPECT_EQ(code_of([&] { validate_request(r); }), ErrorCode::validation);
    r.mask_image = Image(40, 24, 1);
    EXPECT_NO_THROW(validate_request(r));
}

TEST(Protocol, FuzzedRoundTrip) {
    std::mt19937_64 rng(77);
    for (int i = 0; i < 150; ++i) {
        const auto r = fuzz::random_request(rng);
        ASSERT_NO_THROW(validate_request(r));
        const auto wire = encode_request(r).dump();
        const auto back = decode_request(nlohmann::json::parse(wire));
        ASSERT_EQ(back, r) << wire.substr(0, 200);
        ASSERT_EQ(request_digest(back), request_digest(r));
    }
}

TEST(Protocol, WireFormat) {
    auto r = text_request();
    r.kind = RequestKind::region_guided;
    r.regions = {{BinaryMask({40, 24}), "lake"}};
    const auto j = encode_request(r);
    EXPECT_EQ(j["kind"], "region_guided");
    EXPECT_EQ(j["width"], 40);
    EXPECT_EQ(j["height"], 24);
    EXPECT_FALSE(j.contains("init_image_png_b64"));
    const auto mask_png = base64_decode(j["regions"][0]["mask_png_b64"].get<std::string>());
    EXPECT_EQ(mask_png[24], 1) << "region masks travel as 1-bit PNG";

    auto bad = j;
    bad.erase("seed");
    EXPECT_EQ(code_of([&] { decode_request(bad); }), ErrorCode::validation);
    bad = j;
    bad["regions"][0]["mask_png_b64"] = 5;
    EXPECT_EQ(code_of([&] { decode_request(bad); }), ErrorCode::validation);
}

TEST(Protocol, DigestSeesEveryField) {
    const auto base = text_request();
    const auto d = request_digest(base);
    auto r = base;
    r.seed = 2;
    EXPECT_NE(request_digest(r), d);
    r = base;
    r.count = 3;
    EXPECT_NE(request_digest(r), d);
    r = base;
    r.prompt += " ";
    EXPECT_NE(request_digest(r), d);
    r = base;
    r.strength = 0.5;
    EXPECT_NE(request_digest(r), d);
    const auto bytes = canonical_request_bytes(base);
    EXPECT_EQ(request_digest(base), oracle::fnv1a(std::string(bytes.begin(), bytes.end())));
}

TEST(Protocol, JobStatusAndHealthJson) {
    GenerationJob job;
    job.state = JobState::done;
    job.images = {Image::rgb(3, 2, {1, 2, 3})};
    auto back = decode_job_status("x", encode_job_status(job));
    EXPECT_EQ(back.job_id, "x");
    EXPECT_EQ(back.state, JobState::done);
    EXPECT_EQ(back.images, job.images);

    job.state = JobState::failed;
    job.error = "boom";
    back = decode_job_status("x", encode_job_status(job));
    EXPECT_EQ(back.error, "boom");
    EXPECT_TRUE(back.images.empty());
    EXPECT_EQ(code_of([] { decode_job_status("x", nlohmann::json::object()); }), ErrorCode::validation);

    BackendDescriptor d{"sd", "", {RequestKind::text2img, RequestKind::blend}, {1024, 768}, false};
    const auto h = decode_health(encode_health(d));
    EXPECT_EQ(h.name, "sd");
    EXPECT_EQ(h.kinds, d.kinds);
    EXPECT_EQ(h.max_resolution, (Size{1024, 768}));
    EXPECT_FALSE(h.healthy);
    EXPECT_TRUE(h.supports(RequestKind::blend));
    EXPECT_FALSE(h.supports(RequestKind::img2img));
    EXPECT_EQ(decode_health(nlohmann::json::parse(R"({"name":"a","kinds":[],"max_resolution":512})")).max_resolution,
              (Size{512, 512}));
}

TEST(Mock, RegionColorMatchesOracle) {
    for (const char* text : {"", "river", "dense forest", "\xe6\xb9\x96"}) {
        EXPECT_EQ(mock_region_color(text), oracle::hash_color(text));
        EXPECT_EQ(mock_region_color(text).r % 2, 1);
    }
}

TEST(Mock, TextureIsEvenAndSeeded) {
    const auto a = mock_texture(mock_texture_seed("p", 1, 0), {70, 40});
    for (auto v : a.bytes()) ASSERT_EQ(v % 2, 0);
    EXPECT_EQ(a, mock_texture(mock_texture_seed("p", 1, 0), {70, 40}));
    EXPECT_NE(a, mock_texture(mock_texture_seed("p", 1, 1), {70, 40}));
    EXPECT_NE(mock_texture_seed("p", 1, 0), mock_texture_seed("p", 2, 0));
    EXPECT_NE(mock_texture_seed("p", 1, 0), mock_texture_seed("q", 1, 0));
}

TEST(Mock, DeterministicPerRequest) {
    const auto a = mock_generate(text_request(5));
    ASSERT_EQ(a.size(), 2u);
    EXPECT_NE(a[0], a[1]);
    const auto b = mock_generate(text_request(5));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(encode_png(a[i]), encode_png(b[i]));
    EXPECT_NE(mock_generate(text_request(6))[0], a[0]);
}

TEST(Mock, RegionGuidedPaintsExactlyMaskedPixels) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto r = fuzz::random_request(rng);
        r.kind = RequestKind::region_guided;
        r.init_image.reset();
        r.mask_image.reset();
        if (r.regions.empty()) r.regions.push_back({BinaryMask(r.resolution), "x"});
        for (const auto& img : mock_generate(r)) {
            for (int y = 0; y < img.height(); ++y) {
                for (int x = 0; x < img.width(); ++x) {
                    const RegionPrompt* owner = nullptr;
                    for (const auto& reg : r.regions)
                        if (reg.mask.get(x, y)) owner = &reg;
                    if (owner) {
                        ASSERT_EQ(img.rgb_at(x, y), oracle::hash_color(owner->text));
                    } else {
                        ASSERT_EQ(img.rgb_at(x, y).r % 2, 0);
                    }
                }
            }
        }
    }
}

TEST(Mock, BlendKeepsUnmaskedInitPixels) {
    GenerationRequest r = text_request();
    r.kind = RequestKind::blend;
    r.init_image = Image::rgb(40, 24, {11, 22, 33});
    r.mask_image = Image(40, 24, 1, 0);
    r.mask_image->pixel(5, 5)[0] = 255;
    const auto out = mock_generate(r);
    const auto tex = mock_texture(mock_texture_seed(r.prompt, r.seed, 0), r.resolution);
    EXPECT_EQ(out[0].rgb_at(0, 0), (Rgb{11, 22, 33}));
    EXPECT_EQ(out[0].rgb_at(5, 5), tex.rgb_at(5, 5));
}

TEST(Mock, StrengthMixesInit) {
    GenerationRequest r = text_request();
    r.kind = RequestKind::img2img;
    r.init_image = Image::rgb(40, 24, {11, 22, 33});
    r.strength = 0.0;
    EXPECT_EQ(mock_generate(r)[0], *r.init_image);
    r.strength = 1.0;
    EXPECT_EQ(mock_generate(r)[0], mock_texture(mock_texture_seed(r.prompt, r.seed, 0), r.resolution));
}

TEST(MockBackend, ManualQueue) {
    MockBackend::Options o;
    o.auto_run = false;
    MockBackend b(o);
    const auto id1 = b.submit(text_request());
    const auto id2 = b.submit(text_request());
    EXPECT_NE(id1, id2) << "identical requests are never deduplicated";
    EXPECT_EQ(b.poll(id1).state, JobState::queued);
    EXPECT_EQ(b.poll(id1).request_digest, request_digest(text_request()));
    b.fail_next("forced");
    EXPECT_EQ(b.run_pending(), 2u);
    EXPECT_EQ(b.poll(id1).state, JobState::failed);
    EXPECT_EQ(b.poll(id1).error, "forced");
    EXPECT_EQ(b.poll(id2).state, JobState::done);
    EXPECT_EQ(b.poll(id2).images, mock_generate(text_request()));
    EXPECT_EQ(code_of([&] { b.poll("nope"); }), ErrorCode::not_found);
}

TEST(MockBackend, RefusesUnsupportedAndOversized) {
    MockBackend::Options o;
    o.kinds = {RequestKind::text2img};
    o.max_resolution = {32, 32};
    MockBackend b(o);
    auto r = text_request();
    EXPECT_EQ(code_of([&] { b.submit(r); }), ErrorCode::validation);
    r.resolution = {16, 16};
    r.kind = RequestKind::blend;
    r.init_image = Image(16, 16, 3);
    r.mask_image = Image(16, 16, 1);
    EXPECT_EQ(code_of([&] { b.submit(r); }), ErrorCode::unsupported);
    EXPECT_EQ(b.describe().kinds.size(), 1u);
}

TEST(MockBackend, WorkersRunConcurrentSubmits) {
    MockBackend::Options o;
    o.workers = 3;
    MockBackend b(o);
    std::vector<std::string> ids;
    std::vector<std::thread> threads;
    std::mutex mu;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 5; ++i) {
                const auto id = b.submit(text_request(static_cast<std::uint64_t>(t * 10 + i)));
                std::lock_guard lock(mu);
                ids.push_back(id);
            }
        });
    }
    for (auto& t : threads) t.join();
    std::set<std::string> unique(ids.begin(), ids.end());
    EXPECT_EQ(unique.size(), 20u);
    for (const auto& id : ids) EXPECT_EQ(wait_done(b, id).state, JobState::done);
}

TEST(HttpBackend, ServesMockOverHttp) {
    MockBackend mock;
    BackendServer server(mock);
    const int port = server.start("127.0.0.1", 0);
    HttpBackend client("http://127.0.0.1:" + std::to_string(port));

    const auto d = client.describe();
    EXPECT_EQ(d.name, "mock");
    EXPECT_EQ(d.kinds.size(), 4u);
    EXPECT_EQ(d.endpoint, "http://127.0.0.1:" + std::to_string(port));

    std::mt19937_64 rng(4);
    for (int i = 0; i < 5; ++i) {
        const auto r = fuzz::random_request(rng, 24);
        const auto job = wait_done(client, client.submit(r));
        ASSERT_EQ(job.state, JobState::done) << job.error;
        EXPECT_EQ(job.images, mock_generate(r));
    }
    EXPECT_EQ(code_of([&] { client.poll("missing"); }), ErrorCode::not_found);
    auto bad = text_request();
    bad.count = 0;
    EXPECT_EQ(code_of([&] { client.submit(bad); }), ErrorCode::validation);
    server.stop();
    EXPECT_EQ(code_of([&] { client.describe(); }), ErrorCode::unavailable);
}
