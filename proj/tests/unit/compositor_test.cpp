#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "worldsmith/compositor.hpp"
#include "worldsmith/error.hpp"

using namespace worldsmith;

namespace {

ImageLookup lookup_of(const std::map<std::string, Image>& m) {
    return [&m](const ImageRef& ref) -> std::optional<Image> {
        auto it = m.find(ref.image_id);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
}

WorldSession small_session(std::map<std::string, Image>& images) {
    SessionConfig c;
    c.canvas_size = {64, 48};
    c.generation_resolution = {64, 64};
    c.grid_gap = 8;
    auto s = create_session(c, "s1");
    for (std::size_t i = 0; i < s.tiles.size(); ++i) {
        auto& t = s.tiles[i];
        const std::string id = "img" + std::to_string(i);
        images[id] = Image::rgb(t.rect.w, t.rect.h, {static_cast<std::uint8_t>(50 * (i + 1)), 0, 0});
        t.current_image = ImageRef{id, t.rect.w, t.rect.h};
    }
    return s;
}

}  // namespace

TEST(Resample, SameSizeIsExactCopy) {
    std::mt19937 rng(1);
    Image img(9, 7, 3);
    for (auto& v : img.bytes()) v = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(resample(img, {9, 7}), img);
    EXPECT_EQ(resample(img, {9, 7}, Resample::nearest), img);
}

TEST(Resample, NearestDoublingRepeatsPixels) {
    Image img(2, 1, 1, std::vector<std::uint8_t>{10, 20});
    const auto up = resample(img, {4, 2}, Resample::nearest);
    EXPECT_EQ(up.pixel(0, 1)[0], 10);
    EXPECT_EQ(up.pixel(1, 0)[0], 10);
    EXPECT_EQ(up.pixel(2, 0)[0], 20);
    EXPECT_EQ(up.pixel(3, 1)[0], 20);
}

TEST(Resample, BilinearOfConstantIsConstant) {
    const auto img = Image::rgb(13, 5, {7, 100, 250});
    const auto out = resample(img, {31, 2});
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 31; ++x) EXPECT_EQ(out.rgb_at(x, y), (Rgb{7, 100, 250}));
    EXPECT_THROW(resample(Image{}, {2, 2}), Error);
}

TEST(Composite, PastesTilesOverGray) {
    std::map<std::string, Image> images;
    auto s = small_session(images);
    const auto canvas = composite_tiles(s, lookup_of(images));
    EXPECT_EQ(canvas.size(), (Size{64, 48}));
    EXPECT_EQ(canvas.rgb_at(0, 0), composite_background);
    const auto& r = s.tiles[3].rect;
    EXPECT_EQ(canvas.rgb_at(r.x, r.y), (Rgb{200, 0, 0}));
    EXPECT_EQ(canvas.rgb_at(r.x + r.w - 1, r.y + r.h - 1), (Rgb{200, 0, 0}));

    s.tiles[1].current_image.reset();
    try {
        composite_tiles(s, lookup_of(images));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::conflict);
        EXPECT_NE(std::string(e.what()).find("t1"), std::string::npos);
    }
}

TEST(BlendMask, OnesOutsideTiles) {
    const std::vector<TileRect> rects{{0, 0, 4, 4}, {2, 2, 4, 4}, {8, 8, 10, 10}};
    const auto m = build_blend_mask({10, 10}, rects);
    const auto sum = std::accumulate(m.values().begin(), m.values().end(), 0.0);
    EXPECT_EQ(sum, 100 - (16 + 16 - 4) - 4);
}

TEST(Gaussian, KernelIsNormalizedAndSymmetric) {
    for (double sigma : {0.5, 1.0, 2.5, 8.0}) {
        const auto k = gaussian_kernel(sigma);
        EXPECT_EQ(k.size(), 2 * static_cast<std::size_t>(std::ceil(3 * sigma)) + 1);
        EXPECT_NEAR(std::accumulate(k.begin(), k.end(), 0.0), 1.0, 1e-12);
        for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
        const auto ref = oracle::gaussian_weights(sigma);
        for (std::size_t i = 0; i < k.size(); ++i) EXPECT_NEAR(k[i], ref[i], 1e-15);
    }
    EXPECT_EQ(gaussian_kernel(0), std::vector<double>{1.0});
    EXPECT_THROW(gaussian_kernel(-1), Error);
}

TEST(Gaussian, BlurMatchesDenseOracle) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(0, 1);
    for (double sigma : {0.7, 2.0, 5.0}) {
        Plane p({23, 17});
        for (auto& v : p.values()) v = u(rng);
        const auto out = gaussian_blur(p, sigma);
        const std::vector<double> in(p.values().begin(), p.values().end());
        const auto ref = oracle::dense_blur(in, 23, 17, sigma);
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(out.values()[i], ref[i], 1e-6);
    }
}

TEST(Gaussian, SigmaZeroIsIdentityAndConstantsStay) {
    Plane p({5, 5});
    p.at(2, 2) = 0.123f;
    EXPECT_EQ(gaussian_blur(p, 0.0), p);
    const Plane c({16, 16}, 0.37f);
    EXPECT_EQ(gaussian_blur(c, 3.0), c);
}

TEST(Gaussian, DefaultSigma) {
    EXPECT_EQ(default_blur_sigma(32), 8.0);
    EXPECT_EQ(default_blur_sigma(0), 1.0);
    EXPECT_EQ(default_blur_sigma(1000), 32.0);
}

TEST(BlendPlan, UnscaledWhenCanvasFits) {
    std::map<std::string, Image> images;
    auto s = small_session(images);
    s.global_blend_prompt = "misty";
    const auto plan = make_blend_plan(s, lookup_of(images));
    EXPECT_EQ(plan.prompt, "misty");
    EXPECT_EQ(plan.scale, 1.0);
    EXPECT_EQ(plan.blur_sigma, 2.0);
    EXPECT_EQ(plan.base_image, composite_tiles(s, lookup_of(images)));
    EXPECT_EQ(plan.blend_mask, gaussian_blur(build_blend_mask(s), 2.0));
}

TEST(BlendPlan, LetterboxesLargeCanvas) {
    std::map<std::string, Image> images;
    SessionConfig c;
    c.canvas_size = {256, 128};
    c.generation_resolution = {64, 64};
    c.grid_gap = 16;
    c.blur_sigma = 4.0;
    auto s = create_session(c, "s2");
    for (auto& t : s.tiles) {
        images[t.tile_id] = Image::rgb(8, 8, {1, 2, 3});
        t.current_image = ImageRef{t.tile_id, 8, 8};
    }
    const auto plan = make_blend_plan(s, lookup_of(images));
    EXPECT_EQ(plan.base_image.size(), (Size{64, 64}));
    EXPECT_EQ(plan.blend_mask.size(), (Size{64, 64}));
    EXPECT_DOUBLE_EQ(plan.scale, 0.25);
    EXPECT_DOUBLE_EQ(plan.blur_sigma, 1.0);
    EXPECT_EQ(plan.offset, (Point{0, 16}));
    EXPECT_EQ(plan.base_image.rgb_at(5, 2), composite_background);
    EXPECT_FLOAT_EQ(plan.blend_mask.at(5, 0), 1.0f);
    for (float v : plan.blend_mask.values()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(Thumbnail, FitsBox) {
    EXPECT_EQ(make_thumbnail(Image(300, 150, 3)).size(), (Size{96, 48}));
    EXPECT_EQ(make_thumbnail(Image(40, 20, 3)).size(), (Size{40, 20}));
    EXPECT_EQ(make_thumbnail(Image(1000, 2, 3)).size(), (Size{96, 1}));
}
