#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "tree_reference.hpp"
#include "worldsmith/canonical.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/inputs.hpp"

using namespace worldsmith;

namespace {

RegionSpec lasso_region(std::string description) {
    RegionSpec r;
    r.description = std::move(description);
    r.geometry.push_back({BrushKind::lasso, {{0, 0}, {10, 0}, {5, 9}}, 1});
    return r;
}

SketchResolver resolver_of(const std::map<std::string, SketchLayer>& m) {
    return [&m](const std::string& id) -> std::optional<SketchLayer> {
        auto it = m.find(id);
        if (it == m.end()) return std::nullopt;
        return it->second;
    };
}

}  // namespace

TEST(Inputs, BrushNames) {
    for (auto k : {BrushKind::pencil, BrushKind::hull, BrushKind::lasso}) EXPECT_EQ(brush_from_string(to_string(k)), k);
    EXPECT_THROW(brush_from_string("spray"), Error);
}

TEST(Inputs, PaletteIsTwelveDistinctNonBlackColors) {
    std::set<Rgb> seen(region_palette().begin(), region_palette().end());
    EXPECT_EQ(seen.size(), 12u);
    EXPECT_EQ(seen.count(Rgb{}), 0u);
}

TEST(Inputs, AddRegionAssignsColorsAndIds) {
    GenerationInputs in;
    const auto& a = in.add_region(lasso_region("river"));
    EXPECT_EQ(a.region_id, "r1");
    EXPECT_EQ(a.color, region_palette()[0]);
    const auto& b = in.add_region(lasso_region("forest"));
    EXPECT_EQ(b.region_id, "r2");
    EXPECT_EQ(b.color, region_palette()[1]);

    auto dup = lasso_region("x");
    dup.color = region_palette()[0];
    EXPECT_THROW(in.add_region(dup), Error);
    auto dup_id = lasso_region("x");
    dup_id.region_id = "r1";
    EXPECT_THROW(in.add_region(dup_id), Error);

    in.regions.erase(in.regions.begin());
    EXPECT_EQ(in.add_region(lasso_region("again")).region_id, "r3") << "ids are never reused while taken";
}

TEST(Inputs, PaletteCyclesThroughDimmedColors) {
    GenerationInputs in;
    for (int i = 0; i < 30; ++i) in.add_region(lasso_region("r"));
    std::set<Rgb> colors;
    for (const auto& r : in.regions) {
        EXPECT_FALSE(r.color.is_black());
        colors.insert(r.color);
    }
    EXPECT_EQ(colors.size(), 30u);
    EXPECT_NO_THROW(validate_inputs(in));
}

TEST(Inputs, ValidateRejectsBrokenRegions) {
    GenerationInputs in;
    in.add_region(lasso_region("a"));
    auto bad = in;
    bad.regions[0].color = {};
    EXPECT_THROW(validate_inputs(bad), Error);
    bad = in;
    bad.regions[0].geometry[0].points.clear();
    EXPECT_THROW(validate_inputs(bad), Error);
    bad = in;
    bad.regions[0].geometry[0].stroke_width = 0;
    EXPECT_THROW(validate_inputs(bad), Error);
    bad = in;
    bad.img2img_strength = 1.5;
    EXPECT_THROW(validate_inputs(bad), Error);
    bad = in;
    bad.regions.push_back(bad.regions[0]);
    bad.regions[1].color = {1, 1, 1};
    EXPECT_THROW(validate_inputs(bad), Error);
}

TEST(Inputs, RegionJsonRoundTripSnapsCoordinates) {
    RegionSpec r;
    r.region_id = "r7";
    r.color = {1, 2, 3};
    r.description = "two towers";
    r.geometry.push_back({BrushKind::pencil, {{1, 2}, {3, 4}}, 5});
    r.geometry.push_back({BrushKind::hull, {{0, 0}, {4, 0}, {0, 4}}, 1});
    EXPECT_EQ(region_from_json(region_to_json(r)), r);

    const auto j = nlohmann::json::parse(
        R"({"description":"d","geometry":[{"brush":"lasso","points":[[0.5,1.49],[2,2],[3,0]]}]})");
    const auto parsed = region_from_json(j);
    EXPECT_EQ(parsed.geometry[0].points[0], (Point{1, 1}));
    EXPECT_TRUE(parsed.color.is_black());

    EXPECT_THROW(region_from_json(nlohmann::json::parse(R"({"color":[1,2]})")), Error);
    EXPECT_THROW(region_from_json(nlohmann::json::parse(R"({"color":[1,2,300]})")), Error);
    EXPECT_THROW(region_from_json(nlohmann::json::parse(R"({"geometry":[{"brush":"pencil","points":[[1e9,0]]}]})")),
                 Error);
    EXPECT_THROW(regions_from_json(nlohmann::json::object()), Error);
}

TEST(Inputs, SketchRgbaRoundTrip) {
    SketchLayer s{Image(4, 4, 3), BinaryMask({4, 4})};
    s.image.set_rgb(1, 2, {10, 20, 30});
    s.coverage.set(1, 2);
    const auto rgba = s.to_rgba();
    EXPECT_EQ(rgba.pixel(1, 2)[3], 255);
    EXPECT_EQ(rgba.pixel(0, 0)[3], 0);
    EXPECT_EQ(SketchLayer::from_rgba(rgba), s);
    EXPECT_THROW(SketchLayer::from_rgba(Image(2, 2, 3)), Error);
}

TEST(Canonical, EqualInputsGiveEqualBytes) {
    GenerationInputs a;
    a.scene_prompt = "a castle";
    a.add_region(lasso_region("moat"));
    a.seed = 42;
    GenerationInputs b = a;
    EXPECT_EQ(canonicalize_inputs(a), canonicalize_inputs(b));
    b.regions[0].description = "moat ";
    EXPECT_NE(canonicalize_inputs(a).digest, canonicalize_inputs(b).digest);
    b = a;
    b.seed.reset();
    EXPECT_NE(canonicalize_inputs(a).digest, canonicalize_inputs(b).digest);
    b = a;
    b.img2img_strength = 0.6500001;
    EXPECT_EQ(canonicalize_inputs(a).digest, canonicalize_inputs(b).digest) << "strength is stored in millionths";
}

TEST(Canonical, HeaderAndDigest) {
    const auto s = canonicalize_inputs({});
    ASSERT_GE(s.bytes.size(), 5u);
    EXPECT_EQ(std::string(s.bytes.begin(), s.bytes.begin() + 4), "WSIN");
    EXPECT_EQ(s.digest, sha256_hex(s.bytes));
    EXPECT_EQ(empty_snapshot(), s);
}

TEST(Canonical, DecodeRejectsCorruption) {
    auto bytes = canonicalize_inputs({}).bytes;
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_snapshot(snapshot_from_bytes(bad)), Error);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(decode_snapshot(snapshot_from_bytes(bad)), Error);
    bad = bytes;
    bad.pop_back();
    EXPECT_THROW(decode_snapshot(snapshot_from_bytes(bad)), Error);
}

TEST(Canonical, SketchNeedsResolver) {
    GenerationInputs in;
    in.sketch = SketchLayer{Image(2, 2, 3, 9), BinaryMask({2, 2})};
    const auto snap = canonicalize_inputs(in);
    try {
        decode_snapshot(snap);
        FAIL() << "expected not_found";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::not_found);
    }
    std::map<std::string, SketchLayer> m{{in.sketch->content_id(), *in.sketch}};
    EXPECT_EQ(decode_snapshot(snap, resolver_of(m)), in);
}

// Property: decode(canonicalize(x)) == x and canonicalize is injective over
// randomly edited inputs.
TEST(Canonical, RandomRoundTripAndInjectivity) {
    std::mt19937_64 rng(2024);
    std::map<std::string, SketchLayer> sketches;
    GenerationInputs in;
    std::map<std::string, GenerationInputs> by_digest;
    for (int i = 0; i < 600; ++i) {
        oracle::apply_edit(in, rng(), rng(), sketches);
        if (rng() % 7 == 0) in.base_image = ImageRef{std::string(64, 'a' + static_cast<char>(rng() % 6)), 8, 8};
        const auto snap = canonicalize_inputs(in);
        ASSERT_EQ(decode_snapshot(snap, resolver_of(sketches)), in);
        auto [it, fresh] = by_digest.emplace(snap.digest, in);
        if (!fresh) ASSERT_EQ(it->second, in);
    }
    EXPECT_GT(by_digest.size(), 50u);
}
