#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/segmentation.hpp"

using namespace worldsmith;

namespace {

RegionSpec lasso(std::string id, Rgb color, std::vector<Point> pts) {
    return {std::move(id), color, "desc " + std::to_string(color.r), {{BrushKind::lasso, std::move(pts), 1}}};
}

}  // namespace

TEST(Segmentation, LaterRegionsWinOnOverlap) {
    const std::vector<RegionSpec> regions{
        lasso("a", {255, 0, 0}, {{0, 0}, {12, 0}, {12, 12}, {0, 12}}),
        lasso("b", {0, 0, 255}, {{6, 6}, {16, 6}, {16, 16}, {6, 16}}),
    };
    const auto seg = compose_segmentation(regions, {20, 20});
    EXPECT_EQ(seg.pixels.rgb_at(2, 2), (Rgb{255, 0, 0}));
    EXPECT_EQ(seg.pixels.rgb_at(8, 8), (Rgb{0, 0, 255}));
    EXPECT_EQ(seg.pixels.rgb_at(18, 18), (Rgb{}));
    ASSERT_EQ(seg.palette.size(), 2u);
    EXPECT_EQ(seg.palette[1].region_id, "b");

    const auto masks = extract_binary_masks(seg);
    EXPECT_EQ(masks[0].mask.count(), 144 - 36);
    EXPECT_EQ(masks[1].mask.count(), 100);
    EXPECT_EQ(masks[0].description, "desc 255");
}

TEST(Segmentation, RejectsBlackAndDuplicateColors) {
    try {
        compose_segmentation({lasso("a", {}, {{0, 0}, {3, 0}, {0, 3}})}, {8, 8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
    }
    try {
        compose_segmentation({lasso("a", {1, 1, 1}, {{0, 0}, {3, 0}, {0, 3}}),
                              lasso("b", {1, 1, 1}, {{0, 0}, {3, 0}, {0, 3}})},
                             {8, 8});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::conflict);
    }
}

TEST(Segmentation, ShortLassoDegradesToPolyline) {
    RegionSpec r{"a", {9, 9, 9}, "", {{BrushKind::lasso, {{1, 1}, {5, 1}}, 1}}};
    EXPECT_EQ(region_mask(r, {8, 8}).count(), 5);
}

TEST(Segmentation, RegionMaskIsUnionOfActions) {
    RegionSpec r{"a", {9, 9, 9}, "", {}};
    r.geometry.push_back({BrushKind::pencil, {{2, 2}}, 1});
    r.geometry.push_back({BrushKind::hull, {{10, 10}, {14, 10}, {10, 14}}, 1});
    const auto m = region_mask(r, {16, 16});
    EXPECT_TRUE(m.get(2, 2));
    EXPECT_TRUE(m.get(11, 11));
    const auto tri = oracle::pnpoly_fill({{10, 10}, {14, 10}, {10, 14}}, 16, 16);
    EXPECT_EQ(m.count(), 1 + std::count(tri.begin(), tri.end(), 1));
}

TEST(Segmentation, PartitionMatchesPaintOrderOracle) {
    std::mt19937 rng(99);
    const Size size{48, 40};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<RegionSpec> regions;
        const int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            std::vector<Point> pts;
            const int k = 3 + static_cast<int>(rng() % 6);
            for (int j = 0; j < k; ++j) pts.push_back({static_cast<int>(rng() % 60) - 6, static_cast<int>(rng() % 50) - 5});
            regions.push_back(lasso("r" + std::to_string(i), {static_cast<std::uint8_t>(10 + i), 0, 0}, pts));
        }
        // Oracle: last region whose pnpoly test passes owns the pixel.
        std::vector<int> owner(static_cast<std::size_t>(size.area()), -1);
        for (int i = 0; i < n; ++i) {
            const auto fill = oracle::pnpoly_fill(regions[i].geometry[0].points, size.width, size.height);
            for (std::size_t p = 0; p < fill.size(); ++p)
                if (fill[p]) owner[p] = i;
        }
        const auto masks = extract_binary_masks(compose_segmentation(regions, size));
        ASSERT_EQ(masks.size(), static_cast<std::size_t>(n));
        for (int y = 0; y < size.height; ++y)
            for (int x = 0; x < size.width; ++x)
                for (int i = 0; i < n; ++i)
                    ASSERT_EQ(masks[i].mask.get(x, y), owner[static_cast<std::size_t>(y) * size.width + x] == i);
    }
}

TEST(Segmentation, PaletteJson) {
    const std::vector<PaletteEntry> p{{"r1", {1, 2, 3}, "river"}, {"r2", {4, 5, 6}, ""}};
    EXPECT_EQ(palette_from_json(palette_to_json(p)), p);
    EXPECT_THROW(palette_from_json(nlohmann::json::parse(R"([{"region_id":"x"}])")), Error);
}
