#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/geometry.hpp"

using namespace worldsmith;

namespace {

std::int64_t twice_area(const std::vector<Point>& poly) {
    std::int64_t a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        a += static_cast<std::int64_t>(p.x) * q.y - static_cast<std::int64_t>(q.x) * p.y;
    }
    return a;
}

// Distance oracle for round-capped strokes, in doubles.
bool near_stroke(const std::vector<Point>& stroke, int width, double px, double py) {
    const double r = width / 2.0;
    auto seg = [&](Point a, Point b) {
        const double dx = b.x - a.x, dy = b.y - a.y;
        const double len2 = dx * dx + dy * dy;
        double t = len2 == 0 ? 0 : ((px - a.x) * dx + (py - a.y) * dy) / len2;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
        return ex * ex + ey * ey <= r * r + 1e-9;
    };
    if (stroke.size() == 1) return seg(stroke[0], stroke[0]);
    for (std::size_t i = 1; i < stroke.size(); ++i)
        if (seg(stroke[i - 1], stroke[i])) return true;
    return false;
}

}  // namespace

TEST(ConvexHull, Square) {
    const std::vector<Point> pts{{0, 0}, {4, 0}, {4, 4}, {0, 4}, {2, 2}, {2, 0}};
    const auto hull = convex_hull(pts);
    EXPECT_EQ(hull, (std::vector<Point>{{0, 0}, {4, 0}, {4, 4}, {0, 4}}));
    EXPECT_GT(twice_area(hull), 0);
}

TEST(ConvexHull, DegenerateInputs) {
    EXPECT_THROW(convex_hull(std::vector<Point>{}), Error);
    EXPECT_EQ(convex_hull(std::vector<Point>{{3, 3}, {3, 3}}), (std::vector<Point>{{3, 3}}));
    EXPECT_EQ(convex_hull(std::vector<Point>{{5, 5}, {0, 0}, {2, 2}, {1, 1}}), (std::vector<Point>{{0, 0}, {5, 5}}));
    EXPECT_THROW(convex_hull(std::vector<Point>{{max_coordinate + 1, 0}}), Error);
}

TEST(ConvexHull, MatchesBruteForceOnSmallGrids) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 40);
        const int span = 2 + static_cast<int>(rng() % 12);  // small span forces collinear and duplicate points
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i)
            pts.push_back({static_cast<int>(rng() % span) - span / 2, static_cast<int>(rng() % span)});
        const auto hull = convex_hull(pts);
        ASSERT_EQ(oracle::normalize_rotation(hull), oracle::normalize_rotation(oracle::brute_force_hull(pts)))
            << "trial " << trial;
        for (const auto& p : pts) {
            if (hull.size() < 3) break;
            for (std::size_t i = 0; i < hull.size(); ++i) {
                const auto& a = hull[i];
                const auto& b = hull[(i + 1) % hull.size()];
                const auto c = static_cast<std::int64_t>(b.x - a.x) * (p.y - a.y) -
                               static_cast<std::int64_t>(b.y - a.y) * (p.x - a.x);
                ASSERT_GE(c, 0) << "point outside hull edge";
            }
        }
    }
}

TEST(Pencil, DotAndWidths) {
    const std::vector<std::vector<Point>> dot{{{5, 5}}};
    EXPECT_EQ(rasterize_pencil(dot, 1, {11, 11}).count(), 1);
    EXPECT_EQ(rasterize_pencil(dot, 3, {11, 11}).count(), 9);
    const std::vector<std::vector<Point>> line{{{0, 5}, {10, 5}}};
    EXPECT_EQ(rasterize_pencil(line, 1, {11, 11}).count(), 11);
    EXPECT_THROW(rasterize_pencil(line, 0, {11, 11}), Error);
}

TEST(Pencil, MatchesDistanceOracle) {
    std::mt19937 rng(5);
    const Size size{40, 30};
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<Point> stroke;
        const int n = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < n; ++i)
            stroke.push_back({static_cast<int>(rng() % 60) - 10, static_cast<int>(rng() % 50) - 10});
        const int width = 1 + static_cast<int>(rng() % 7);
        const std::vector<std::vector<Point>> strokes{stroke};
        const auto mask = rasterize_pencil(strokes, width, size);
        for (int y = 0; y < size.height; ++y)
            for (int x = 0; x < size.width; ++x)
                ASSERT_EQ(mask.get(x, y), near_stroke(stroke, width, x, y)) << trial << " @" << x << "," << y;
    }
}

TEST(PolygonFill, BowtieIsEvenOdd) {
    const std::vector<Point> bowtie{{0, 0}, {20, 20}, {20, 0}, {0, 20}};
    const auto mask = rasterize_lasso(bowtie, {24, 24});
    const auto ref = oracle::pnpoly_fill(bowtie, 24, 24);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x) EXPECT_EQ(mask.get(x, y), ref[static_cast<std::size_t>(y) * 24 + x] != 0);
    EXPECT_TRUE(mask.get(15, 10));
    EXPECT_FALSE(mask.get(10, 15));
}

TEST(PolygonFill, ClipsToCanvasAndAgreesWithPointTest) {
    std::mt19937 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Point> poly;
        const int n = 3 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i)
            poly.push_back({static_cast<int>(rng() % 80) - 20, static_cast<int>(rng() % 80) - 20});
        const auto mask = fill_polygon(poly, {32, 32});
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                ASSERT_EQ(mask.get(x, y), point_in_polygon(poly, {x, y}));
                ASSERT_EQ(mask.get(x, y), oracle::pnpoly(poly, x, y));
            }
    }
}

TEST(Lasso, NeedsThreePoints) {
    EXPECT_THROW(rasterize_lasso(std::vector<Point>{{0, 0}, {3, 3}}, {8, 8}), Error);
}

TEST(HullFill, DegradesToThinStroke) {
    const auto mask = rasterize_hull(std::vector<Point>{{1, 1}, {6, 1}, {3, 1}}, {8, 8});
    EXPECT_EQ(mask.count(), 6);
    for (int x = 1; x <= 6; ++x) EXPECT_TRUE(mask.get(x, 1));
    EXPECT_EQ(rasterize_hull(std::vector<Point>{}, {8, 8}).count(), 0);
}

TEST(HullFill, EqualsFillOfHull) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        std::vector<Point> pts;
        for (int i = 0; i < 12; ++i) pts.push_back({static_cast<int>(rng() % 64), static_cast<int>(rng() % 64)});
        const auto ref = oracle::pnpoly_fill(oracle::brute_force_hull(pts), 64, 64);
        const auto mask = rasterize_hull(pts, {64, 64});
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) ASSERT_EQ(mask.get(x, y), ref[static_cast<std::size_t>(y) * 64 + x] != 0);
    }
}
