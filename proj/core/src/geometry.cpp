#include "worldsmith/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

using i64 = std::int64_t;
using i128 = __int128;

i64 cross(Point o, Point a, Point b) {
    return static_cast<i64>(a.x - o.x) * (b.y - o.y) - static_cast<i64>(a.y - o.y) * (b.x - o.x);
}

void check_range(std::span<const Point> points) {
    for (const auto& p : points) {
        if (std::abs(p.x) > max_coordinate || std::abs(p.y) > max_coordinate) {
            fail(ErrorCode::invalid_argument, "coordinate out of range");
        }
    }
}

// ceil(num / den) for den > 0.
i128 ceil_div(i128 num, i128 den) {
    if (num >= 0) return (num + den - 1) / den;
    return -((-num) / den);
}

// Whether pixel center p lies within width/2 of segment ab; exact in integers:
// 4 * dist^2 <= width^2.
bool near_segment(Point a, Point b, Point p, int width) {
    const i128 dx = b.x - a.x, dy = b.y - a.y;
    const i128 vx = p.x - a.x, vy = p.y - a.y;
    const i128 w2 = static_cast<i128>(width) * width;
    const i128 len2 = dx * dx + dy * dy;
    const i128 dot = vx * dx + vy * dy;
    if (len2 == 0 || dot <= 0) return 4 * (vx * vx + vy * vy) <= w2;
    if (dot >= len2) {
        const i128 ux = p.x - b.x, uy = p.y - b.y;
        return 4 * (ux * ux + uy * uy) <= w2;
    }
    // dist^2 = c^2 / len2; coordinates are bounded by max_coordinate so c^2
    // stays far inside 128 bits.
    const i128 c = vx * dy - vy * dx;
    return 4 * c * c <= w2 * len2;
}

void stamp_segment(BinaryMask& mask, Point a, Point b, int width) {
    const double r = width / 2.0;
    const auto lo_x = static_cast<i64>(std::floor(std::min(a.x, b.x) - r));
    const auto hi_x = static_cast<i64>(std::ceil(std::max(a.x, b.x) + r));
    const auto lo_y = static_cast<i64>(std::floor(std::min(a.y, b.y) - r));
    const auto hi_y = static_cast<i64>(std::ceil(std::max(a.y, b.y) + r));
    const int x0 = static_cast<int>(std::max<i64>(lo_x, 0));
    const int x1 = static_cast<int>(std::min<i64>(hi_x, mask.width() - 1));
    const int y0 = static_cast<int>(std::max<i64>(lo_y, 0));
    const int y1 = static_cast<int>(std::min<i64>(hi_y, mask.height() - 1));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!mask.get(x, y) && near_segment(a, b, {x, y}, width)) mask.set(x, y);
        }
    }
}

}  // namespace

std::vector<Point> convex_hull(std::span<const Point> points) {
    if (points.empty()) fail(ErrorCode::invalid_argument, "convex hull of an empty point set");
    check_range(points);
    std::vector<Point> p(points.begin(), points.end());
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    if (p.size() <= 2) return p;

    std::vector<Point> hull(2 * p.size());
    std::size_t k = 0;
    for (const auto& pt : p) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pt) <= 0) --k;
        hull[k++] = pt;
    }
    for (std::size_t i = p.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
        hull[k++] = p[i];
    }
    hull.resize(k - 1);
    // All points collinear: the chain collapses to the two extremes.
    if (hull.size() == 2 || (hull.size() > 2 && cross(hull[0], hull[1], hull[2]) == 0)) {
        return {p.front(), p.back()};
    }
    return hull;
}

BinaryMask rasterize_pencil(std::span<const std::vector<Point>> strokes, int stroke_width, Size size) {
    if (stroke_width < 1) fail(ErrorCode::invalid_argument, "stroke width must be at least 1");
    BinaryMask mask(size);
    for (const auto& stroke : strokes) {
        if (stroke.empty()) continue;
        check_range(stroke);
        if (stroke.size() == 1) {
            stamp_segment(mask, stroke[0], stroke[0], stroke_width);
            continue;
        }
        for (std::size_t i = 1; i < stroke.size(); ++i) stamp_segment(mask, stroke[i - 1], stroke[i], stroke_width);
    }
    return mask;
}

BinaryMask fill_polygon(std::span<const Point> polygon, Size size) {
    BinaryMask mask(size);
    const std::size_t n = polygon.size();
    if (n < 3) return mask;
    check_range(polygon);
    std::vector<i128> cuts;
    for (int y = 0; y < size.height; ++y) {
        cuts.clear();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Point a = polygon[i], b = polygon[j];
            if ((a.y > y) == (b.y > y)) continue;
            // Crossing x = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y); pixels
            // with x < crossing see it on their +x ray.
            i128 num = static_cast<i128>(y - a.y) * (b.x - a.x);
            i128 den = b.y - a.y;
            if (den < 0) {
                num = -num;
                den = -den;
            }
            cuts.push_back(a.x + ceil_div(num, den));
        }
        std::sort(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); k += 2) {
            const auto from = std::max<i128>(cuts[k], 0);
            const auto to = std::min<i128>(cuts[k + 1], size.width);
            for (auto x = from; x < to; ++x) mask.set(static_cast<int>(x), y);
        }
    }
    return mask;
}

bool point_in_polygon(std::span<const Point> polygon, Point p) {
    bool inside = false;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Point a = polygon[i], b = polygon[j];
        if ((a.y > p.y) == (b.y > p.y)) continue;
        i128 num = static_cast<i128>(p.y - a.y) * (b.x - a.x);
        i128 den = b.y - a.y;
        if (den < 0) {
            num = -num;
            den = -den;
        }
        // p.x < a.x + num/den
        if (static_cast<i128>(p.x - a.x) * den < num) inside = !inside;
    }
    return inside;
}

BinaryMask rasterize_hull(std::span<const Point> points, Size size) {
    if (points.empty()) return BinaryMask(size);
    const auto hull = convex_hull(points);
    if (hull.size() >= 3) return fill_polygon(hull, size);
    const std::vector<std::vector<Point>> stroke{hull};
    return rasterize_pencil(stroke, 1, size);
}

BinaryMask rasterize_lasso(std::span<const Point> path, Size size) {
    if (path.size() < 3) fail(ErrorCode::invalid_argument, "a lasso path needs at least three points");
    return fill_polygon(path, size);
}

}  // namespace worldsmith
