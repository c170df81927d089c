#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace oracle {

namespace {

std::int64_t cross(Point o, Point a, Point b) {
    return static_cast<std::int64_t>(a.x - o.x) * (b.y - o.y) - static_cast<std::int64_t>(a.y - o.y) * (b.x - o.x);
}

bool on_closed_segment(Point p, Point q, Point r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
}

}  // namespace

std::vector<Point> brute_force_hull(const std::vector<Point>& input) {
    std::vector<Point> pts = input;
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() <= 1) return pts;

    bool collinear = true;
    for (std::size_t i = 2; i < pts.size() && collinear; ++i) collinear = cross(pts[0], pts[1], pts[i]) == 0;
    if (collinear) return {pts.front(), pts.back()};

    std::map<Point, Point> next;
    for (const auto& p : pts) {
        for (const auto& q : pts) {
            if (p == q) continue;
            bool edge = true;
            for (const auto& r : pts) {
                const auto c = cross(p, q, r);
                if (c < 0 || (c == 0 && !on_closed_segment(p, q, r))) {
                    edge = false;
                    break;
                }
            }
            if (edge) next[p] = q;
        }
    }
    std::vector<Point> hull{pts.front()};
    for (Point cur = next.at(pts.front()); cur != pts.front(); cur = next.at(cur)) {
        hull.push_back(cur);
        if (hull.size() > pts.size()) break;  // broken chain; the comparison will fail
    }
    return hull;
}

std::vector<Point> normalize_rotation(std::vector<Point> cycle) {
    if (cycle.empty()) return cycle;
    std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
    return cycle;
}

bool pnpoly(const std::vector<Point>& poly, double x, double y) {
    bool inside = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const double xi = poly[i].x, yi = poly[i].y, xj = poly[j].x, yj = poly[j].y;
        if ((yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi) inside = !inside;
    }
    return inside;
}

std::vector<std::uint8_t> pnpoly_fill(const std::vector<Point>& polygon, int w, int h) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = pnpoly(polygon, x, y) ? 1 : 0;
    }
    return out;
}

std::vector<double> gaussian_weights(double sigma) {
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) sum += k[i + r] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    for (auto& v : k) v /= sum;
    return k;
}

std::vector<double> dense_blur(const std::vector<double>& plane, int w, int h, double sigma) {
    const auto k = gaussian_weights(sigma);
    const int r = static_cast<int>(k.size() / 2);
    std::vector<double> out(plane.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int sy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int sx = std::clamp(x + dx, 0, w - 1);
                    acc += k[dy + r] * k[dx + r] * plane[static_cast<std::size_t>(sy) * w + sx];
                }
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

worldsmith::Rgb hash_color(const std::string& text) {
    const auto h = fnv1a(text);
    return {static_cast<std::uint8_t>((h & 0xFF) | 1), static_cast<std::uint8_t>((h >> 8) & 0xFF),
            static_cast<std::uint8_t>((h >> 16) & 0xFF)};
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = static_cast<std::size_t>(std::ceil(h));
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

TempDir::TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("worldsmith-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

}  // namespace oracle
