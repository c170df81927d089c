#include "worldsmith/compositor.hpp"

#include <algorithm>
#include <cmath>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

struct Tap {
    int i0;
    int i1;
    double f;  // weight of i1
};

Tap bilinear_tap(int d, int src_len, int dst_len) {
    double s = (d + 0.5) * src_len / dst_len - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_len - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const int i1 = std::min(i0 + 1, src_len - 1);
    return {i0, i1, s - i0};
}

int nearest_tap(int d, int src_len, int dst_len) {
    const auto s = static_cast<int>(std::floor((d + 0.5) * src_len / dst_len));
    return std::clamp(s, 0, src_len - 1);
}

}  // namespace

Image resample(const Image& src, Size dst, Resample mode) {
    if (src.empty() || dst.width <= 0 || dst.height <= 0) {
        fail(ErrorCode::invalid_argument, "cannot resample an empty image");
    }
    Image out(dst.width, dst.height, src.channels());
    const int ch = src.channels();
    if (mode == Resample::nearest) {
        for (int y = 0; y < dst.height; ++y) {
            const int sy = nearest_tap(y, src.height(), dst.height);
            for (int x = 0; x < dst.width; ++x) {
                const int sx = nearest_tap(x, src.width(), dst.width);
                std::copy_n(src.pixel(sx, sy), ch, out.pixel(x, y));
            }
        }
        return out;
    }
    std::vector<Tap> xs(dst.width);
    for (int x = 0; x < dst.width; ++x) xs[x] = bilinear_tap(x, src.width(), dst.width);
    for (int y = 0; y < dst.height; ++y) {
        const Tap ty = bilinear_tap(y, src.height(), dst.height);
        for (int x = 0; x < dst.width; ++x) {
            const Tap& tx = xs[x];
            const auto* p00 = src.pixel(tx.i0, ty.i0);
            const auto* p10 = src.pixel(tx.i1, ty.i0);
            const auto* p01 = src.pixel(tx.i0, ty.i1);
            const auto* p11 = src.pixel(tx.i1, ty.i1);
            auto* d = out.pixel(x, y);
            for (int c = 0; c < ch; ++c) {
                const double top = p00[c] + (p10[c] - p00[c]) * tx.f;
                const double bottom = p01[c] + (p11[c] - p01[c]) * tx.f;
                const double v = top + (bottom - top) * ty.f;
                d[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
        }
    }
    return out;
}

Plane resample(const Plane& src, Size dst) {
    if (src.size().area() == 0 || dst.width <= 0 || dst.height <= 0) {
        fail(ErrorCode::invalid_argument, "cannot resample an empty plane");
    }
    Plane out(dst);
    for (int y = 0; y < dst.height; ++y) {
        const Tap ty = bilinear_tap(y, src.height(), dst.height);
        for (int x = 0; x < dst.width; ++x) {
            const Tap tx = bilinear_tap(x, src.width(), dst.width);
            const double top = src.at(tx.i0, ty.i0) + (src.at(tx.i1, ty.i0) - src.at(tx.i0, ty.i0)) * tx.f;
            const double bottom = src.at(tx.i0, ty.i1) + (src.at(tx.i1, ty.i1) - src.at(tx.i0, ty.i1)) * tx.f;
            out.at(x, y) = static_cast<float>(top + (bottom - top) * ty.f);
        }
    }
    return out;
}

Image composite_tiles(const WorldSession& session, const ImageLookup& images, Resample mode) {
    Image canvas = Image::rgb(session.canvas_size.width, session.canvas_size.height, composite_background);
    for (const auto& tile : session.tiles) {
        if (!tile.current_image) fail(ErrorCode::conflict, "tile '" + tile.tile_id + "' has no image");
        auto img = images ? images(*tile.current_image) : std::nullopt;
        if (!img) {
            fail(ErrorCode::conflict, "image of tile '" + tile.tile_id + "' is not available");
        }
        if (img->channels() != 3) fail(ErrorCode::conflict, "image of tile '" + tile.tile_id + "' is not RGB");
        const auto& r = tile.rect;
        const Image scaled = img->size() == Size{r.w, r.h} ? *img : resample(*img, {r.w, r.h}, mode);
        for (int y = 0; y < r.h; ++y) {
            const int cy = r.y + y;
            if (cy < 0 || cy >= canvas.height()) continue;
            for (int x = 0; x < r.w; ++x) {
                const int cx = r.x + x;
                if (cx < 0 || cx >= canvas.width()) continue;
                std::copy_n(scaled.pixel(x, y), 3, canvas.pixel(cx, cy));
            }
        }
    }
    return canvas;
}

Plane build_blend_mask(Size canvas, std::span<const TileRect> rects) {
    Plane mask(canvas, 1.0f);
    for (const auto& r : rects) {
        const int x0 = std::max(r.x, 0), x1 = std::min(r.x + r.w, canvas.width);
        const int y0 = std::max(r.y, 0), y1 = std::min(r.y + r.h, canvas.height);
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) mask.at(x, y) = 0.0f;
        }
    }
    return mask;
}

Plane build_blend_mask(const WorldSession& session) {
    std::vector<TileRect> rects;
    for (const auto& t : session.tiles) rects.push_back(t.rect);
    return build_blend_mask(session.canvas_size, rects);
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma >= 0.0)) fail(ErrorCode::invalid_argument, "sigma must be non-negative");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (auto& v : k) v /= sum;
    return k;
}

Plane gaussian_blur(const Plane& plane, double sigma) {
    if (!(sigma >= 0.0)) fail(ErrorCode::invalid_argument, "sigma must be non-negative");
    if (sigma == 0.0 || plane.size().area() == 0) return plane;

    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = plane.width(), h = plane.height();
    const auto [lo_it, hi_it] = std::minmax_element(plane.values().begin(), plane.values().end());
    const float lo = *lo_it, hi = *hi_it;

    // Horizontal pass in double; each output sums taps in kernel order so the
    // result does not depend on how rows are scheduled.
    std::vector<double> tmp(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int sx = std::clamp(x + k, 0, w - 1);
                acc += kernel[k + radius] * plane.at(sx, y);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    Plane out(plane.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int sy = std::clamp(y + k, 0, h - 1);
                acc += kernel[k + radius] * tmp[static_cast<std::size_t>(sy) * w + x];
            }
            out.at(x, y) = std::clamp(static_cast<float>(acc), lo, hi);
        }
    }
    return out;
}

double default_blur_sigma(int grid_gap) {
    return std::clamp(grid_gap / 4.0, 1.0, 32.0);
}

BlendPlan make_blend_plan(const WorldSession& session, const ImageLookup& images) {
    BlendPlan plan;
    plan.prompt = session.global_blend_prompt;
    const double sigma = session.blur_sigma.value_or(default_blur_sigma(session.grid_gap));

    Image base = composite_tiles(session, images);
    Plane mask = build_blend_mask(session);
    const Size canvas = session.canvas_size;
    const Size gen = session.generation_resolution;
    if (canvas.width <= gen.width && canvas.height <= gen.height) {
        plan.base_image = std::move(base);
        plan.blend_mask = gaussian_blur(mask, sigma);
        plan.blur_sigma = sigma;
        return plan;
    }

    const double s = std::min(static_cast<double>(gen.width) / canvas.width,
                              static_cast<double>(gen.height) / canvas.height);
    const Size scaled{std::clamp(static_cast<int>(std::lround(canvas.width * s)), 1, gen.width),
                      std::clamp(static_cast<int>(std::lround(canvas.height * s)), 1, gen.height)};
    const Point offset{(gen.width - scaled.width) / 2, (gen.height - scaled.height) / 2};
    const Image small_base = resample(base, scaled);
    const Plane small_mask = resample(mask, scaled);

    plan.base_image = Image::rgb(gen.width, gen.height, composite_background);
    Plane letterboxed(gen, 1.0f);
    for (int y = 0; y < scaled.height; ++y) {
        for (int x = 0; x < scaled.width; ++x) {
            std::copy_n(small_base.pixel(x, y), 3, plan.base_image.pixel(x + offset.x, y + offset.y));
            letterboxed.at(x + offset.x, y + offset.y) = small_mask.at(x, y);
        }
    }
    plan.blur_sigma = sigma * s;
    plan.blend_mask = gaussian_blur(letterboxed, plan.blur_sigma);
    plan.scale = s;
    plan.offset = offset;
    return plan;
}

Image make_thumbnail(const Image& image, int edge) {
    if (image.empty()) fail(ErrorCode::invalid_argument, "cannot thumbnail an empty image");
    const double s = std::min(static_cast<double>(edge) / image.width(), static_cast<double>(edge) / image.height());
    if (s >= 1.0) return image;
    const Size dst{std::max(1, static_cast<int>(std::lround(image.width() * s))),
                   std::max(1, static_cast<int>(std::lround(image.height() * s)))};
    return resample(image, dst);
}

}  // namespace worldsmith
