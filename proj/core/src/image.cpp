#include "worldsmith/image.hpp"

#include <algorithm>
#include <cmath>

#include "worldsmith/error.hpp"

namespace worldsmith {

Point snap_point(double x, double y) noexcept {
    return {static_cast<std::int32_t>(std::floor(x + 0.5)),
            static_cast<std::int32_t>(std::floor(y + 0.5))};
}

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3 && channels != 4)) {
        fail(ErrorCode::invalid_argument, "invalid image dimensions");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image::Image(int width, int height, int channels, std::vector<std::uint8_t> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    if (width < 0 || height < 0 || (channels != 1 && channels != 3 && channels != 4) ||
        data_.size() != static_cast<std::size_t>(width) * height * channels) {
        fail(ErrorCode::invalid_argument, "image buffer does not match its dimensions");
    }
}

Image Image::rgb(int width, int height, Rgb fill) {
    Image img(width, height, 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) img.set_rgb(x, y, fill);
    }
    return img;
}

Rgb Image::rgb_at(int x, int y) const noexcept {
    const auto* p = pixel(x, y);
    if (channels_ < 3) return {p[0], p[0], p[0]};
    return {p[0], p[1], p[2]};
}

void Image::set_rgb(int x, int y, Rgb c) noexcept {
    auto* p = pixel(x, y);
    if (channels_ < 3) {
        p[0] = static_cast<std::uint8_t>((c.r + c.g + c.b) / 3);
        return;
    }
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
}

BinaryMask::BinaryMask(Size size) : size_(size) {
    if (size.width < 0 || size.height < 0) {
        fail(ErrorCode::invalid_argument, "invalid mask dimensions");
    }
    bits_.assign(static_cast<std::size_t>(size.area()), 0);
}

std::int64_t BinaryMask::count() const noexcept {
    return std::count(bits_.begin(), bits_.end(), std::uint8_t{1});
}

bool BinaryMask::any() const noexcept {
    return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
}

void BinaryMask::merge(const BinaryMask& other) {
    if (other.size_ != size_) fail(ErrorCode::invalid_argument, "mask size mismatch");
    for (std::size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
}

Plane::Plane(Size size, float fill) : size_(size) {
    if (size.width < 0 || size.height < 0) {
        fail(ErrorCode::invalid_argument, "invalid plane dimensions");
    }
    v_.assign(static_cast<std::size_t>(size.area()), fill);
}

Image quantize_plane(const Plane& plane) {
    Image out(plane.width(), plane.height(), 1);
    auto dst = out.bytes();
    auto src = plane.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double v = std::clamp(static_cast<double>(src[i]), 0.0, 1.0);
        dst[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    return out;
}

Plane plane_from_gray(const Image& gray) {
    if (gray.channels() != 1) fail(ErrorCode::invalid_argument, "expected a grayscale image");
    Plane out(gray.size());
    auto src = gray.bytes();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = static_cast<float>(src[i]) / 255.0f;
    return out;
}

Image mask_to_gray(const BinaryMask& mask) {
    Image out(mask.width(), mask.height(), 1);
    auto dst = out.bytes();
    auto src = mask.cells();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return out;
}

BinaryMask mask_from_gray(const Image& gray) {
    if (gray.channels() != 1) fail(ErrorCode::invalid_argument, "expected a grayscale image");
    BinaryMask out(gray.size());
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) out.set(x, y, gray.pixel(x, y)[0] != 0);
    }
    return out;
}

}  // namespace worldsmith
