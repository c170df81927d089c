#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace worldsmith {

struct Size {
    int width = 0;
    int height = 0;

    constexpr std::int64_t area() const noexcept {
        return static_cast<std::int64_t>(width) * height;
    }
    constexpr bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width && y < height;
    }
    friend constexpr bool operator==(const Size&, const Size&) = default;
};

/// Magnitude bound for any brush coordinate accepted by the engine.
inline constexpr std::int32_t max_coordinate = 1 << 20;

/// Integer canvas coordinate. Pixel (x, y) has its center exactly at (x, y).
struct Point {
    std::int32_t x = 0;
    std::int32_t y = 0;

    friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

/// Snaps a sub-pixel coordinate to the nearest pixel center, rounding half up.
Point snap_point(double x, double y) noexcept;

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    constexpr bool is_black() const noexcept { return r == 0 && g == 0 && b == 0; }
    friend constexpr auto operator<=>(const Rgb&, const Rgb&) = default;
};

/// Interleaved 8-bit raster with 1 (gray), 3 (RGB) or 4 (RGBA) channels.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, std::uint8_t fill = 0);
    Image(int width, int height, int channels, std::vector<std::uint8_t> data);

    static Image rgb(int width, int height, Rgb fill = {});

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    Size size() const noexcept { return {width_, height_}; }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t* pixel(int x, int y) noexcept {
        return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * channels_;
    }
    const std::uint8_t* pixel(int x, int y) const noexcept {
        return data_.data() + (static_cast<std::size_t>(y) * width_ + x) * channels_;
    }
    Rgb rgb_at(int x, int y) const noexcept;
    void set_rgb(int x, int y, Rgb c) noexcept;

    std::span<const std::uint8_t> bytes() const noexcept { return data_; }
    std::span<std::uint8_t> bytes() noexcept { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Single-channel hard-edged mask; each cell is 0 or 1.
class BinaryMask {
public:
    BinaryMask() = default;
    explicit BinaryMask(Size size);

    int width() const noexcept { return size_.width; }
    int height() const noexcept { return size_.height; }
    Size size() const noexcept { return size_; }

    bool get(int x, int y) const noexcept {
        return bits_[static_cast<std::size_t>(y) * size_.width + x] != 0;
    }
    void set(int x, int y, bool v = true) noexcept {
        bits_[static_cast<std::size_t>(y) * size_.width + x] = v ? 1 : 0;
    }
    std::int64_t count() const noexcept;
    bool any() const noexcept;
    void merge(const BinaryMask& other);

    std::span<const std::uint8_t> cells() const noexcept { return bits_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Size size_;
    std::vector<std::uint8_t> bits_;
};

/// Single-channel float plane, row-major.
class Plane {
public:
    Plane() = default;
    Plane(Size size, float fill = 0.0f);

    int width() const noexcept { return size_.width; }
    int height() const noexcept { return size_.height; }
    Size size() const noexcept { return size_; }

    float& at(int x, int y) noexcept { return v_[static_cast<std::size_t>(y) * size_.width + x]; }
    float at(int x, int y) const noexcept { return v_[static_cast<std::size_t>(y) * size_.width + x]; }

    std::span<const float> values() const noexcept { return v_; }
    std::span<float> values() noexcept { return v_; }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    Size size_;
    std::vector<float> v_;
};

/// Quantizes a [0,1] plane to 8-bit grayscale (round to nearest, clamped).
Image quantize_plane(const Plane& plane);
Plane plane_from_gray(const Image& gray);

Image mask_to_gray(const BinaryMask& mask);
/// Nonzero gray samples become set bits.
BinaryMask mask_from_gray(const Image& gray);

}  // namespace worldsmith
