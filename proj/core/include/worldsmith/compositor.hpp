#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "worldsmith/image.hpp"
#include "worldsmith/session.hpp"

namespace worldsmith {

inline constexpr Rgb composite_background{128, 128, 128};

enum class Resample { bilinear, nearest };

/// Pixel-center aligned resampling; same-size bilinear resampling is an exact
/// copy.
Image resample(const Image& src, Size dst, Resample mode = Resample::bilinear);
Plane resample(const Plane& src, Size dst);

/// Fetches the pixels behind an ImageRef.
using ImageLookup = std::function<std::optional<Image>(const ImageRef&)>;

/// Pastes every tile's current image into its rect, in tile order, over the
/// mid-gray background. Throws conflict naming the first tile without an image.
Image composite_tiles(const WorldSession& session, const ImageLookup& images,
                      Resample mode = Resample::bilinear);

/// 0 inside any tile rect, 1 elsewhere.
Plane build_blend_mask(Size canvas, std::span<const TileRect> rects);
Plane build_blend_mask(const WorldSession& session);

/// Normalized discrete Gaussian with radius ceil(3 sigma); size 2r+1.
std::vector<double> gaussian_kernel(double sigma);

/// Separable Gaussian blur with clamp-to-edge borders. sigma == 0 returns the
/// input unchanged; output stays within the input's value range.
Plane gaussian_blur(const Plane& plane, double sigma);

/// grid_gap / 4 clamped to [1, 32].
double default_blur_sigma(int grid_gap);

struct BlendPlan {
    Image base_image;   // RGB, tiles pasted
    Plane blend_mask;   // 1 = synthesize, 0 = keep
    std::string prompt;
    double blur_sigma = 0.0;  // in plan pixels
    double scale = 1.0;       // plan pixels per canvas pixel
    Point offset;             // letterbox offset of the scaled canvas
};

/// Composite + blurred blend mask + prompt. When the canvas exceeds the
/// session's generation resolution, both planes are scaled down to fit it
/// (aspect preserved) and letterboxed; letterbox margins count as empty space.
BlendPlan make_blend_plan(const WorldSession& session, const ImageLookup& images);

/// Fits the image into an edge x edge box (aspect preserved, no padding).
Image make_thumbnail(const Image& image, int edge = 96);

}  // namespace worldsmith
