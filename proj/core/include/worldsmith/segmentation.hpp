#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/image.hpp"
#include "worldsmith/inputs.hpp"

namespace worldsmith {

struct PaletteEntry {
    std::string region_id;
    Rgb color;
    std::string description;

    friend bool operator==(const PaletteEntry&, const PaletteEntry&) = default;
};

/// Multi-color region raster. Black means "no region"; every other pixel
/// color appears in the palette, which lists regions in paint order.
struct Segmentation {
    Image pixels;  // RGB
    std::vector<PaletteEntry> palette;

    Size size() const noexcept { return pixels.size(); }
};

struct RegionMask {
    std::string region_id;
    std::string description;
    BinaryMask mask;
};

/// Union of all brush actions of a region. Lasso actions with fewer than
/// three points degrade to a 1-pixel polyline.
BinaryMask region_mask(const RegionSpec& region, Size size);

/// Paints each region's mask in its color, in list order, over black. Later
/// regions win on overlap. Throws conflict on duplicate colors and
/// invalid_argument on black region colors.
Segmentation compose_segmentation(const std::vector<RegionSpec>& regions, Size size);

/// One mask per palette entry, set where the segmentation pixel equals the
/// entry's color. The masks are pairwise disjoint and cover every non-black
/// pixel of a valid segmentation.
std::vector<RegionMask> extract_binary_masks(const Segmentation& segmentation);

nlohmann::json palette_to_json(const std::vector<PaletteEntry>& palette);
std::vector<PaletteEntry> palette_from_json(const nlohmann::json& j);

}  // namespace worldsmith
