#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "worldsmith/image.hpp"

namespace worldsmith {

inline constexpr Size default_generation_resolution{512, 512};
inline constexpr double default_img2img_strength = 0.65;

enum class BrushKind : std::uint8_t { pencil = 0, hull = 1, lasso = 2 };

std::string_view to_string(BrushKind kind) noexcept;
BrushKind brush_from_string(std::string_view name);

/// One brush gesture. Lasso paths are implicitly closed.
struct BrushAction {
    BrushKind brush = BrushKind::pencil;
    std::vector<Point> points;
    int stroke_width = 1;  // pencil only

    friend bool operator==(const BrushAction&, const BrushAction&) = default;
};

struct RegionSpec {
    std::string region_id;
    Rgb color;
    std::string description;
    std::vector<BrushAction> geometry;

    friend bool operator==(const RegionSpec&, const RegionSpec&) = default;
};

/// Painted sketch: RGB paint plus a coverage mask marking painted pixels.
struct SketchLayer {
    Image image;  // 3 channels
    BinaryMask coverage;

    Size size() const noexcept { return image.size(); }
    /// RGBA form used for storage: alpha is 255 on covered pixels, 0 elsewhere.
    Image to_rgba() const;
    static SketchLayer from_rgba(const Image& rgba);
    /// content_id(to_rgba()).
    std::string content_id() const;

    friend bool operator==(const SketchLayer&, const SketchLayer&) = default;
};

struct ImageRef {
    std::string image_id;  // content hash, also the storage key
    int width = 0;
    int height = 0;

    friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

/// The working prompt state of a tile.
struct GenerationInputs {
    std::string scene_prompt;
    std::vector<RegionSpec> regions;  // paint order: later over earlier
    std::optional<SketchLayer> sketch;
    std::optional<ImageRef> base_image;
    std::optional<std::uint64_t> seed;
    double img2img_strength = default_img2img_strength;

    const RegionSpec* find_region(std::string_view region_id) const noexcept;
    bool has_color(Rgb color) const noexcept;

    /// Appends a region. Assigns the next free palette color when `color` is
    /// black and a fresh id when `region_id` is empty.
    /// Throws conflict on duplicate color or id.
    const RegionSpec& add_region(RegionSpec region);

    friend bool operator==(const GenerationInputs&, const GenerationInputs&) = default;
};

/// Fixed region palette: twelve hues 30 degrees apart, ordered by stepping
/// five slots at a time so consecutive regions get distant colors.
const std::array<Rgb, 12>& region_palette() noexcept;
/// First palette entry not used by `inputs`; cycles through dimmed variants
/// once all twelve are taken.
Rgb next_region_color(const GenerationInputs& inputs);

/// Checks region invariants (non-black unique colors, unique ids, non-empty
/// brush actions, positive stroke width, strength in [0,1]).
void validate_inputs(const GenerationInputs& inputs);

nlohmann::json region_to_json(const RegionSpec& region);
RegionSpec region_from_json(const nlohmann::json& j);
nlohmann::json regions_to_json(const std::vector<RegionSpec>& regions);
std::vector<RegionSpec> regions_from_json(const nlohmann::json& j);

nlohmann::json image_ref_to_json(const ImageRef& ref);
ImageRef image_ref_from_json(const nlohmann::json& j);

}  // namespace worldsmith
