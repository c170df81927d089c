#include "worldsmith/inputs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "worldsmith/codec.hpp"
#include "worldsmith/error.hpp"

namespace worldsmith {

std::string_view to_string(BrushKind kind) noexcept {
    switch (kind) {
        case BrushKind::pencil: return "pencil";
        case BrushKind::hull: return "hull";
        case BrushKind::lasso: return "lasso";
    }
    return "pencil";
}

BrushKind brush_from_string(std::string_view name) {
    if (name == "pencil") return BrushKind::pencil;
    if (name == "hull") return BrushKind::hull;
    if (name == "lasso") return BrushKind::lasso;
    fail(ErrorCode::invalid_argument, "unknown brush '" + std::string(name) + "'");
}

Image SketchLayer::to_rgba() const {
    Image out(image.width(), image.height(), 4);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const auto* s = image.pixel(x, y);
            auto* d = out.pixel(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
            d[3] = coverage.get(x, y) ? 255 : 0;
        }
    }
    return out;
}

SketchLayer SketchLayer::from_rgba(const Image& rgba) {
    if (rgba.channels() != 4) fail(ErrorCode::validation, "sketch layer must be RGBA");
    SketchLayer out{Image(rgba.width(), rgba.height(), 3), BinaryMask(rgba.size())};
    for (int y = 0; y < rgba.height(); ++y) {
        for (int x = 0; x < rgba.width(); ++x) {
            const auto* s = rgba.pixel(x, y);
            auto* d = out.image.pixel(x, y);
            d[0] = s[0];
            d[1] = s[1];
            d[2] = s[2];
            out.coverage.set(x, y, s[3] != 0);
        }
    }
    return out;
}

std::string SketchLayer::content_id() const { return worldsmith::content_id(to_rgba()); }

const RegionSpec* GenerationInputs::find_region(std::string_view region_id) const noexcept {
    auto it = std::find_if(regions.begin(), regions.end(),
                           [&](const RegionSpec& r) { return r.region_id == region_id; });
    return it == regions.end() ? nullptr : &*it;
}

bool GenerationInputs::has_color(Rgb color) const noexcept {
    return std::any_of(regions.begin(), regions.end(),
                       [&](const RegionSpec& r) { return r.color == color; });
}

const RegionSpec& GenerationInputs::add_region(RegionSpec region) {
    if (region.color.is_black()) region.color = next_region_color(*this);
    if (has_color(region.color)) {
        fail(ErrorCode::conflict, "region color already in use");
    }
    if (region.region_id.empty()) {
        for (std::size_t k = regions.size() + 1;; ++k) {
            std::string id = "r" + std::to_string(k);
            if (!find_region(id)) {
                region.region_id = std::move(id);
                break;
            }
        }
    } else if (find_region(region.region_id)) {
        fail(ErrorCode::conflict, "region id '" + region.region_id + "' already in use");
    }
    regions.push_back(std::move(region));
    return regions.back();
}

const std::array<Rgb, 12>& region_palette() noexcept {
    // Hues 0,150,300,90,240,30,180,330,120,270,60,210 at full saturation/value.
    static constexpr std::array<Rgb, 12> palette{{
        {255, 0, 0},
        {0, 255, 128},
        {255, 0, 255},
        {128, 255, 0},
        {0, 0, 255},
        {255, 128, 0},
        {0, 255, 255},
        {255, 0, 128},
        {0, 255, 0},
        {128, 0, 255},
        {255, 255, 0},
        {0, 128, 255},
    }};
    return palette;
}

Rgb next_region_color(const GenerationInputs& inputs) {
    for (int round = 0; round < 8; ++round) {
        for (Rgb c : region_palette()) {
            if (round > 0) {
                // Dim by round/8; never reaches black.
                c = {static_cast<std::uint8_t>(c.r * (8 - round) / 8),
                     static_cast<std::uint8_t>(c.g * (8 - round) / 8),
                     static_cast<std::uint8_t>(c.b * (8 - round) / 8)};
            }
            if (!inputs.has_color(c)) return c;
        }
    }
    fail(ErrorCode::conflict, "region palette exhausted");
}

void validate_inputs(const GenerationInputs& inputs) {
    for (std::size_t i = 0; i < inputs.regions.size(); ++i) {
        const auto& r = inputs.regions[i];
        if (r.color.is_black()) {
            fail(ErrorCode::invalid_argument, "region '" + r.region_id + "' uses reserved black color");
        }
        if (r.region_id.empty()) fail(ErrorCode::invalid_argument, "region id must not be empty");
        for (std::size_t j = 0; j < i; ++j) {
            if (inputs.regions[j].color == r.color) {
                fail(ErrorCode::conflict, "duplicate region color in '" + r.region_id + "'");
            }
            if (inputs.regions[j].region_id == r.region_id) {
                fail(ErrorCode::conflict, "duplicate region id '" + r.region_id + "'");
            }
        }
        for (const auto& a : r.geometry) {
            if (a.points.empty()) {
                fail(ErrorCode::invalid_argument, "brush action in '" + r.region_id + "' has no points");
            }
            for (const auto& p : a.points) {
                if (std::abs(p.x) > max_coordinate || std::abs(p.y) > max_coordinate) {
                    fail(ErrorCode::invalid_argument, "brush coordinate out of range in '" + r.region_id + "'");
                }
            }
            if (a.stroke_width < 1) {
                fail(ErrorCode::invalid_argument, "stroke width must be positive");
            }
        }
    }
    if (!(inputs.img2img_strength >= 0.0 && inputs.img2img_strength <= 1.0)) {
        fail(ErrorCode::invalid_argument, "img2img_strength must lie in [0,1]");
    }
    if (inputs.sketch && inputs.sketch->image.size() != inputs.sketch->coverage.size()) {
        fail(ErrorCode::invalid_argument, "sketch coverage does not match sketch image");
    }
}

nlohmann::json region_to_json(const RegionSpec& region) {
    nlohmann::json geometry = nlohmann::json::array();
    for (const auto& a : region.geometry) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : a.points) pts.push_back({p.x, p.y});
        nlohmann::json action{{"brush", to_string(a.brush)}, {"points", std::move(pts)}};
        if (a.brush == BrushKind::pencil) action["stroke_width"] = a.stroke_width;
        geometry.push_back(std::move(action));
    }
    return {{"region_id", region.region_id},
            {"color", {region.color.r, region.color.g, region.color.b}},
            {"description", region.description},
            {"geometry", std::move(geometry)}};
}

namespace {

std::uint8_t color_channel(const nlohmann::json& v) {
    const auto c = v.get<int>();
    if (c < 0 || c > 255) fail(ErrorCode::invalid_argument, "color channel out of range");
    return static_cast<std::uint8_t>(c);
}

}  // namespace

RegionSpec region_from_json(const nlohmann::json& j) {
    try {
        RegionSpec r;
        r.region_id = j.value("region_id", std::string{});
        r.description = j.value("description", std::string{});
        if (j.contains("color") && !j["color"].is_null()) {
            const auto& c = j.at("color");
            if (!c.is_array() || c.size() != 3) fail(ErrorCode::invalid_argument, "color must be [r,g,b]");
            r.color = {color_channel(c[0]), color_channel(c[1]), color_channel(c[2])};
        }
        for (const auto& a : j.value("geometry", nlohmann::json::array())) {
            BrushAction action;
            action.brush = brush_from_string(a.at("brush").get<std::string>());
            action.stroke_width = a.value("stroke_width", 1);
            for (const auto& p : a.at("points")) {
                if (!p.is_array() || p.size() != 2) fail(ErrorCode::invalid_argument, "point must be [x,y]");
                const double x = p[0].get<double>(), y = p[1].get<double>();
                if (!(std::abs(x) <= max_coordinate && std::abs(y) <= max_coordinate)) {
                    fail(ErrorCode::invalid_argument, "brush coordinate out of range");
                }
                action.points.push_back(snap_point(x, y));
            }
            r.geometry.push_back(std::move(action));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::invalid_argument, std::string("malformed region: ") + e.what());
    }
}

nlohmann::json regions_to_json(const std::vector<RegionSpec>& regions) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : regions) out.push_back(region_to_json(r));
    return out;
}

std::vector<RegionSpec> regions_from_json(const nlohmann::json& j) {
    if (!j.is_array()) fail(ErrorCode::invalid_argument, "regions must be an array");
    std::vector<RegionSpec> out;
    for (const auto& r : j) out.push_back(region_from_json(r));
    return out;
}

nlohmann::json image_ref_to_json(const ImageRef& ref) {
    return {{"image_id", ref.image_id}, {"width", ref.width}, {"height", ref.height}};
}

ImageRef image_ref_from_json(const nlohmann::json& j) {
    return {j.at("image_id").get<std::string>(), j.at("width").get<int>(), j.at("height").get<int>()};
}

}  // namespace worldsmith
