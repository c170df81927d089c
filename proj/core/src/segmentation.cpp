#include "worldsmith/segmentation.hpp"

#include "worldsmith/error.hpp"
#include "worldsmith/geometry.hpp"

namespace worldsmith {

BinaryMask region_mask(const RegionSpec& region, Size size) {
    BinaryMask mask(size);
    for (const auto& action : region.geometry) {
        if (action.points.empty()) continue;
        switch (action.brush) {
            case BrushKind::pencil: {
                const std::vector<std::vector<Point>> strokes{action.points};
                mask.merge(rasterize_pencil(strokes, action.stroke_width, size));
                break;
            }
            case BrushKind::hull:
                mask.merge(rasterize_hull(action.points, size));
                break;
            case BrushKind::lasso:
                if (action.points.size() >= 3) {
                    mask.merge(rasterize_lasso(action.points, size));
                } else {
                    const std::vector<std::vector<Point>> strokes{action.points};
                    mask.merge(rasterize_pencil(strokes, 1, size));
                }
                break;
        }
    }
    return mask;
}

Segmentation compose_segmentation(const std::vector<RegionSpec>& regions, Size size) {
    Segmentation seg{Image::rgb(size.width, size.height), {}};
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        if (r.color.is_black()) {
            fail(ErrorCode::invalid_argument, "region '" + r.region_id + "' uses reserved black color");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (regions[j].color == r.color) {
                fail(ErrorCode::conflict, "regions '" + regions[j].region_id + "' and '" + r.region_id +
                                              "' share a color");
            }
        }
        const auto mask = region_mask(r, size);
        for (int y = 0; y < size.height; ++y) {
            for (int x = 0; x < size.width; ++x) {
                if (mask.get(x, y)) seg.pixels.set_rgb(x, y, r.color);
            }
        }
        seg.palette.push_back({r.region_id, r.color, r.description});
    }
    return seg;
}

std::vector<RegionMask> extract_binary_masks(const Segmentation& segmentation) {
    std::vector<RegionMask> out;
    out.reserve(segmentation.palette.size());
    for (const auto& entry : segmentation.palette) {
        out.push_back({entry.region_id, entry.description, BinaryMask(segmentation.size())});
    }
    const auto& px = segmentation.pixels;
    for (int y = 0; y < px.height(); ++y) {
        for (int x = 0; x < px.width(); ++x) {
            const Rgb c = px.rgb_at(x, y);
            if (c.is_black()) continue;
            for (std::size_t i = 0; i < segmentation.palette.size(); ++i) {
                if (segmentation.palette[i].color == c) {
                    out[i].mask.set(x, y);
                    break;
                }
            }
        }
    }
    return out;
}

nlohmann::json palette_to_json(const std::vector<PaletteEntry>& palette) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : palette) {
        out.push_back({{"region_id", e.region_id},
                       {"color", {e.color.r, e.color.g, e.color.b}},
                       {"description", e.description}});
    }
    return out;
}

std::vector<PaletteEntry> palette_from_json(const nlohmann::json& j) {
    std::vector<PaletteEntry> out;
    try {
        for (const auto& e : j) {
            const auto& c = e.at("color");
            out.push_back({e.at("region_id").get<std::string>(),
                           {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()},
                           e.value("description", std::string{})});
        }
    } catch (const nlohmann::json::exception& ex) {
        fail(ErrorCode::validation, std::string("malformed palette: ") + ex.what());
    }
    return out;
}

}  // namespace worldsmith
