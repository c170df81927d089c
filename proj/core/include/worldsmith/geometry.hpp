#pragma once

#include <span>
#include <vector>

#include "worldsmith/image.hpp"

namespace worldsmith {

/// Convex hull by monotone chain. Counter-clockwise in the (x right, y up)
/// sense, i.e. positive signed area, starting from the lexicographically
/// smallest point. Collinear boundary points and duplicates are dropped; one
/// distinct point yields [p], collinear input yields its two extremes.
/// Throws invalid_argument on empty input.
std::vector<Point> convex_hull(std::span<const Point> points);

/// Union of round-capped strokes of width `stroke_width`: a pixel is set when
/// its center lies within stroke_width/2 of some stroke segment (or of the
/// point, for one-point strokes). Pixels off the canvas are clipped.
BinaryMask rasterize_pencil(std::span<const std::vector<Point>> strokes, int stroke_width, Size size);

/// Even-odd fill of the implicitly closed polygon. A pixel is inside when a
/// ray from its center towards +x crosses the boundary an odd number of times;
/// an edge counts for rows y with min(y0,y1) <= y < max(y0,y1).
BinaryMask fill_polygon(std::span<const Point> polygon, Size size);

/// Filled convex hull; hulls of fewer than three vertices degrade to a
/// 1-pixel-wide pencil stroke through the hull vertices.
BinaryMask rasterize_hull(std::span<const Point> points, Size size);

/// Even-odd fill of a closed lasso path. Throws invalid_argument below three
/// points.
BinaryMask rasterize_lasso(std::span<const Point> path, Size size);

/// Even-odd point-in-polygon test with the same edge convention as
/// fill_polygon, for callers that need a single sample.
bool point_in_polygon(std::span<const Point> polygon, Point p);

}  // namespace worldsmith
