#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "trafficpm/image.hpp"

namespace trafficpm::imaging {

struct Point {
    double x = 0;
    double y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Road region of interest for one camera, in that camera's pixel frame.
struct RoiMask {
    std::string camera_id;
    std::vector<Point> polygon;
    int image_width = 0;
    int image_height = 0;

    friend bool operator==(const RoiMask&, const RoiMask&) = default;
};

/// Throws ValidationError on fewer than three vertices, a vertex outside
/// [0,w]x[0,h], non-positive dimensions, or a self-intersecting polygon.
void validate(const RoiMask& mask);

/// Mask JSON: {"camera_id","image_width","image_height","polygon":[[x,y],...]}.
RoiMask load_mask(const std::filesystem::path& path);
RoiMask parse_mask(std::string_view json_text);

/// Even-odd membership; points on an edge or vertex count as inside.
bool point_in_polygon(Point p, std::span<const Point> polygon);

/// Blacks out every pixel whose centre lies outside the polygon. The result
/// is re-encoded and re-hashed; camera id and timestamp carry over.
TrafficImage apply_mask(const TrafficImage& image, const RoiMask& mask);

/// Pixel-level part of apply_mask, without the re-encode.
Raster mask_raster(const Raster& raster, std::span<const Point> polygon);

}  // namespace trafficpm::imaging
