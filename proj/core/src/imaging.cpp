#include "trafficpm/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "trafficpm/error.hpp"
#include "trafficpm/text.hpp"

namespace trafficpm::imaging {

namespace {

double cross(Point o, Point a, Point b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(Point p, Point a, Point b) {
    if (cross(a, b, p) != 0.0) return false;
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0) - (v < 0); }

bool segments_intersect(Point a, Point b, Point c, Point d) {
    int d1 = sign(cross(c, d, a));
    int d2 = sign(cross(c, d, b));
    int d3 = sign(cross(a, b, c));
    int d4 = sign(cross(a, b, d));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
           (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

bool is_simple(const std::vector<Point>& poly) {
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        Point a = poly[i], b = poly[(i + 1) % n];
        if (a == b) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            // Adjacent edges share exactly one vertex; anything more is a fold.
            bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            Point c = poly[j], d = poly[(j + 1) % n];
            if (adjacent) {
                Point other_ab = j == i + 1 ? a : b;
                Point other_cd = j == i + 1 ? d : c;
                if (on_segment(other_cd, a, b) || on_segment(other_ab, c, d)) return false;
                continue;
            }
            if (segments_intersect(a, b, c, d)) return false;
        }
    }
    return true;
}

}  // namespace

void validate(const RoiMask& mask) {
    const std::string who = "mask for camera '" + mask.camera_id + "'";
    if (mask.image_width <= 0 || mask.image_height <= 0)
        throw ValidationError(who + ": image dimensions must be positive");
    if (mask.polygon.size() < 3)
        throw ValidationError(who + ": polygon needs at least 3 vertices, got " +
                              std::to_string(mask.polygon.size()));
    for (std::size_t i = 0; i < mask.polygon.size(); ++i) {
        auto p = mask.polygon[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < 0 || p.y < 0 ||
            p.x > mask.image_width || p.y > mask.image_height)
            throw ValidationError(who + ": vertex " + std::to_string(i) + " (" + format_double(p.x) +
                                  ", " + format_double(p.y) + ") lies outside the image");
    }
    if (!is_simple(mask.polygon)) throw ValidationError(who + ": polygon is self-intersecting");
}

RoiMask parse_mask(std::string_view json_text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("mask is not valid JSON: ") + e.what(), e.byte);
    }
    RoiMask mask;
    try {
        mask.camera_id = doc.at("camera_id").get<std::string>();
        mask.image_width = doc.at("image_width").get<int>();
        mask.image_height = doc.at("image_height").get<int>();
        for (const auto& v : doc.at("polygon")) {
            if (!v.is_array() || v.size() != 2) throw ValidationError("polygon vertex must be [x,y]");
            mask.polygon.push_back(Point{v[0].get<double>(), v[1].get<double>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mask schema violation: ") + e.what());
    }
    validate(mask);
    return mask;
}

RoiMask load_mask(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("mask file not found: " + path.string());
    try {
        return parse_mask(read_text_file(path.string()));
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

bool point_in_polygon(Point p, std::span<const Point> polygon) {
    const std::size_t n = polygon.size();
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        Point a = polygon[i], b = polygon[j];
        if (on_segment(p, a, b)) return true;
        if ((a.y > p.y) != (b.y > p.y)) {
            double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

Raster mask_raster(const Raster& raster, std::span<const Point> polygon) {
    Raster out = raster;
    for (int y = 0; y < raster.height; ++y) {
        for (int x = 0; x < raster.width; ++x) {
            if (!point_in_polygon(Point{x + 0.5, y + 0.5}, polygon)) {
                auto* px = out.pixel(x, y);
                px[0] = px[1] = px[2] = 0;
            }
        }
    }
    return out;
}

TrafficImage apply_mask(const TrafficImage& image, const RoiMask& mask) {
    if (image.camera_id != mask.camera_id)
        throw ArgumentError("mask for camera '" + mask.camera_id + "' applied to image from '" +
                            image.camera_id + "'");
    if (image.width() != mask.image_width || image.height() != mask.image_height)
        throw ArgumentError("mask is " + std::to_string(mask.image_width) + "x" +
                            std::to_string(mask.image_height) + " but image is " +
                            std::to_string(image.width()) + "x" + std::to_string(image.height()));
    TrafficImage out;
    out.camera_id = image.camera_id;
    out.image_timestamp = image.image_timestamp;
    out.pixels = mask_raster(image.pixels, mask.polygon);
    auto bytes = encode_jpeg(out.pixels);
    out.content_hash = ContentHash::of(bytes);
    out.encoded = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
    return out;
}

}  // namespace trafficpm::imaging
