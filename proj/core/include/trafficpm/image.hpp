#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "trafficpm/time.hpp"

namespace trafficpm {

/// SHA-256 of some byte string.
class ContentHash {
public:
    ContentHash() = default;
    explicit ContentHash(const std::array<std::uint8_t, 32>& bytes) : bytes_(bytes) {}

    static ContentHash of(std::span<const std::uint8_t> data);
    static ContentHash from_hex(std::string_view hex);

    std::string hex() const;
    const std::array<std::uint8_t, 32>& bytes() const { return bytes_; }

    friend auto operator<=>(const ContentHash&, const ContentHash&) = default;

private:
    std::array<std::uint8_t, 32> bytes_{};
};

/// Interleaved 8-bit RGB, row-major, no padding.
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Raster() = default;
    Raster(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
    const std::uint8_t* pixel(int x, int y) const {
        return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
    }

    friend bool operator==(const Raster&, const Raster&) = default;
};

/// Throws DecodeError on anything libjpeg complains about, including
/// truncated streams it would otherwise pad out with grey.
Raster decode_jpeg(std::span<const std::uint8_t> bytes);

/// Deterministic for a given raster and quality.
std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality = 95);

/// One archived camera frame. The encoded bytes are shared so copies stay
/// cheap when images move between threads.
struct TrafficImage {
    std::string camera_id;
    Timestamp image_timestamp;
    Raster pixels;
    ContentHash content_hash;
    std::shared_ptr<const std::vector<std::uint8_t>> encoded;

    int width() const { return pixels.width; }
    int height() const { return pixels.height; }
};

/// Decodes and hashes `bytes`. When `expected_width`/`expected_height` are
/// positive the decoded raster must match them or IntegrityError is thrown.
TrafficImage make_traffic_image(std::string camera_id, Timestamp image_timestamp,
                                std::vector<std::uint8_t> bytes, int expected_width = 0,
                                int expected_height = 0);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);

}  // namespace trafficpm
