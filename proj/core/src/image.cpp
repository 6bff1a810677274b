#include "trafficpm/image.hpp"

#include <openssl/evp.h>

#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>

// jpeglib.h expects size_t and FILE to be declared already.
#include <jpeglib.h>

#include "trafficpm/error.hpp"

namespace trafficpm {

ContentHash ContentHash::of(std::span<const std::uint8_t> data) {
    std::array<std::uint8_t, 32> digest{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != digest.size())
        throw Error("SHA-256 digest failed");
    return ContentHash{digest};
}

ContentHash ContentHash::from_hex(std::string_view hex) {
    if (hex.size() != 64) throw ParseError("content hash must be 64 hex digits", 0);
    auto nibble = [&](std::size_t i) -> std::uint8_t {
        char c = hex[i];
        if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
        if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
        if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
        throw ParseError("non-hex digit in content hash", i);
    };
    std::array<std::uint8_t, 32> bytes{};
    for (std::size_t i = 0; i < bytes.size(); ++i)
        bytes[i] = static_cast<std::uint8_t>(nibble(2 * i) << 4 | nibble(2 * i + 1));
    return ContentHash{bytes};
}

std::string ContentHash::hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (auto b : bytes_) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

namespace {

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void on_jpeg_error(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->message);
    std::longjmp(mgr->jump, 1);
}

// Warnings (corrupt data, premature end of stream) are fatal for us.
void on_jpeg_message(j_common_ptr cinfo, int level) {
    if (level < 0) {
        auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
        (*cinfo->err->format_message)(cinfo, mgr->message);
        std::longjmp(mgr->jump, 1);
    }
}

}  // namespace

Raster decode_jpeg(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || bytes[0] != 0xFF || bytes[1] != 0xD8)
        throw DecodeError("not a JPEG stream");

    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = on_jpeg_error;
    err.base.emit_message = on_jpeg_message;

    Raster out;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(std::string("JPEG decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    if (cinfo.output_components != 3) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError("JPEG did not decode to 3 channels");
    }
    out = Raster(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out.pixel(0, static_cast<int>(cinfo.output_scanline));
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const Raster& raster, int quality) {
    if (raster.width <= 0 || raster.height <= 0) throw ArgumentError("cannot encode empty raster");

    jpeg_compress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = on_jpeg_error;

    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        throw Error(std::string("JPEG encode failed: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = static_cast<JDIMENSION>(raster.width);
    cinfo.image_height = static_cast<JDIMENSION>(raster.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto* row = const_cast<JSAMPROW>(raster.pixel(0, static_cast<int>(cinfo.next_scanline)));
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

TrafficImage make_traffic_image(std::string camera_id, Timestamp image_timestamp,
                                std::vector<std::uint8_t> bytes, int expected_width,
                                int expected_height) {
    TrafficImage image;
    image.camera_id = std::move(camera_id);
    image.image_timestamp = image_timestamp;
    image.content_hash = ContentHash::of(bytes);
    image.pixels = decode_jpeg(bytes);
    if (expected_width > 0 && expected_height > 0 &&
        (image.pixels.width != expected_width || image.pixels.height != expected_height)) {
        throw IntegrityError("image for camera " + image.camera_id + " declared " +
                             std::to_string(expected_width) + "x" + std::to_string(expected_height) +
                             " but decoded " + std::to_string(image.pixels.width) + "x" +
                             std::to_string(image.pixels.height));
    }
    image.encoded = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
    return image;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed: " + path);
    return bytes;
}

}  // namespace trafficpm
