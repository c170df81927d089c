#include "worldsmith/codec.hpp"

#include <csetjmp>
#include <cstring>

#include <openssl/evp.h>
#include <openssl/sha.h>
#include <png.h>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

struct PngWriteTarget {
    Bytes* out;
};

void png_write_cb(png_structp png, png_bytep data, png_size_t len) {
    auto* target = static_cast<PngWriteTarget*>(png_get_io_ptr(png));
    target->out->insert(target->out->end(), data, data + len);
}

void png_flush_cb(png_structp) {}

struct PngReadSource {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void png_read_cb(png_structp png, png_bytep out, png_size_t len) {
    auto* src = static_cast<PngReadSource*>(png_get_io_ptr(png));
    if (src->pos + len > src->size) {
        png_error(png, "truncated PNG stream");
    }
    std::memcpy(out, src->data + src->pos, len);
    src->pos += len;
}

// Rows must already be laid out for the requested bit depth. Returns false on
// libpng error; no C++ objects live in this frame across setjmp.
bool write_png_raw(Bytes& out, int width, int height, int color_type, int bit_depth,
                   png_bytepp rows) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        return false;
    }
    PngWriteTarget target{&out};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        return false;
    }
    png_set_write_fn(png, &target, png_write_cb, png_flush_cb);
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return true;
}

struct DecodedHeader {
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int channels = 0;
};

// Two-phase decode so the pixel buffer can be allocated by the caller between
// the header read and the row read. Returns false on libpng error.
bool read_png_raw(const std::uint8_t* data, std::size_t size, DecodedHeader& header,
                  std::vector<std::uint8_t>& pixels, std::vector<png_bytep>& rows) {
    if (size < 8 || png_sig_cmp(data, 0, 8) != 0) return false;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) return false;
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        return false;
    }
    PngReadSource src{data, size, 0};
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    png_set_read_fn(png, &src, png_read_cb);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    header.width = png_get_image_width(png, info);
    header.height = png_get_image_height(png, info);
    header.channels = png_get_channels(png, info);
    if (header.width > 1u << 15 || header.height > 1u << 15 || header.channels < 1 ||
        header.channels > 4) {
        png_destroy_read_struct(&png, &info, nullptr);
        return false;
    }
    const std::size_t stride = png_get_rowbytes(png, info);
    pixels.resize(stride * header.height);
    rows.resize(header.height);
    for (png_uint_32 y = 0; y < header.height; ++y) rows[y] = pixels.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return true;
}

}  // namespace

Bytes encode_png(const Image& image) {
    int color_type = 0;
    switch (image.channels()) {
        case 1: color_type = PNG_COLOR_TYPE_GRAY; break;
        case 3: color_type = PNG_COLOR_TYPE_RGB; break;
        case 4: color_type = PNG_COLOR_TYPE_RGB_ALPHA; break;
        default: fail(ErrorCode::invalid_argument, "unsupported channel count for PNG");
    }
    if (image.width() <= 0 || image.height() <= 0) {
        fail(ErrorCode::invalid_argument, "cannot encode an empty image");
    }
    std::vector<png_bytep> rows(image.height());
    for (int y = 0; y < image.height(); ++y) {
        rows[y] = const_cast<png_bytep>(image.pixel(0, y));
    }
    Bytes out;
    if (!write_png_raw(out, image.width(), image.height(), color_type, 8, rows.data())) {
        fail(ErrorCode::storage, "PNG encoding failed");
    }
    return out;
}

Bytes encode_mask_png(const BinaryMask& mask) {
    if (mask.width() <= 0 || mask.height() <= 0) {
        fail(ErrorCode::invalid_argument, "cannot encode an empty mask");
    }
    const std::size_t stride = (static_cast<std::size_t>(mask.width()) + 7) / 8;
    std::vector<std::uint8_t> packed(stride * mask.height(), 0);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.get(x, y)) packed[y * stride + x / 8] |= static_cast<std::uint8_t>(0x80u >> (x % 8));
        }
    }
    std::vector<png_bytep> rows(mask.height());
    for (int y = 0; y < mask.height(); ++y) rows[y] = packed.data() + y * stride;
    Bytes out;
    if (!write_png_raw(out, mask.width(), mask.height(), PNG_COLOR_TYPE_GRAY, 1, rows.data())) {
        fail(ErrorCode::storage, "PNG encoding failed");
    }
    return out;
}

Image decode_png(std::span<const std::uint8_t> png) {
    DecodedHeader header;
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    if (!read_png_raw(png.data(), png.size(), header, pixels, rows)) {
        fail(ErrorCode::validation, "invalid PNG data");
    }
    return Image(static_cast<int>(header.width), static_cast<int>(header.height), header.channels,
                 std::move(pixels));
}

BinaryMask decode_mask_png(std::span<const std::uint8_t> png) {
    Image img = decode_png(png);
    if (img.channels() != 1) fail(ErrorCode::validation, "mask PNG must be grayscale");
    return mask_from_gray(img);
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) fail(ErrorCode::validation, "base64 length is not a multiple of 4");
    Bytes out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) fail(ErrorCode::validation, "invalid base64 data");
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') ++pad;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    unsigned int len = 0;
    EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (auto b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) noexcept {
    return fnv1a64(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()), seed);
}

std::string hex_u64(std::uint64_t v) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = hex[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string content_id(const Image& image) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(image.channels()));
    w.u32(static_cast<std::uint32_t>(image.width()));
    w.u32(static_cast<std::uint32_t>(image.height()));
    auto px = image.bytes();
    Bytes buf = w.take();
    buf.insert(buf.end(), px.begin(), px.end());
    return sha256_hex(buf);
}

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.insert(out_.end(), s.begin(), s.end());
}

void ByteWriter::blob(std::span<const std::uint8_t> b) {
    u32(static_cast<std::uint32_t>(b.size()));
    out_.insert(out_.end(), b.begin(), b.end());
}

void ByteWriter::field(std::uint8_t tag, const ByteWriter& nested) {
    u8(tag);
    blob(nested.bytes());
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    if (n > in_.size() - pos_) fail(ErrorCode::validation, "truncated binary record");
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
}

std::uint8_t ByteReader::u8() { return take(1)[0]; }

std::uint32_t ByteReader::u32() {
    auto s = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    auto s = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(s[i]) << (8 * i);
    return v;
}

std::string ByteReader::str() {
    auto s = take(u32());
    return {s.begin(), s.end()};
}

Bytes ByteReader::blob() {
    auto s = take(u32());
    return {s.begin(), s.end()};
}

ByteReader ByteReader::field(std::uint8_t expected_tag) {
    const auto tag = u8();
    if (tag != expected_tag) {
        fail(ErrorCode::validation, "unexpected field tag " + std::to_string(tag) + ", wanted " +
                                        std::to_string(expected_tag));
    }
    return ByteReader(take(u32()));
}

}  // namespace worldsmith
