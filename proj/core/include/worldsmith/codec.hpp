#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "worldsmith/image.hpp"

namespace worldsmith {

using Bytes = std::vector<std::uint8_t>;

// PNG. Encoders are deterministic for a given libpng build: fixed filter and
// compression settings, no timestamps or text chunks.
Bytes encode_png(const Image& image);
/// 1-bit grayscale PNG.
Bytes encode_mask_png(const BinaryMask& mask);
/// Decodes to 8-bit samples. Gray/RGB/RGBA keep their channel count; palette
/// images expand to RGB(A); low bit-depth gray scales to 0..255.
Image decode_png(std::span<const std::uint8_t> png);
BinaryMask decode_mask_png(std::span<const std::uint8_t> png);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> data);

/// 64-bit FNV-1a. `seed` chains calls (pass a previous result to continue).
constexpr std::uint64_t fnv1a_offset = 0xcbf29ce484222325ULL;
std::uint64_t fnv1a64(std::span<const std::uint8_t> data, std::uint64_t seed = fnv1a_offset) noexcept;
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = fnv1a_offset) noexcept;

std::string hex_u64(std::uint64_t v);

/// Content hash of a raster: SHA-256 over (channels, width, height, samples).
/// Independent of PNG encoder settings, so ids are stable across libpng builds.
std::string content_id(const Image& image);

/// Little-endian, length-prefixed binary writer used by every canonical
/// encoding in the engine.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void str(std::string_view s);
    void blob(std::span<const std::uint8_t> b);
    /// Tag byte followed by a u32 length and the payload of a nested writer.
    void field(std::uint8_t tag, const ByteWriter& nested);

    const Bytes& bytes() const noexcept { return out_; }
    Bytes take() noexcept { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    std::string str();
    Bytes blob();
    /// Reads a tagged field, checking the tag, and returns a reader over it.
    ByteReader field(std::uint8_t expected_tag);

    bool done() const noexcept { return pos_ == in_.size(); }

private:
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

}  // namespace worldsmith
