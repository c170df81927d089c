#include "worldsmith/canonical.hpp"

#include <cmath>

#include "worldsmith/error.hpp"

namespace worldsmith {

namespace {

constexpr std::uint8_t kFormat = 1;

enum Tag : std::uint8_t {
    tag_scene = 1,
    tag_regions = 2,
    tag_sketch = 3,
    tag_base = 4,
    tag_seed = 5,
    tag_strength = 6,
};

}  // namespace

CanonicalSnapshot canonicalize_inputs(const GenerationInputs& inputs) {
    ByteWriter w;
    for (char c : std::string_view("WSIN")) w.u8(static_cast<std::uint8_t>(c));
    w.u8(kFormat);

    ByteWriter scene;
    scene.str(inputs.scene_prompt);
    w.field(tag_scene, scene);

    ByteWriter regions;
    regions.u32(static_cast<std::uint32_t>(inputs.regions.size()));
    for (const auto& r : inputs.regions) {
        regions.str(r.region_id);
        regions.u8(r.color.r);
        regions.u8(r.color.g);
        regions.u8(r.color.b);
        regions.str(r.description);
        regions.u32(static_cast<std::uint32_t>(r.geometry.size()));
        for (const auto& a : r.geometry) {
            regions.u8(static_cast<std::uint8_t>(a.brush));
            regions.u32(static_cast<std::uint32_t>(a.stroke_width));
            regions.u32(static_cast<std::uint32_t>(a.points.size()));
            for (const auto& p : a.points) {
                regions.i32(p.x);
                regions.i32(p.y);
            }
        }
    }
    w.field(tag_regions, regions);

    ByteWriter sketch;
    sketch.u8(inputs.sketch ? 1 : 0);
    if (inputs.sketch) {
        sketch.str(inputs.sketch->content_id());
        sketch.u32(static_cast<std::uint32_t>(inputs.sketch->image.width()));
        sketch.u32(static_cast<std::uint32_t>(inputs.sketch->image.height()));
    }
    w.field(tag_sketch, sketch);

    ByteWriter base;
    base.u8(inputs.base_image ? 1 : 0);
    if (inputs.base_image) {
        base.str(inputs.base_image->image_id);
        base.u32(static_cast<std::uint32_t>(inputs.base_image->width));
        base.u32(static_cast<std::uint32_t>(inputs.base_image->height));
    }
    w.field(tag_base, base);

    ByteWriter seed;
    seed.u8(inputs.seed ? 1 : 0);
    if (inputs.seed) seed.u64(*inputs.seed);
    w.field(tag_seed, seed);

    ByteWriter strength;
    strength.i64(std::llround(inputs.img2img_strength * 1e6));
    w.field(tag_strength, strength);

    return snapshot_from_bytes(w.take());
}

CanonicalSnapshot snapshot_from_bytes(Bytes bytes) {
    CanonicalSnapshot s{std::move(bytes), {}};
    s.digest = sha256_hex(s.bytes);
    return s;
}

GenerationInputs decode_snapshot(const CanonicalSnapshot& snapshot, const SketchResolver& sketches) {
    ByteReader r(snapshot.bytes);
    std::string magic;
    for (int i = 0; i < 4; ++i) magic.push_back(static_cast<char>(r.u8()));
    if (magic != "WSIN") fail(ErrorCode::validation, "not an input snapshot");
    if (r.u8() != kFormat) fail(ErrorCode::validation, "unsupported input snapshot format");

    GenerationInputs in;
    {
        auto f = r.field(tag_scene);
        in.scene_prompt = f.str();
    }
    {
        auto f = r.field(tag_regions);
        const auto n = f.u32();
        for (std::uint32_t i = 0; i < n; ++i) {
            RegionSpec region;
            region.region_id = f.str();
            region.color.r = f.u8();
            region.color.g = f.u8();
            region.color.b = f.u8();
            region.description = f.str();
            const auto actions = f.u32();
            for (std::uint32_t k = 0; k < actions; ++k) {
                BrushAction a;
                const auto brush = f.u8();
                if (brush > 2) fail(ErrorCode::validation, "unknown brush in snapshot");
                a.brush = static_cast<BrushKind>(brush);
                a.stroke_width = static_cast<int>(f.u32());
                const auto pts = f.u32();
                for (std::uint32_t p = 0; p < pts; ++p) {
                    const auto x = f.i32();
                    const auto y = f.i32();
                    a.points.push_back({x, y});
                }
                region.geometry.push_back(std::move(a));
            }
            in.regions.push_back(std::move(region));
        }
    }
    {
        auto f = r.field(tag_sketch);
        if (f.u8()) {
            const auto id = f.str();
            f.u32();
            f.u32();
            std::optional<SketchLayer> layer;
            if (sketches) layer = sketches(id);
            if (!layer) fail(ErrorCode::not_found, "sketch " + id + " is not available");
            in.sketch = std::move(*layer);
        }
    }
    {
        auto f = r.field(tag_base);
        if (f.u8()) {
            ImageRef ref;
            ref.image_id = f.str();
            ref.width = static_cast<int>(f.u32());
            ref.height = static_cast<int>(f.u32());
            in.base_image = std::move(ref);
        }
    }
    {
        auto f = r.field(tag_seed);
        if (f.u8()) in.seed = f.u64();
    }
    {
        auto f = r.field(tag_strength);
        in.img2img_strength = static_cast<double>(f.i64()) / 1e6;
    }
    if (!r.done()) fail(ErrorCode::validation, "trailing bytes in input snapshot");
    return in;
}

const CanonicalSnapshot& empty_snapshot() {
    static const CanonicalSnapshot s = canonicalize_inputs(GenerationInputs{});
    return s;
}

}  // namespace worldsmith
