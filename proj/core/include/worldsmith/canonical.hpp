#pragma once

#include <functional>
#include <optional>
#include <string>

#include "worldsmith/codec.hpp"
#include "worldsmith/inputs.hpp"

namespace worldsmith {

/// Deterministic byte serialization of GenerationInputs plus its SHA-256.
///
/// Layout: magic "WSIN", format byte, then tagged length-prefixed fields in a
/// fixed order (scene, regions, sketch, base image, seed, strength). Integers
/// are little-endian; strength is stored as integer millionths; the sketch
/// raster is represented by its content id only.
struct CanonicalSnapshot {
    Bytes bytes;
    std::string digest;

    friend bool operator==(const CanonicalSnapshot&, const CanonicalSnapshot&) = default;
};

CanonicalSnapshot canonicalize_inputs(const GenerationInputs& inputs);

/// Wraps previously produced bytes, recomputing the digest.
CanonicalSnapshot snapshot_from_bytes(Bytes bytes);

/// Looks up a sketch layer by content id (usually backed by an ImageStore).
using SketchResolver = std::function<std::optional<SketchLayer>(const std::string& content_id)>;

/// Rebuilds inputs from a snapshot. A snapshot carrying a sketch needs a
/// resolver that knows the sketch; otherwise this throws not_found.
GenerationInputs decode_snapshot(const CanonicalSnapshot& snapshot, const SketchResolver& sketches = {});

/// Snapshot of default-constructed inputs.
const CanonicalSnapshot& empty_snapshot();

}  // namespace worldsmith
