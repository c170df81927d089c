#pragma once

#include <deque>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "worldsmith/canonical.hpp"
#include "worldsmith/codec.hpp"
#include "worldsmith/inputs.hpp"

namespace worldsmith {

/// Content-addressed image store. Keys are content_id(image); with a
/// directory the images persist as `<dir>/<id>.png` and memory holds a bounded
/// cache, without one everything stays in memory.
class ImageStore {
public:
    ImageStore() = default;
    explicit ImageStore(std::filesystem::path dir, std::size_t cache_entries = 256);

    ImageStore(const ImageStore&) = delete;
    ImageStore& operator=(const ImageStore&) = delete;

    ImageRef put(const Image& image);
    bool contains(const std::string& id) const;
    std::optional<Image> get(const std::string& id) const;
    std::optional<Bytes> png(const std::string& id) const;
    std::vector<std::string> ids() const;

    /// Resolves sketch content ids against this store.
    SketchResolver sketch_resolver() const;

private:
    static bool valid_id(const std::string& id);
    std::filesystem::path path_for(const std::string& id) const;
    void cache_locked(const std::string& id, const Image& image) const;

    std::optional<std::filesystem::path> dir_;
    std::size_t cache_entries_ = 0;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, Image> cache_;
    mutable std::deque<std::string> order_;
};

}  // namespace worldsmith
