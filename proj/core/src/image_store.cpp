#include "worldsmith/image_store.hpp"

#include <algorithm>
#include <fstream>

#include "worldsmith/error.hpp"

namespace fs = std::filesystem;

namespace worldsmith {

ImageStore::ImageStore(fs::path dir, std::size_t cache_entries)
    : dir_(std::move(dir)), cache_entries_(cache_entries) {
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) fail(ErrorCode::storage, "cannot create image directory " + dir_->string() + ": " + ec.message());
}

bool ImageStore::valid_id(const std::string& id) {
    return id.size() == 64 && std::all_of(id.begin(), id.end(), [](char c) {
               return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
           });
}

fs::path ImageStore::path_for(const std::string& id) const { return *dir_ / (id + ".png"); }

void ImageStore::cache_locked(const std::string& id, const Image& image) const {
    if (cache_.count(id)) return;
    cache_.emplace(id, image);
    order_.push_back(id);
    if (dir_ && cache_entries_ > 0) {
        while (order_.size() > cache_entries_) {
            cache_.erase(order_.front());
            order_.pop_front();
        }
    }
}

ImageRef ImageStore::put(const Image& image) {
    ImageRef ref{content_id(image), image.width(), image.height()};
    std::lock_guard lock(mu_);
    if (dir_) {
        const auto path = path_for(ref.image_id);
        if (!fs::exists(path)) {
            const auto png = encode_png(image);
            const auto tmp = path.string() + ".tmp";
            {
                std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
                out.write(reinterpret_cast<const char*>(png.data()), static_cast<std::streamsize>(png.size()));
                if (!out) fail(ErrorCode::storage, "cannot write " + tmp);
            }
            std::error_code ec;
            fs::rename(tmp, path, ec);
            if (ec) fail(ErrorCode::storage, "cannot publish " + path.string() + ": " + ec.message());
        }
    }
    cache_locked(ref.image_id, image);
    return ref;
}

bool ImageStore::contains(const std::string& id) const {
    std::lock_guard lock(mu_);
    if (cache_.count(id)) return true;
    return dir_ && valid_id(id) && fs::exists(path_for(id));
}

std::optional<Image> ImageStore::get(const std::string& id) const {
    std::lock_guard lock(mu_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    if (!dir_ || !valid_id(id)) return std::nullopt;
    std::ifstream in(path_for(id), std::ios::binary);
    if (!in) return std::nullopt;
    Bytes png((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Image img = decode_png(png);
    cache_locked(id, img);
    return img;
}

std::optional<Bytes> ImageStore::png(const std::string& id) const {
    {
        std::lock_guard lock(mu_);
        if (dir_ && valid_id(id)) {
            std::ifstream in(path_for(id), std::ios::binary);
            if (in) return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        }
    }
    auto img = get(id);
    if (!img) return std::nullopt;
    return encode_png(*img);
}

std::vector<std::string> ImageStore::ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : cache_) out.push_back(id);
    if (dir_) {
        for (const auto& entry : fs::directory_iterator(*dir_)) {
            if (entry.path().extension() == ".png") out.push_back(entry.path().stem().string());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

SketchResolver ImageStore::sketch_resolver() const {
    return [this](const std::string& id) -> std::optional<SketchLayer> {
        auto img = get(id);
        if (!img || img->channels() != 4) return std::nullopt;
        return SketchLayer::from_rgba(*img);
    };
}

}  // namespace worldsmith
