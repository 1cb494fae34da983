#include <set>

#include "splatfix/cli.hpp"
#include "splatfix/error.hpp"

namespace splatfix::cli {

const std::set<std::string>& known_config_keys() {
    static const std::set<std::string> keys = [] {
        std::set<std::string> k = trainer::TrainConfig::keys();
        for (const char* extra :
             {"fixer.kind", "fixer.fidelity", "fixer.region", "fixer.command", "fixer.exchange_dir",
              "fixer.timeout", "fixer.coeff.xi_t", "fixer.coeff.xi_prev", "fixer.coeff.eta_t",
              "fixer.coeff.eta_prev", "fixer.coeff.sigma_t", "fixer.coeff.t_fixed",
              "pointcloud.radius", "init.opacity", "init.random_count", "init.random_extent"}) {
            k.insert(extra);
        }
        return k;
    }();
    return keys;
}

SceneBundle load_scene(const fs::path& dir) {
    SceneBundle b;
    b.dir = dir;
    const fs::path cameras = dir / kCamerasFile;
    if (!fs::exists(cameras)) {
        throw DataError(cameras.string() + ": file not found");
    }
    b.cameras = io::read_cameras(cameras);
    std::set<std::string> ids;
    for (const io::CameraRecord& rec : b.cameras) {
        if (!ids.insert(rec.view.id).second) {
            throw DataError(cameras.string() + ": duplicate camera id '" + rec.view.id + "'");
        }
        CameraView view = rec.view;
        std::optional<ColorImage> image;
        if (rec.image) {
            const fs::path p = dir / kImagesDir / *rec.image;
            if (!fs::exists(p)) {
                throw DataError(cameras.string() + ": camera '" + view.id + "': image '" + p.string() +
                                "' does not exist");
            }
            image = io::read_png(p);
            if (image->width() != view.intrinsics.width || image->height() != view.intrinsics.height) {
                throw DataError(p.string() + ": image size does not match camera '" + view.id + "'");
            }
        }
        if (rec.role == "reference") {
            if (!image) {
                throw DataError(cameras.string() + ": reference camera '" + view.id +
                                "': field 'image' is required");
            }
            view.target = std::move(image);
            b.reference.push_back(std::move(view));
        } else if (rec.role == "novel") {
            if (image) {
                b.novel_images[view.id] = std::move(*image);
            }
            b.novel.push_back(std::move(view));
        } else {
            view.target = std::move(image);
            b.heldout.push_back(std::move(view));
        }
    }
    const fs::path ply = dir / kPointCloudFile;
    if (fs::exists(ply)) {
        b.cloud = io::read_ply(ply);
    }
    const fs::path cfg = dir / kConfigFile;
    if (fs::exists(cfg)) {
        b.config = io::KeyValueConfig::load(cfg);
    }
    return b;
}

}  // namespace splatfix::cli
