#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "splatfix/camera.hpp"
#include "splatfix/io.hpp"
#include "splatfix/pcrender.hpp"
#include "splatfix/perturb.hpp"
#include "splatfix/trainer.hpp"

// Scene bundles and the commands behind the splatfix tool.
//
// A scene directory holds cameras.json, images/, an optional pointcloud.ply
// and an optional config.toml. Cameras with role "test" are held out for
// evaluation; images attached to "novel" cameras are only visible to the
// oracle fixer.
namespace splatfix::cli {

namespace fs = std::filesystem;

inline constexpr const char* kCamerasFile = "cameras.json";
inline constexpr const char* kImagesDir = "images";
inline constexpr const char* kPointCloudFile = "pointcloud.ply";
inline constexpr const char* kConfigFile = "config.toml";

struct SceneBundle {
    fs::path dir;
    std::vector<io::CameraRecord> cameras;
    std::vector<CameraView> reference;
    std::vector<CameraView> novel;    // no targets
    std::vector<CameraView> heldout;  // targets loaded
    std::map<std::string, ColorImage> novel_images;
    std::optional<pcrender::GuidancePointCloud> cloud;
    io::KeyValueConfig config;
};

// Throws DataError naming the offending file and field.
SceneBundle load_scene(const fs::path& dir);

// Every key the train command accepts in config.toml or via --set.
const std::set<std::string>& known_config_keys();

struct SynthParams {
    int gaussians = 500;
    int size = 64;
    int references = 4;
    int novel = 60;
    int heldout = 20;
    std::uint64_t seed = 0;
    double orbit_radius = 3.0;
};

// Writes a complete bundle rendered from a random GaussianSet, together with
// that set as ground_truth.splat.
void cmd_synth(const fs::path& dir, const SynthParams& params);

struct TrainOptions {
    fs::path scene;
    fs::path out;  // defaults to <scene>/output
    std::vector<std::string> overrides;  // key=value
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

struct TrainOutcome {
    trainer::TrainReport report;
    trainer::TrainConfig config;
    fs::path out_dir;
};

// Writes checkpoint.splat (+ checkpoint.splat.json), report.json, loss.csv,
// schedule.csv and renders/ into the output directory.
TrainOutcome cmd_train(const TrainOptions& options);

// One PNG per camera, named <id>.png.
void cmd_render(const fs::path& checkpoint, const fs::path& cameras, const fs::path& out_dir);

// Per-view and mean PSNR/SSIM of 8-bit quantized renders on the scene's
// held-out cameras. Throws
// DataError when there are none.
nlohmann::json cmd_eval(const fs::path& checkpoint, const fs::path& scene);

// <id>_clean.png / <id>_perturbed.png per camera plus manifest.json.
void cmd_perturb(const fs::path& checkpoint, const fs::path& cameras, const fs::path& out_dir,
                 const perturb::PerturbConfig& cfg, bool allow_out_of_range = false);

// Raster settings stored next to a checkpoint, or defaults.
splat::RasterConfig raster_for_checkpoint(const fs::path& checkpoint);

}  // namespace splatfix::cli
