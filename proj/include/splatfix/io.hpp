#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "splatfix/camera.hpp"
#include "splatfix/gaussian.hpp"
#include "splatfix/image.hpp"
#include "splatfix/pcrender.hpp"

// File formats: PNG images, PLY point clouds, binary checkpoints, cameras.json
// and flat key-value config files. Every reader throws DataError naming the
// file (and field, where there is one).
namespace splatfix::io {

// 8-bit PNG. Grayscale and alpha inputs are converted to RGB.
ColorImage read_png(const std::filesystem::path& path);
// 8-bit RGB, values quantized with quantize_channel.
void write_png(const std::filesystem::path& path, const ColorImage& image);

// ASCII or binary little-endian PLY with vertex properties x, y, z and 8-bit
// red, green, blue; other properties are skipped.
pcrender::GuidancePointCloud read_ply(const std::filesystem::path& path);
// Binary little-endian, float positions and uchar colors.
void write_ply(const std::filesystem::path& path, const pcrender::GuidancePointCloud& cloud);

// Checkpoint layout: 8 magic bytes "SPLTGAUS", uint32 version, uint64 count,
// then 14 little-endian float32 per Gaussian in the GaussianParams order.
inline constexpr char kCheckpointMagic[8] = {'S', 'P', 'L', 'T', 'G', 'A', 'U', 'S'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::filesystem::path& path, const GaussianSet& set);
GaussianSet read_checkpoint(const std::filesystem::path& path);

// One entry of cameras.json. `role` is "reference", "novel" or "test"
// (held out for evaluation; such views carry ViewRole::novel).
struct CameraRecord {
    CameraView view;
    std::string role;
    std::optional<std::string> image;  // relative to the images directory
};

// Parses the camera list. Quaternions more than 1e-4 from unit norm are
// rejected; those more than 1e-6 away are renormalized with a warning on
// stderr. Images are not loaded.
std::vector<CameraRecord> read_cameras(const std::filesystem::path& path);
void write_cameras(const std::filesystem::path& path, const std::vector<CameraRecord>& cameras);

// Flat "key = value" settings. Lines starting with '#' are comments and a
// "[section]" header prefixes the following keys with "section.". Values may
// be quoted.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& source = "<config>");
    static KeyValueConfig load(const std::filesystem::path& path);

    // "key=value"; throws UsageError when malformed.
    void set_override(const std::string& assignment);
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    // Typed lookups; throw DataError when the value does not parse.
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    // Throws DataError listing keys outside `known`.
    void require_known(const std::set<std::string>& known) const;

    std::string serialize() const;

private:
    std::string source_ = "<config>";
    std::map<std::string, std::string> values_;
};

}  // namespace splatfix::io
