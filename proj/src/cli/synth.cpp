#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "splatfix/cli.hpp"
#include "splatfix/error.hpp"
#include "splatfix/rng.hpp"
#include "splatfix/splat.hpp"

namespace splatfix::cli {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

GaussianSet random_scene(const SynthParams& p, Rng& rng) {
    GaussianSet set;
    for (int i = 0; i < p.gaussians; ++i) {
        Gaussian g;
        // Uniform in the unit ball.
        Vec3 x;
        do {
            x = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        } while (x.dot(x) > 1.0);
        g.position = x;
        g.rotation = Quaternion{rng.normal(), rng.normal(), rng.normal(), rng.normal()}.normalized();
        g.log_scale = {rng.uniform(std::log(0.04), std::log(0.12)),
                       rng.uniform(std::log(0.04), std::log(0.12)),
                       rng.uniform(std::log(0.04), std::log(0.12))};
        g.opacity_logit = logit(rng.uniform(0.5, 0.95));
        g.color = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        GaussianParams q = g.params();
        for (double& v : q) {
            v = static_cast<float>(v);
        }
        set.push_back(Gaussian::from_params(q));
    }
    return set;
}

io::CameraRecord orbit_camera(const std::string& id, const std::string& role, double azimuth,
                              double elevation, const SynthParams& p) {
    io::CameraRecord rec;
    rec.role = role;
    rec.image = id + ".png";
    CameraView& v = rec.view;
    v.id = id;
    v.role = role == "reference" ? ViewRole::reference : ViewRole::novel;
    const double f = 1.1 * p.size;
    v.intrinsics = {f, f, (p.size - 1) / 2.0, (p.size - 1) / 2.0, p.size, p.size};
    const double r = p.orbit_radius;
    const Vec3 eye{r * std::cos(elevation) * std::sin(azimuth), -r * std::sin(elevation),
                   r * std::cos(elevation) * std::cos(azimuth)};
    v.pose = look_at(eye, {0, 0, 0}, {0, -1, 0});
    return rec;
}

std::string numbered(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%02d", prefix, i);
    return buf;
}

}  // namespace

void cmd_synth(const fs::path& dir, const SynthParams& p) {
    if (p.gaussians < 1 || p.size < 8 || p.references < 1 || p.novel < 0 || p.heldout < 0) {
        throw UsageError("synth: need gaussians >= 1, size >= 8, references >= 1");
    }
    Rng rng(p.seed);
    const GaussianSet truth = random_scene(p, rng);

    std::vector<io::CameraRecord> cams;
    // A sparse arc of reference views, novel views all around the orbit and
    // held-out views in between.
    for (int i = 0; i < p.references; ++i) {
        const double az = (-30.0 + 60.0 * (p.references > 1 ? double(i) / (p.references - 1) : 0.5)) * kDeg;
        cams.push_back(orbit_camera(numbered("ref", i), "reference", az, 15.0 * kDeg, p));
    }
    for (int i = 0; i < p.novel; ++i) {
        const double az = 360.0 * kDeg * i / std::max(p.novel, 1);
        const double el = (i % 2 == 0 ? 30.0 : -10.0) * kDeg;
        cams.push_back(orbit_camera(numbered("novel", i), "novel", az, el, p));
    }
    for (int i = 0; i < p.heldout; ++i) {
        const double az = 360.0 * kDeg * (i + 0.5) / std::max(p.heldout, 1);
        const double el = rng.uniform(-5.0, 25.0) * kDeg;
        cams.push_back(orbit_camera(numbered("test", i), "test", az, el, p));
    }

    fs::create_directories(dir / kImagesDir);
    splat::RasterConfig raster;
    for (const auto& rec : cams) {
        io::write_png(dir / kImagesDir / *rec.image, splat::render(truth, rec.view, raster).image);
    }
    io::write_cameras(dir / kCamerasFile, cams);

    pcrender::GuidancePointCloud cloud;
    for (const Gaussian& g : truth.gaussians()) {
        cloud.points.push_back({g.position, g.color});
    }
    io::write_ply(dir / kPointCloudFile, cloud);
    io::write_checkpoint(dir / "ground_truth.splat", truth);

    std::ofstream cfg(dir / kConfigFile);
    cfg << "# Synthetic scene: " << p.gaussians << " Gaussians, " << p.size << "x" << p.size << ", "
        << p.references << " reference / " << p.novel << " novel / " << p.heldout << " test cameras\n"
        << "[train]\nit_s = 1000\nit_e = 4000\nalpha = 0.7\nbeta = 0.4\nseed = " << p.seed << "\n\n"
        << "[fixer]\nkind = oracle\n";
    if (!cfg) {
        throw DataError((dir / kConfigFile).string() + ": cannot write config");
    }
}

}  // namespace splatfix::cli
