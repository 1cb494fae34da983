#include <fstream>
#include <iostream>
#include <memory>
#include <stdexcept>

#include "splatfix/cli.hpp"
#include "splatfix/error.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/metrics.hpp"
#include "splatfix/perturb.hpp"
#include "splatfix/rng.hpp"
#include "splatfix/splat.hpp"

namespace splatfix::cli {
namespace {

using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw DataError(path.string() + ": cannot write");
    }
}

GaussianSet random_init(std::int64_t count, double extent, double opacity, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, 4);
    GaussianSet set;
    for (std::int64_t i = 0; i < count; ++i) {
        Gaussian g;
        g.position = {rng.uniform(-extent, extent), rng.uniform(-extent, extent), rng.uniform(-extent, extent)};
        const double s = std::log(0.05 * extent);
        g.log_scale = {s, s, s};
        g.opacity_logit = logit(opacity);
        g.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        GaussianParams p = g.params();
        for (double& v : p) {
            v = static_cast<float>(v);
        }
        set.push_back(Gaussian::from_params(p));
    }
    return set;
}

std::unique_ptr<fixer::Fixer> make_fixer(const io::KeyValueConfig& cfg, const SceneBundle& scene,
                                         const fs::path& out_dir) {
    const std::string kind = cfg.get_string("fixer.kind", "identity");
    if (kind == "identity") {
        return std::make_unique<fixer::IdentityFixer>();
    }
    if (kind == "oracle") {
        for (const CameraView& v : scene.novel) {
            if (!scene.novel_images.count(v.id)) {
                throw DataError((scene.dir / kCamerasFile).string() + ": novel camera '" + v.id +
                                "' has no image; the oracle fixer needs one for every novel view");
            }
        }
        fixer::OracleOptions opts;
        opts.fidelity = cfg.get_double("fixer.fidelity", 1.0);
        const std::string region = cfg.get_string("fixer.region", "everywhere");
        if (region == "everywhere") {
            opts.region = fixer::OracleRegion::everywhere;
        } else if (region == "uncovered") {
            opts.region = fixer::OracleRegion::uncovered_only;
        } else {
            throw DataError("fixer.region: expected 'everywhere' or 'uncovered', got '" + region + "'");
        }
        try {
            return std::make_unique<fixer::OracleFixer>(scene.novel_images, opts);
        } catch (const std::invalid_argument& e) {
            throw DataError(std::string("fixer.fidelity: ") + e.what());
        }
    }
    if (kind == "external") {
        fixer::ExternalFixerOptions opts;
        opts.command = cfg.get_string("fixer.command", "");
        if (opts.command.empty()) {
            throw DataError("fixer.command: required when fixer.kind = external");
        }
        opts.exchange_root = cfg.get_string("fixer.exchange_dir", (out_dir / "exchange").string());
        opts.timeout_seconds = cfg.get_double("fixer.timeout", opts.timeout_seconds);
        if (cfg.has("fixer.coeff.xi_t")) {
            fixer::DenoiseCoeffs c;
            c.xi_t = cfg.get_double("fixer.coeff.xi_t", c.xi_t);
            c.xi_prev = cfg.get_double("fixer.coeff.xi_prev", c.xi_prev);
            c.eta_t = cfg.get_double("fixer.coeff.eta_t", c.eta_t);
            c.eta_prev = cfg.get_double("fixer.coeff.eta_prev", c.eta_prev);
            c.sigma_t = cfg.get_double("fixer.coeff.sigma_t", c.sigma_t);
            c.t_fixed = cfg.get_int("fixer.coeff.t_fixed", c.t_fixed);
            try {
                c.validate();
            } catch (const std::invalid_argument& e) {
                throw DataError(std::string("fixer.coeff: ") + e.what());
            }
            opts.coefficients = c;
        }
        return std::make_unique<fixer::ExternalFixer>(opts);
    }
    throw DataError("fixer.kind: expected 'identity', 'oracle' or 'external', got '" + kind + "'");
}

void render_views(const GaussianSet& set, const std::vector<CameraView>& views,
                  const splat::RasterConfig& raster, const fs::path& dir) {
    fs::create_directories(dir);
    for (const CameraView& v : views) {
        io::write_png(dir / (v.id + ".png"), splat::render(set, v, raster).image);
    }
}

json sidecar(const trainer::TrainConfig& cfg) {
    json j = json::object();
    const io::KeyValueConfig kv = cfg.to_config();
    for (const auto& [k, v] : kv.values()) {
        j[k] = v;
    }
    return j;
}

}  // namespace

TrainOutcome cmd_train(const TrainOptions& options) {
    SceneBundle scene = load_scene(options.scene);
    io::KeyValueConfig cfg = scene.config;
    for (const std::string& o : options.overrides) {
        cfg.set_override(o);
    }
    if (options.seed) {
        cfg.set("train.seed", std::to_string(*options.seed));
    }
    cfg.require_known(known_config_keys());

    trainer::TrainConfig tc = trainer::TrainConfig::from_config(cfg);
    try {
        tc.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("invalid training settings: ") + e.what());
    }
    if (scene.reference.empty()) {
        throw DataError((scene.dir / kCamerasFile).string() + ": no reference cameras");
    }

    const fs::path out = options.out.empty() ? scene.dir / "output" : options.out;
    fs::create_directories(out);

    const double init_opacity = cfg.get_double("init.opacity", 0.1);
    GaussianSet initial;
    if (scene.cloud && !scene.cloud->empty()) {
        scene.cloud->point_radius_px = cfg.get_double("pointcloud.radius", scene.cloud->point_radius_px);
        scene.cloud->validate();
        trainer::InitConfig ic;
        ic.opacity = init_opacity;
        initial = trainer::initialize_from_points(*scene.cloud, ic);
    } else {
        initial = random_init(cfg.get_int("init.random_count", 1000), cfg.get_double("init.random_extent", 1.0),
                              init_opacity, tc.seed);
    }

    std::unique_ptr<fixer::Fixer> fx = make_fixer(cfg, scene, out);
    trainer::Trainer t(tc, std::move(initial), scene.reference, scene.novel);
    if (scene.cloud) {
        t.set_point_cloud(*scene.cloud);
    }
    t.set_heldout(scene.heldout);

    const auto on_phase = [&](const std::string& phase) {
        if (options.verbose) {
            std::cerr << "splatfix: " << phase << " done at iteration " << t.iteration() << ", "
                      << t.gaussians().size() << " Gaussians\n";
        }
        if (phase == "warmup") {
            io::write_checkpoint(out / "checkpoint_warmup.splat", t.gaussians());
        }
        render_views(t.gaussians(), scene.heldout, tc.raster, out / "renders" / phase);
    };
    TrainOutcome outcome;
    outcome.report = t.run(*fx, on_phase);
    outcome.config = tc;
    outcome.out_dir = out;

    io::write_checkpoint(out / "checkpoint.splat", t.gaussians());
    write_text(out / "checkpoint.splat.json", sidecar(tc).dump(2) + "\n");
    write_text(out / "config.resolved.toml", cfg.serialize());
    {
        std::ofstream csv(out / "loss.csv", std::ios::binary);
        trainer::write_loss_csv(csv, outcome.report.steps);
    }
    if (t.schedule()) {
        std::ofstream csv(out / "schedule.csv", std::ios::binary);
        scheduler::write_trace_csv(csv, t.schedule()->trace());
        outcome.report.schedule_trace = "schedule.csv";
    }
    json report = outcome.report.to_json();
    report["fixer"] = std::string(fx->name());
    report["gaussians"] = t.gaussians().size();
    write_text(out / "report.json", report.dump(2) + "\n");
    return outcome;
}

splat::RasterConfig raster_for_checkpoint(const fs::path& checkpoint) {
    fs::path side = checkpoint;
    side += ".json";
    if (!fs::exists(side)) {
        return {};
    }
    std::ifstream in(side);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw DataError(side.string() + ": " + e.what());
    }
    io::KeyValueConfig cfg;
    for (const auto& [k, v] : j.items()) {
        if (k.rfind("raster.", 0) == 0 && v.is_string()) {
            cfg.set(k, v.get<std::string>());
        }
    }
    return trainer::TrainConfig::from_config(cfg).raster;
}

void cmd_render(const fs::path& checkpoint, const fs::path& cameras, const fs::path& out_dir) {
    const GaussianSet set = io::read_checkpoint(checkpoint);
    const splat::RasterConfig raster = raster_for_checkpoint(checkpoint);
    std::vector<CameraView> views;
    for (const io::CameraRecord& rec : io::read_cameras(cameras)) {
        views.push_back(rec.view);
    }
    render_views(set, views, raster, out_dir);
}

nlohmann::json cmd_eval(const fs::path& checkpoint, const fs::path& scene_dir) {
    const GaussianSet set = io::read_checkpoint(checkpoint);
    const splat::RasterConfig raster = raster_for_checkpoint(checkpoint);
    const SceneBundle scene = load_scene(scene_dir);
    std::vector<trainer::ViewMetrics> m;
    for (const CameraView& v : scene.heldout) {
        if (!v.target) {
            continue;
        }
        const ColorImage img = quantized(splat::render(set, v, raster).image);
        m.push_back({v.id, metrics::psnr(img, *v.target), metrics::ssim(img, *v.target)});
    }
    if (m.empty()) {
        throw DataError((scene_dir / kCamerasFile).string() + ": no test cameras with images to evaluate");
    }
    json views = json::array();
    for (const auto& v : m) {
        views.push_back({{"view_id", v.view_id}, {"psnr", v.psnr}, {"ssim", v.ssim}});
    }
    return {{"checkpoint", checkpoint.string()},
            {"views", views},
            {"mean_psnr", trainer::TrainReport::mean_psnr(m)},
            {"mean_ssim", trainer::TrainReport::mean_ssim(m)}};
}

void cmd_perturb(const fs::path& checkpoint, const fs::path& cameras, const fs::path& out_dir,
                 const perturb::PerturbConfig& cfg, bool allow_out_of_range) {
    try {
        cfg.validate(allow_out_of_range);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const GaussianSet clean = io::read_checkpoint(checkpoint);
    const GaussianSet noisy = perturb::perturb_set(clean, cfg);
    const splat::RasterConfig raster = raster_for_checkpoint(checkpoint);
    fs::create_directories(out_dir);
    json entries = json::array();
    for (const io::CameraRecord& rec : io::read_cameras(cameras)) {
        const std::string a = rec.view.id + "_clean.png";
        const std::string b = rec.view.id + "_perturbed.png";
        io::write_png(out_dir / a, splat::render(clean, rec.view, raster).image);
        io::write_png(out_dir / b, splat::render(noisy, rec.view, raster).image);
        entries.push_back({{"view_id", rec.view.id}, {"clean", a}, {"perturbed", b}});
    }
    const json manifest = {{"checkpoint", checkpoint.string()},
                           {"sigma_x", cfg.sigma_x},
                           {"delta_phi", cfg.delta_phi},
                           {"seed", cfg.seed},
                           {"entries", entries}};
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace splatfix::cli
