#include "splatfix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "splatfix/error.hpp"
#include "splatfix/metrics.hpp"

namespace splatfix::trainer {
namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Rgb parse_rgb(const std::string& s, const std::string& key) {
    Rgb c;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf%c", &c.r, &c.g, &c.b, &extra) != 3) {
        throw DataError("'" + key + "' must be three comma-separated numbers (got '" + s + "')");
    }
    return c;
}

TrainConfig resolve(TrainConfig cfg, std::span<const CameraView> refs, std::span<const CameraView> novel) {
    if (cfg.lr.position_max_steps <= 0) {
        cfg.lr.position_max_steps = cfg.it_e;
    }
    if (!(cfg.lr.spatial_scale > 0.0)) {
        std::vector<CameraView> all(refs.begin(), refs.end());
        all.insert(all.end(), novel.begin(), novel.end());
        const double extent = camera_extent(all);
        cfg.lr.spatial_scale = extent > 0.0 ? extent : 1.0;
    }
    return cfg;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(it_s >= 0 && it_s <= it_e)) {
        throw std::invalid_argument("train: need 0 <= it_s <= it_e");
    }
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
        throw std::invalid_argument("train: alpha and beta must lie in [0, 1]");
    }
    if (stop_at < 0) {
        throw std::invalid_argument("train: stop_at must be non-negative");
    }
    if (densify.interval < 1) {
        throw std::invalid_argument("densify: interval must be at least 1");
    }
    if (!(loss.l2 >= 0.0) || !(loss.ssim >= 0.0)) {
        throw std::invalid_argument("loss: weights must be non-negative");
    }
    raster.validate();
}

const std::set<std::string>& TrainConfig::keys() {
    static const std::set<std::string> k = {
        "train.it_s", "train.it_e", "train.alpha", "train.beta", "train.seed", "train.stop_at",
        "lr.position_init", "lr.position_final", "lr.position_max_steps", "lr.spatial_scale",
        "lr.rotation", "lr.scale", "lr.opacity", "lr.color", "adam.beta1", "adam.beta2", "adam.eps",
        "densify.interval", "densify.from", "densify.until", "densify.grad_threshold",
        "densify.prune_opacity", "densify.max_gaussians", "loss.l2_weight", "loss.ssim_weight",
        "raster.tile_size", "raster.alpha_threshold", "raster.alpha_cap", "raster.transmittance_floor",
        "raster.covariance_blur", "raster.near_plane", "raster.background",
        "raster.normalize_by_footprint", "schedule.update_on_all_draws", "schedule.max_empty_refills"};
    return k;
}

TrainConfig TrainConfig::from_config(const io::KeyValueConfig& c) {
    TrainConfig t;
    t.it_s = c.get_int("train.it_s", t.it_s);
    t.it_e = c.get_int("train.it_e", t.it_e);
    t.alpha = c.get_double("train.alpha", t.alpha);
    t.beta = c.get_double("train.beta", t.beta);
    t.seed = static_cast<std::uint64_t>(c.get_int("train.seed", static_cast<std::int64_t>(t.seed)));
    t.stop_at = c.get_int("train.stop_at", t.stop_at);
    t.lr.position_init = c.get_double("lr.position_init", t.lr.position_init);
    t.lr.position_final = c.get_double("lr.position_final", t.lr.position_final);
    t.lr.position_max_steps = c.get_int("lr.position_max_steps", t.lr.position_max_steps);
    t.lr.spatial_scale = c.get_double("lr.spatial_scale", t.lr.spatial_scale);
    t.lr.rotation = c.get_double("lr.rotation", t.lr.rotation);
    t.lr.scale = c.get_double("lr.scale", t.lr.scale);
    t.lr.opacity = c.get_double("lr.opacity", t.lr.opacity);
    t.lr.color = c.get_double("lr.color", t.lr.color);
    t.adam.beta1 = c.get_double("adam.beta1", t.adam.beta1);
    t.adam.beta2 = c.get_double("adam.beta2", t.adam.beta2);
    t.adam.eps = c.get_double("adam.eps", t.adam.eps);
    t.densify.interval = c.get_int("densify.interval", t.densify.interval);
    t.densify.from = c.get_int("densify.from", t.densify.from);
    t.densify.until = c.get_int("densify.until", t.densify.until);
    t.densify.grad_threshold = c.get_double("densify.grad_threshold", t.densify.grad_threshold);
    t.densify.prune_opacity = c.get_double("densify.prune_opacity", t.densify.prune_opacity);
    t.densify.max_gaussians = static_cast<std::size_t>(
        c.get_int("densify.max_gaussians", static_cast<std::int64_t>(t.densify.max_gaussians)));
    t.loss.l2 = c.get_double("loss.l2_weight", t.loss.l2);
    t.loss.ssim = c.get_double("loss.ssim_weight", t.loss.ssim);
    t.raster.tile_size = static_cast<int>(c.get_int("raster.tile_size", t.raster.tile_size));
    t.raster.alpha_threshold = c.get_double("raster.alpha_threshold", t.raster.alpha_threshold);
    t.raster.alpha_cap = c.get_double("raster.alpha_cap", t.raster.alpha_cap);
    t.raster.transmittance_floor = c.get_double("raster.transmittance_floor", t.raster.transmittance_floor);
    t.raster.covariance_blur = c.get_double("raster.covariance_blur", t.raster.covariance_blur);
    t.raster.near_plane = c.get_double("raster.near_plane", t.raster.near_plane);
    if (c.has("raster.background")) {
        t.raster.background = parse_rgb(c.get_string("raster.background", ""), "raster.background");
    }
    t.raster.normalize_by_footprint =
        c.get_bool("raster.normalize_by_footprint", t.raster.normalize_by_footprint);
    t.schedule.update_on_all_draws =
        c.get_bool("schedule.update_on_all_draws", t.schedule.update_on_all_draws);
    t.schedule.max_empty_refills =
        static_cast<int>(c.get_int("schedule.max_empty_refills", t.schedule.max_empty_refills));
    return t;
}

io::KeyValueConfig TrainConfig::to_config() const {
    io::KeyValueConfig c;
    c.set("train.it_s", std::to_string(it_s));
    c.set("train.it_e", std::to_string(it_e));
    c.set("train.alpha", fmt(alpha));
    c.set("train.beta", fmt(beta));
    c.set("train.seed", std::to_string(seed));
    c.set("train.stop_at", std::to_string(stop_at));
    c.set("lr.position_init", fmt(lr.position_init));
    c.set("lr.position_final", fmt(lr.position_final));
    c.set("lr.position_max_steps", std::to_string(lr.position_max_steps));
    c.set("lr.spatial_scale", fmt(lr.spatial_scale));
    c.set("lr.rotation", fmt(lr.rotation));
    c.set("lr.scale", fmt(lr.scale));
    c.set("lr.opacity", fmt(lr.opacity));
    c.set("lr.color", fmt(lr.color));
    c.set("adam.beta1", fmt(adam.beta1));
    c.set("adam.beta2", fmt(adam.beta2));
    c.set("adam.eps", fmt(adam.eps));
    c.set("densify.interval", std::to_string(densify.interval));
    c.set("densify.from", std::to_string(densify.from));
    c.set("densify.until", std::to_string(densify.until));
    c.set("densify.grad_threshold", fmt(densify.grad_threshold));
    c.set("densify.prune_opacity", fmt(densify.prune_opacity));
    c.set("densify.max_gaussians", std::to_string(densify.max_gaussians));
    c.set("loss.l2_weight", fmt(loss.l2));
    c.set("loss.ssim_weight", fmt(loss.ssim));
    c.set("raster.tile_size", std::to_string(raster.tile_size));
    c.set("raster.alpha_threshold", fmt(raster.alpha_threshold));
    c.set("raster.alpha_cap", fmt(raster.alpha_cap));
    c.set("raster.transmittance_floor", fmt(raster.transmittance_floor));
    c.set("raster.covariance_blur", fmt(raster.covariance_blur));
    c.set("raster.near_plane", fmt(raster.near_plane));
    c.set("raster.background",
          fmt(raster.background.r) + "," + fmt(raster.background.g) + "," + fmt(raster.background.b));
    c.set("raster.normalize_by_footprint", raster.normalize_by_footprint ? "true" : "false");
    c.set("schedule.update_on_all_draws", schedule.update_on_all_draws ? "true" : "false");
    c.set("schedule.max_empty_refills", std::to_string(schedule.max_empty_refills));
    return c;
}

GaussianSet initialize_from_points(const pcrender::GuidancePointCloud& cloud, const InitConfig& cfg) {
    const auto& pts = cloud.points;
    const std::size_t n = pts.size();
    GaussianSet set;
    std::vector<double> best;
    for (std::size_t i = 0; i < n; ++i) {
        // Brute-force k nearest neighbours; point clouds here are small.
        best.assign(static_cast<std::size_t>(std::max(cfg.neighbours, 1)),
                    std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const Vec3 d = pts[j].position - pts[i].position;
            const double d2 = d.dot(d);
            if (d2 < best.back()) {
                best.back() = d2;
                std::sort(best.begin(), best.end());
            }
        }
        double sum = 0.0;
        int used = 0;
        for (double d2 : best) {
            if (std::isfinite(d2)) {
                sum += d2;
                ++used;
            }
        }
        const double s = std::max(cfg.min_scale, used > 0 ? std::sqrt(sum / used) : 1.0);
        Gaussian g;
        g.position = pts[i].position;
        g.log_scale = {std::log(s), std::log(s), std::log(s)};
        g.opacity_logit = logit(cfg.opacity);
        g.color = pts[i].color;
        GaussianParams p = g.params();
        for (double& v : p) {
            v = static_cast<float>(v);
        }
        set.push_back(Gaussian::from_params(p));
    }
    return set;
}

double camera_extent(std::span<const CameraView> views) {
    if (views.empty()) {
        return 0.0;
    }
    Vec3 mean;
    for (const auto& v : views) {
        mean = mean + v.pose.camera_center();
    }
    mean = mean * (1.0 / static_cast<double>(views.size()));
    double r = 0.0;
    for (const auto& v : views) {
        r = std::max(r, (v.pose.camera_center() - mean).norm());
    }
    return 1.1 * r;
}

double TrainReport::mean_psnr(const std::vector<ViewMetrics>& m) {
    if (m.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (const auto& v : m) {
        s += v.psnr;
    }
    return s / static_cast<double>(m.size());
}

double TrainReport::mean_ssim(const std::vector<ViewMetrics>& m) {
    if (m.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (const auto& v : m) {
        s += v.ssim;
    }
    return s / static_cast<double>(m.size());
}

nlohmann::json TrainReport::to_json() const {
    using nlohmann::json;
    auto metrics = [](const std::vector<ViewMetrics>& m) {
        json views = json::array();
        for (const auto& v : m) {
            views.push_back({{"view_id", v.view_id}, {"psnr", v.psnr}, {"ssim", v.ssim}});
        }
        return json{{"views", views}, {"mean_psnr", mean_psnr(m)}, {"mean_ssim", mean_ssim(m)}};
    };
    json fixes_json = json::array();
    for (const auto& f : fixes) {
        fixes_json.push_back({{"view_id", f.view_id},
                              {"reference_id", f.reference_id},
                              {"mask_coverage", f.mask_coverage},
                              {"fell_back", f.fell_back}});
    }
    json j;
    j["iterations"] = steps.empty() ? 0 : steps.back().iteration;
    j["final_loss"] = steps.empty() ? 0.0 : steps.back().loss;
    j["final_gaussians"] = steps.empty() ? 0 : steps.back().gaussians;
    j["seconds"] = {{"warmup", warmup_seconds}, {"fixing", fixing_seconds}, {"mixed", mixed_seconds}};
    j["heldout_at_it_s"] = metrics(heldout_at_it_s);
    j["heldout_final"] = metrics(heldout_final);
    j["fixes"] = fixes_json;
    j["schedule"] = {{"kept_reference", kept_reference},
                     {"kept_total", kept_total},
                     {"kept_reference_fraction",
                      kept_total ? static_cast<double>(kept_reference) / static_cast<double>(kept_total) : 0.0},
                     {"trace", schedule_trace}};
    return j;
}

void write_loss_csv(std::ostream& out, const std::vector<StepRecord>& steps) {
    out << "iteration,phase,view_id,loss,l2,ssim,gaussians\n";
    for (const auto& s : steps) {
        out << s.iteration << ',' << s.phase << ',' << s.view_id << ',' << fmt(s.loss) << ','
            << fmt(s.l2) << ',' << fmt(s.ssim) << ',' << s.gaussians << '\n';
    }
}

Trainer::Trainer(TrainConfig cfg, GaussianSet initial, std::vector<CameraView> references,
                 std::vector<CameraView> novel)
    : cfg_(resolve(std::move(cfg), references, novel)),
      set_(std::move(initial)),
      refs_(std::move(references)),
      novel_(std::move(novel)),
      adam_(cfg_.lr, cfg_.adam),
      warmup_rng_(Rng::derive(cfg_.seed, 1)),
      densify_rng_(Rng::derive(cfg_.seed, 3)) {
    cfg_.validate();
    for (const auto& v : refs_) {
        if (v.role != ViewRole::reference || !v.target) {
            throw std::invalid_argument("trainer: reference view '" + v.id + "' needs a target image");
        }
    }
    for (const auto& v : novel_) {
        if (v.role != ViewRole::novel) {
            throw std::invalid_argument("trainer: view '" + v.id + "' is not a novel view");
        }
    }
    set_.zero_grad();
    grad_accum_.assign(set_.size(), 0.0);
    grad_count_.assign(set_.size(), 0);
}

const CameraView& Trainer::find_view(const std::string& id) const {
    for (const auto* list : {&refs_, &novel_}) {
        for (const auto& v : *list) {
            if (v.id == id) {
                return v;
            }
        }
    }
    throw std::invalid_argument("trainer: unknown view '" + id + "'");
}

StepRecord Trainer::train_step(const CameraView& view, const std::string& phase) {
    if (!view.target) {
        throw std::invalid_argument("trainer: view '" + view.id + "' has no target");
    }
    ++iteration_;
    const splat::RenderResult forward = splat::render(set_, view, cfg_.raster);
    const LossResult loss = photometric_loss(forward.image, *view.target, cfg_.loss);
    const WeightMap* weights = view.weight_map ? &*view.weight_map : nullptr;
    const splat::BackwardStats stats =
        splat::render_backward(set_, view, cfg_.raster, forward, loss.grad, weights);
    for (std::size_t i = 0; i < set_.size(); ++i) {
        if (stats.visible[i]) {
            grad_accum_[i] += stats.mean2d_grad_norm[i];
            ++grad_count_[i];
        }
    }
    adam_.step(set_, iteration_);

    StepRecord rec{iteration_, phase, view.id, loss.value, loss.l2, loss.ssim, set_.size()};
    steps_.push_back(rec);

    const DensifyConfig& d = cfg_.densify;
    if (iteration_ >= d.from && iteration_ <= d.until && iteration_ % d.interval == 0) {
        densify_prune();
    }
    return rec;
}

void Trainer::densify_prune() {
    const DensifyConfig& d = cfg_.densify;
    const std::size_t n = set_.size();
    std::vector<std::int64_t> source;
    source.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (set_[i].opacity() >= d.prune_opacity) {
            source.push_back(static_cast<std::int64_t>(i));
        }
    }
    const std::size_t kept = source.size();
    for (std::size_t i = 0; i < n && source.size() < d.max_gaussians; ++i) {
        if (grad_count_[i] == 0 || set_[i].opacity() < d.prune_opacity) {
            continue;
        }
        if (grad_accum_[i] / grad_count_[i] > d.grad_threshold) {
            source.push_back(-1 - static_cast<std::int64_t>(i));  // clone of i
        }
    }
    if (kept == n && source.size() == n) {
        std::fill(grad_accum_.begin(), grad_accum_.end(), 0.0);
        std::fill(grad_count_.begin(), grad_count_.end(), 0u);
        return;
    }

    std::vector<std::size_t> gather(source.size());
    std::vector<std::int64_t> moments(source.size());
    for (std::size_t k = 0; k < source.size(); ++k) {
        const bool clone = source[k] < 0;
        gather[k] = static_cast<std::size_t>(clone ? -1 - source[k] : source[k]);
        moments[k] = clone ? -1 : source[k];
    }
    set_.gather(gather);
    for (std::size_t k = kept; k < set_.size(); ++k) {
        // Offset the copy by half a standard deviation drawn in its own frame.
        Gaussian& g = set_[k];
        const Vec3 s = g.scale();
        const Vec3 local{0.5 * s.x * densify_rng_.normal(), 0.5 * s.y * densify_rng_.normal(),
                         0.5 * s.z * densify_rng_.normal()};
        const Vec3 offset = quat_to_matrix(g.rotation.normalized()) * local;
        g.position = g.position + offset;
        GaussianParams p = g.params();
        for (double& v : p) {
            v = static_cast<float>(v);
        }
        g = Gaussian::from_params(p);
    }
    set_.zero_grad();
    adam_.remap(moments);
    grad_accum_.assign(set_.size(), 0.0);
    grad_count_.assign(set_.size(), 0);
}

void Trainer::warmup() {
    if (refs_.empty()) {
        throw std::invalid_argument("trainer: warmup needs at least one reference view");
    }
    std::vector<std::size_t> order;
    while (iteration_ < cfg_.it_s && !stopped()) {
        if (order.empty()) {
            order.resize(refs_.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            warmup_rng_.shuffle(std::span<std::size_t>(order));
            std::reverse(order.begin(), order.end());
        }
        const std::size_t idx = order.back();
        order.pop_back();
        train_step(refs_[idx], "warmup");
    }
}

std::vector<FixOutcome> Trainer::fixing_round(fixer::Fixer& fixer) {
    std::vector<fixer::FixRequest> requests;
    std::vector<FixOutcome> outcomes;
    std::vector<pcrender::ConfidenceMask> masks;
    for (const CameraView& view : novel_) {
        fixer::FixRequest req;
        req.view_id = view.id;
        req.artifact_image = splat::render(set_, view, cfg_.raster).image;
        auto [guidance, mask] = pcrender::render_points(cloud_, view, cfg_.raster.near_plane);
        req.guidance_image = std::move(guidance);
        req.guidance_mask = mask;
        FixOutcome out;
        out.view_id = view.id;
        out.reference_id = fixer::select_reference(refs_, view);
        out.mask_coverage = pcrender::mask_coverage(mask);
        req.reference_image = *find_view(out.reference_id).target;
        masks.push_back(std::move(mask));
        requests.push_back(std::move(req));
        outcomes.push_back(out);
    }

    std::vector<ColorImage> fixed;
    try {
        fixed = fixer.fix_batch(requests);
    } catch (const fixer::FixError&) {
        fixed.clear();
        for (std::size_t i = 0; i < requests.size(); ++i) {
            try {
                fixed.push_back(fixer.fix(requests[i]));
            } catch (const fixer::FixError& e) {
                std::cerr << "warning: " << e.what() << "; using the artifact render as target\n";
                fixed.push_back(requests[i].artifact_image);
                outcomes[i].fell_back = true;
            }
        }
    }
    for (std::size_t i = 0; i < novel_.size(); ++i) {
        novel_[i].target = std::move(fixed[i]);
        novel_[i].weight_map = splat::compute_view_weights(novel_[i], masks[i], cfg_.beta);
    }
    return outcomes;
}

void Trainer::mixed_phase() {
    if (cfg_.it_e <= iteration_ || stopped()) {
        return;
    }
    for (const auto& v : novel_) {
        if (!v.target) {
            throw std::invalid_argument("trainer: novel view '" + v.id + "' has no target; run the fixing round first");
        }
    }
    std::vector<std::string> ref_ids, novel_ids;
    for (const auto& v : refs_) {
        ref_ids.push_back(v.id);
    }
    for (const auto& v : novel_) {
        novel_ids.push_back(v.id);
    }
    schedule_ = std::make_unique<scheduler::SampleSchedule>(ref_ids, novel_ids, cfg_.alpha,
                                                            Rng::derive(cfg_.seed, 2).next_u64(),
                                                            cfg_.schedule);
    schedule_->set_tracing(true);
    while (iteration_ < cfg_.it_e && !stopped()) {
        train_step(find_view(schedule_->next_sample()), "mixed");
    }
}

std::vector<ViewMetrics> Trainer::evaluate(std::span<const CameraView> views) const {
    std::vector<ViewMetrics> out;
    for (const auto& v : views) {
        if (!v.target) {
            continue;
        }
        // Scored as written to disk.
        const ColorImage img = quantized(splat::render(set_, v, cfg_.raster).image);
        out.push_back({v.id, metrics::psnr(img, *v.target), metrics::ssim(img, *v.target)});
    }
    return out;
}

TrainReport Trainer::run(fixer::Fixer& fixer, const std::function<void(const std::string&)>& on_phase) {
    TrainReport report;
    auto t0 = std::chrono::steady_clock::now();
    warmup();
    report.warmup_seconds = seconds_since(t0);
    if (on_phase) {
        on_phase("warmup");
    }
    report.heldout_at_it_s = evaluate(heldout_);
    if (!stopped() && cfg_.it_e > cfg_.it_s) {
        t0 = std::chrono::steady_clock::now();
        report.fixes = fixing_round(fixer);
        report.fixing_seconds = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        mixed_phase();
        report.mixed_seconds = seconds_since(t0);
    }
    report.heldout_final = evaluate(heldout_);
    if (on_phase) {
        on_phase("final");
    }
    report.steps = steps_;
    if (schedule_) {
        report.kept_reference = schedule_->kept_reference();
        report.kept_total = schedule_->kept_total();
    }
    return report;
}

}  // namespace splatfix::trainer
