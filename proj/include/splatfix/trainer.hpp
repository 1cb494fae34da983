#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "splatfix/camera.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/gaussian.hpp"
#include "splatfix/io.hpp"
#include "splatfix/loss.hpp"
#include "splatfix/optimizer.hpp"
#include "splatfix/pcrender.hpp"
#include "splatfix/scheduler.hpp"
#include "splatfix/splat.hpp"

// Two-phase reconstruction: reference-only warmup up to it_s, one fixing
// round over the novel views, then mixed supervision with random sample drop
// and weighted gradients up to it_e.
namespace splatfix::trainer {

struct DensifyConfig {
    std::int64_t interval = 100;
    std::int64_t from = 500;
    std::int64_t until = 15000;
    // Mean norm of the footprint-normalized 2D mean gradient, px^-1 units.
    double grad_threshold = 1e-6;
    double prune_opacity = 0.005;
    std::size_t max_gaussians = 20000;
};

struct TrainConfig {
    std::int64_t it_s = 3000;
    std::int64_t it_e = 30000;
    double alpha = 0.7;
    double beta = 0.4;
    std::uint64_t seed = 0;
    // Stop once this iteration is reached (0 = run to it_e); produces
    // deliberately under-trained scenes.
    std::int64_t stop_at = 0;
    // spatial_scale <= 0 derives it from the camera extent; position_max_steps
    // <= 0 means it_e.
    LearningRates lr = auto_rates();
    AdamSettings adam;
    DensifyConfig densify;
    LossWeights loss;
    splat::RasterConfig raster;
    scheduler::ScheduleOptions schedule;

    // Throws std::invalid_argument.
    void validate() const;

    // Flat keys: train.*, lr.*, adam.*, densify.*, loss.*, raster.*, schedule.*
    static TrainConfig from_config(const io::KeyValueConfig& cfg);
    io::KeyValueConfig to_config() const;
    static const std::set<std::string>& keys();

    static LearningRates auto_rates() {
        LearningRates r;
        r.spatial_scale = 0.0;
        r.position_max_steps = 0;
        return r;
    }
};

struct InitConfig {
    double opacity = 0.1;
    double min_scale = 1e-4;
    int neighbours = 3;
};

// One Gaussian per point: identity rotation, isotropic scale equal to the RMS
// distance to the nearest neighbours, the point's color.
GaussianSet initialize_from_points(const pcrender::GuidancePointCloud& cloud, const InitConfig& cfg = {});

// 1.1 times the largest distance of a camera center from their mean.
double camera_extent(std::span<const CameraView> views);

struct StepRecord {
    std::int64_t iteration = 0;
    std::string phase;
    std::string view_id;
    double loss = 0.0;
    double l2 = 0.0;
    double ssim = 0.0;
    std::size_t gaussians = 0;
};

struct ViewMetrics {
    std::string view_id;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct FixOutcome {
    std::string view_id;
    std::string reference_id;
    double mask_coverage = 0.0;
    bool fell_back = false;
};

struct TrainReport {
    std::vector<StepRecord> steps;
    double warmup_seconds = 0.0;
    double fixing_seconds = 0.0;
    double mixed_seconds = 0.0;
    std::vector<ViewMetrics> heldout_at_it_s;
    std::vector<ViewMetrics> heldout_final;
    std::vector<FixOutcome> fixes;
    std::uint64_t kept_reference = 0;
    std::uint64_t kept_total = 0;
    std::string schedule_trace;  // file name of the exported trace, if any

    static double mean_psnr(const std::vector<ViewMetrics>& m);
    static double mean_ssim(const std::vector<ViewMetrics>& m);
    nlohmann::json to_json() const;
};

// CSV with header "iteration,phase,view_id,loss,l2,ssim,gaussians".
void write_loss_csv(std::ostream& out, const std::vector<StepRecord>& steps);

class Trainer {
public:
    // Reference views must carry targets. Throws std::invalid_argument.
    Trainer(TrainConfig cfg, GaussianSet initial, std::vector<CameraView> references,
            std::vector<CameraView> novel);

    void set_point_cloud(pcrender::GuidancePointCloud cloud) { cloud_ = std::move(cloud); }
    void set_heldout(std::vector<CameraView> views) { heldout_ = std::move(views); }

    // Iterations 1..it_s on shuffled reference epochs with unweighted gradients.
    void warmup();
    // Renders every novel view once, fixes it and stores target and weight map.
    // A FixError falls back to the artifact render for that view.
    std::vector<FixOutcome> fixing_round(fixer::Fixer& fixer);
    // Iterations it_s+1..it_e drawn from the sample schedule. Needs targets on
    // every novel view. Propagates ScheduleStarvation.
    void mixed_phase();
    // warmup, fixing_round and mixed_phase with timings and held-out metrics.
    // `on_phase` is called with "warmup" and "final" after those points.
    TrainReport run(fixer::Fixer& fixer, const std::function<void(const std::string&)>& on_phase = {});

    // One optimizer step supervised by `view` (its weight map applies when set).
    StepRecord train_step(const CameraView& view, const std::string& phase);
    // Clone on high mean 2D gradient, prune on low opacity, reset statistics.
    void densify_prune();

    // PSNR and SSIM of the 8-bit quantized renders against the view targets.
    std::vector<ViewMetrics> evaluate(std::span<const CameraView> views) const;

    const TrainConfig& config() const { return cfg_; }
    const GaussianSet& gaussians() const { return set_; }
    GaussianSet& gaussians() { return set_; }
    const std::vector<CameraView>& references() const { return refs_; }
    const std::vector<CameraView>& novel_views() const { return novel_; }
    const std::vector<StepRecord>& steps() const { return steps_; }
    std::int64_t iteration() const { return iteration_; }
    const scheduler::SampleSchedule* schedule() const { return schedule_.get(); }
    bool stopped() const { return cfg_.stop_at > 0 && iteration_ >= cfg_.stop_at; }

private:
    const CameraView& find_view(const std::string& id) const;

    TrainConfig cfg_;
    GaussianSet set_;
    std::vector<CameraView> refs_;
    std::vector<CameraView> novel_;
    std::vector<CameraView> heldout_;
    pcrender::GuidancePointCloud cloud_;
    Adam adam_;
    Rng warmup_rng_;
    Rng densify_rng_;
    std::unique_ptr<scheduler::SampleSchedule> schedule_;
    std::int64_t iteration_ = 0;
    std::vector<StepRecord> steps_;
    std::vector<double> grad_accum_;
    std::vector<std::uint32_t> grad_count_;
};

}  // namespace splatfix::trainer
