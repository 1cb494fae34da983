#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "splatfix/gaussian.hpp"

namespace splatfix {

struct LearningRates {
    // Position rate decays exponentially from init to final over max_steps and
    // is multiplied by the scene's spatial scale.
    double position_init = 1.6e-4;
    double position_final = 1.6e-6;
    std::int64_t position_max_steps = 30000;
    double spatial_scale = 1.0;
    double rotation = 1e-3;
    double scale = 5e-3;
    double opacity = 0.05;
    double color = 2.5e-3;

    double position_at(std::int64_t iteration) const;
};

struct AdamSettings {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

// Adam over the flat Gaussian parameters with one learning rate per group.
// After each step rotations are renormalized, colors clamped to [0, 1] and
// every parameter rounded to float32, so checkpoints hold the exact state.
class Adam {
public:
    Adam(LearningRates rates, AdamSettings settings = {});

    // Applies set.grads() and zeroes them. `iteration` drives the position
    // schedule.
    void step(GaussianSet& set, std::int64_t iteration);

    // Reorders the moment buffers after the Gaussian set changed: entry i of
    // the new set takes the moments of old entry source[i], or zeros when
    // source[i] < 0.
    void remap(std::span<const std::int64_t> source);

    std::int64_t steps() const { return steps_; }
    const LearningRates& rates() const { return rates_; }

private:
    LearningRates rates_;
    AdamSettings settings_;
    std::int64_t steps_ = 0;
    std::vector<GaussianParams> m_;
    std::vector<GaussianParams> v_;
};

}  // namespace splatfix
