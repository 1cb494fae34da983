#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "splatfix/core.hpp"

namespace splatfix {

// Flat parameter layout shared by the optimizer, gradients and checkpoints:
// position[0..3) rotation(w,x,y,z)[3..7) log_scale[7..10) opacity_logit[10]
// color[11..14).
inline constexpr std::size_t kParamsPerGaussian = 14;
using GaussianParams = std::array<double, kParamsPerGaussian>;

namespace param {
inline constexpr std::size_t position = 0;
inline constexpr std::size_t rotation = 3;
inline constexpr std::size_t log_scale = 7;
inline constexpr std::size_t opacity = 10;
inline constexpr std::size_t color = 11;
}  // namespace param

struct Gaussian {
    Vec3 position;
    Quaternion rotation;
    Vec3 log_scale;            // per-axis log standard deviation
    double opacity_logit = 0.0;  // pre-sigmoid
    Rgb color;                 // degree-0 color in [0, 1]

    double opacity() const;
    Vec3 scale() const;

    GaussianParams params() const;
    static Gaussian from_params(const GaussianParams& p);

    bool operator==(const Gaussian&) const = default;
};

double sigmoid(double x);
double logit(double p);

// The optimizable scene plus gradient accumulators of identical shape.
class GaussianSet {
public:
    GaussianSet() = default;
    explicit GaussianSet(std::vector<Gaussian> gaussians);

    std::size_t size() const { return gaussians_.size(); }
    bool empty() const { return gaussians_.empty(); }

    const Gaussian& operator[](std::size_t i) const { return gaussians_[i]; }
    Gaussian& operator[](std::size_t i) { return gaussians_[i]; }
    std::span<const Gaussian> gaussians() const { return gaussians_; }
    std::span<Gaussian> gaussians() { return gaussians_; }

    std::span<const GaussianParams> grads() const { return grads_; }
    std::span<GaussianParams> grads() { return grads_; }

    void push_back(const Gaussian& g);
    // Keeps the Gaussians at `indices` (in that order, repeats allowed) along
    // with their gradient accumulators.
    void gather(std::span<const std::size_t> indices);
    void zero_grad();

    // Gaussians compare equal; gradient state is ignored.
    bool same_gaussians(const GaussianSet& o) const { return gaussians_ == o.gaussians_; }

private:
    std::vector<Gaussian> gaussians_;
    std::vector<GaussianParams> grads_;
};

}  // namespace splatfix
