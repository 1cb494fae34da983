#include "splatfix/gaussian.hpp"

#include <cmath>

namespace splatfix {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double logit(double p) { return std::log(p / (1.0 - p)); }

double Gaussian::opacity() const { return sigmoid(opacity_logit); }

Vec3 Gaussian::scale() const {
    return {std::exp(log_scale.x), std::exp(log_scale.y), std::exp(log_scale.z)};
}

GaussianParams Gaussian::params() const {
    return {position.x,  position.y,  position.z,    rotation.w, rotation.x,
            rotation.y,  rotation.z,  log_scale.x,   log_scale.y, log_scale.z,
            opacity_logit, color.r,   color.g,       color.b};
}

Gaussian Gaussian::from_params(const GaussianParams& p) {
    Gaussian g;
    g.position = {p[0], p[1], p[2]};
    g.rotation = {p[3], p[4], p[5], p[6]};
    g.log_scale = {p[7], p[8], p[9]};
    g.opacity_logit = p[10];
    g.color = {p[11], p[12], p[13]};
    return g;
}

GaussianSet::GaussianSet(std::vector<Gaussian> gaussians)
    : gaussians_(std::move(gaussians)), grads_(gaussians_.size(), GaussianParams{}) {}

void GaussianSet::push_back(const Gaussian& g) {
    gaussians_.push_back(g);
    grads_.push_back(GaussianParams{});
}

void GaussianSet::gather(std::span<const std::size_t> indices) {
    std::vector<Gaussian> g;
    std::vector<GaussianParams> d;
    g.reserve(indices.size());
    d.reserve(indices.size());
    for (std::size_t i : indices) {
        g.push_back(gaussians_.at(i));
        d.push_back(grads_.at(i));
    }
    gaussians_ = std::move(g);
    grads_ = std::move(d);
}

void GaussianSet::zero_grad() {
    for (auto& g : grads_) {
        g.fill(0.0);
    }
}

}  // namespace splatfix
