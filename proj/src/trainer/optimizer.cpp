#include "splatfix/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splatfix {

double LearningRates::position_at(std::int64_t iteration) const {
    const double t = position_max_steps > 0
                         ? std::clamp(static_cast<double>(iteration) / position_max_steps, 0.0, 1.0)
                         : 1.0;
    const double lr = std::exp((1.0 - t) * std::log(position_init) + t * std::log(position_final));
    return lr * spatial_scale;
}

Adam::Adam(LearningRates rates, AdamSettings settings) : rates_(rates), settings_(settings) {
    if (!(rates.position_init > 0.0) || !(rates.position_final > 0.0)) {
        throw std::invalid_argument("position learning rates must be positive");
    }
}

void Adam::step(GaussianSet& set, std::int64_t iteration) {
    const std::size_t n = set.size();
    if (m_.size() != n) {
        m_.resize(n, GaussianParams{});
        v_.resize(n, GaussianParams{});
    }
    ++steps_;
    const double b1 = settings_.beta1, b2 = settings_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));

    double lr[kParamsPerGaussian];
    const double lr_pos = rates_.position_at(iteration);
    for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
        if (k < param::rotation) {
            lr[k] = lr_pos;
        } else if (k < param::log_scale) {
            lr[k] = rates_.rotation;
        } else if (k < param::opacity) {
            lr[k] = rates_.scale;
        } else if (k == param::opacity) {
            lr[k] = rates_.opacity;
        } else {
            lr[k] = rates_.color;
        }
    }

    auto grads = set.grads();
    for (std::size_t i = 0; i < n; ++i) {
        GaussianParams p = set[i].params();
        for (std::size_t k = 0; k < kParamsPerGaussian; ++k) {
            const double g = grads[i][k];
            m_[i][k] = b1 * m_[i][k] + (1.0 - b1) * g;
            v_[i][k] = b2 * v_[i][k] + (1.0 - b2) * g * g;
            const double mhat = m_[i][k] / c1;
            const double vhat = v_[i][k] / c2;
            p[k] -= lr[k] * mhat / (std::sqrt(vhat) + settings_.eps);
        }
        Gaussian g = Gaussian::from_params(p);
        const double qn = g.rotation.norm();
        if (qn > 0.0) {
            g.rotation = g.rotation.normalized();
        } else {
            g.rotation = Quaternion::identity();
        }
        g.color = {std::clamp(g.color.r, 0.0, 1.0), std::clamp(g.color.g, 0.0, 1.0),
                   std::clamp(g.color.b, 0.0, 1.0)};
        GaussianParams q = g.params();
        for (double& v : q) {
            v = static_cast<float>(v);
        }
        set[i] = Gaussian::from_params(q);
    }
    set.zero_grad();
}

void Adam::remap(std::span<const std::int64_t> source) {
    std::vector<GaussianParams> m(source.size(), GaussianParams{}), v(source.size(), GaussianParams{});
    for (std::size_t i = 0; i < source.size(); ++i) {
        const std::int64_t s = source[i];
        if (s >= 0 && static_cast<std::size_t>(s) < m_.size()) {
            m[i] = m_[s];
            v[i] = v_[s];
        }
    }
    m_ = std::move(m);
    v_ = std::move(v);
}

}  // namespace splatfix
