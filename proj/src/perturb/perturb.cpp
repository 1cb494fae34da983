#include "splatfix/perturb.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace splatfix::perturb {

double min_delta_phi() { return 5.0 * std::numbers::pi / 180.0; }
double max_delta_phi() { return 45.0 * std::numbers::pi / 180.0; }

void PerturbConfig::validate(bool allow_out_of_range) const {
    if (!(sigma_x >= 0.0) || !(delta_phi >= 0.0)) {
        throw std::invalid_argument("perturbation magnitudes must be non-negative");
    }
    if (allow_out_of_range) {
        return;
    }
    if (sigma_x < kMinSigmaX || sigma_x > kMaxSigmaX) {
        throw std::invalid_argument("sigma_x " + std::to_string(sigma_x) +
                                    " outside [1e-4, 1e-2]");
    }
    // Small slack so that degree inputs converted to radians pass.
    if (delta_phi < min_delta_phi() - 1e-12 || delta_phi > max_delta_phi() + 1e-12) {
        throw std::invalid_argument("delta_phi outside [5, 45] degrees");
    }
}

Vec3 jitter_position(const Vec3& x, const PerturbConfig& cfg, Rng& rng) {
    const Vec3 eps{rng.normal(), rng.normal(), rng.normal()};
    return x + eps * cfg.sigma_x;
}

Quaternion random_rotation_quat(const PerturbConfig& cfg, Rng& rng) {
    Vec3 k;
    double n = 0.0;
    do {
        k = {rng.normal(), rng.normal(), rng.normal()};
        n = k.norm();
    } while (n < 1e-12);
    k = k * (1.0 / n);
    const double phi = rng.uniform(-cfg.delta_phi, cfg.delta_phi);
    return Quaternion::from_axis_angle(k, phi);
}

Quaternion jitter_rotation(const Quaternion& q, const PerturbConfig& cfg, Rng& rng) {
    if (std::abs(q.norm() - 1.0) > kUnitQuaternionTolerance) {
        throw std::invalid_argument("jitter_rotation: input quaternion is not unit");
    }
    return quat_mul(random_rotation_quat(cfg, rng), q);
}

GaussianSet perturb_set(const GaussianSet& set, const PerturbConfig& cfg) {
    GaussianSet out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        Gaussian g = set[i];
        Rng rng = Rng::derive(cfg.seed, i);
        g.position = jitter_position(g.position, cfg, rng);
        g.rotation = jitter_rotation(g.rotation, cfg, rng);
        out.push_back(g);
    }
    return out;
}

}  // namespace splatfix::perturb
