#pragma once

#include <cstdint>

#include "splatfix/core.hpp"
#include "splatfix/gaussian.hpp"
#include "splatfix/rng.hpp"

// Render-time corruption of Gaussian positions and rotations, used to build
// paired clean/corrupted images.
namespace splatfix::perturb {

struct PerturbConfig {
    double sigma_x = 1e-3;    // positional standard deviation, scene units
    double delta_phi = 0.0;   // maximum rotation angle, radians
    std::uint64_t seed = 0;

    // Checks sigma_x in [1e-4, 1e-2] and delta_phi in [5, 45] degrees unless
    // `allow_out_of_range` is set; negative magnitudes are always rejected.
    // Throws std::invalid_argument.
    void validate(bool allow_out_of_range = false) const;
};

inline constexpr double kMinSigmaX = 1e-4;
inline constexpr double kMaxSigmaX = 1e-2;
double min_delta_phi();  // 5 degrees in radians
double max_delta_phi();  // 45 degrees in radians

// x + eps with eps ~ N(0, sigma_x^2 I).
Vec3 jitter_position(const Vec3& x, const PerturbConfig& cfg, Rng& rng);

// [cos(phi/2), k sin(phi/2)] with k uniform on the unit sphere and phi
// uniform on [-delta_phi, delta_phi].
Quaternion random_rotation_quat(const PerturbConfig& cfg, Rng& rng);

// q_eps (x) q. Throws std::invalid_argument for a non-unit q.
Quaternion jitter_rotation(const Quaternion& q, const PerturbConfig& cfg, Rng& rng);

// Copy of `set` with every position and rotation jittered; each Gaussian
// draws from its own stream derived from (cfg.seed, index), so results do not
// depend on evaluation order.
GaussianSet perturb_set(const GaussianSet& set, const PerturbConfig& cfg);

}  // namespace splatfix::perturb
