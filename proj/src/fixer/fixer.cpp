#include <algorithm>
#include <cmath>

#include "splatfix/error.hpp"
#include "splatfix/fixer.hpp"

namespace splatfix::fixer {
namespace {

ColorImage clamped(ColorImage img) {
    for (double& v : img.data()) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return img;
}

}  // namespace

void FixRequest::validate() const {
    if (!artifact_image.same_size(guidance_image) || !artifact_image.same_size(reference_image)) {
        throw DataError("fix request for view '" + view_id + "': image sizes differ");
    }
    const bool has_mask = guidance_mask.width() != 0 || guidance_mask.height() != 0;
    if (has_mask && (guidance_mask.width() != artifact_image.width() ||
                     guidance_mask.height() != artifact_image.height())) {
        throw DataError("fix request for view '" + view_id + "': mask size differs from the images");
    }
}

std::vector<ColorImage> Fixer::fix_batch(std::span<const FixRequest> requests) {
    std::vector<ColorImage> out;
    out.reserve(requests.size());
    for (const FixRequest& r : requests) {
        out.push_back(fix(r));
    }
    return out;
}

ColorImage IdentityFixer::fix(const FixRequest& request) {
    request.validate();
    return clamped(request.artifact_image);
}

OracleFixer::OracleFixer(std::map<std::string, ColorImage> truth, OracleOptions options)
    : truth_(std::move(truth)), options_(options) {
    if (!(options.fidelity >= 0.0 && options.fidelity <= 1.0)) {
        throw std::invalid_argument("OracleFixer: fidelity must lie in [0, 1]");
    }
}

ColorImage OracleFixer::fix(const FixRequest& request) {
    request.validate();
    const auto it = truth_.find(request.view_id);
    if (it == truth_.end()) {
        throw FixError(request.view_id, "no ground truth for this view");
    }
    const ColorImage& truth = it->second;
    if (!truth.same_size(request.artifact_image)) {
        throw FixError(request.view_id, "ground truth size differs from the render");
    }
    const double lambda = options_.fidelity;
    if (lambda == 1.0) {
        return clamped(truth);
    }
    const bool masked = options_.region == OracleRegion::uncovered_only;
    if (masked && request.guidance_mask.width() != truth.width()) {
        throw FixError(request.view_id, "uncovered-only blending needs a guidance mask");
    }
    ColorImage out = truth;
    for (int y = 0; y < truth.height(); ++y) {
        for (int x = 0; x < truth.width(); ++x) {
            if (masked && request.guidance_mask.at(x, y)) {
                continue;
            }
            const Rgb t = truth.at(x, y);
            const Rgb a = request.artifact_image.at(x, y);
            out.set(x, y, {lambda * t.r + (1.0 - lambda) * a.r, lambda * t.g + (1.0 - lambda) * a.g,
                           lambda * t.b + (1.0 - lambda) * a.b});
        }
    }
    return clamped(std::move(out));
}

void DenoiseCoeffs::validate() const {
    if (eta_t == 0.0 || eta_prev == 0.0 || !std::isfinite(eta_t) || !std::isfinite(eta_prev)) {
        throw std::invalid_argument("denoise coefficients: eta_t and eta_prev must be finite and nonzero");
    }
    if (!(xi_t >= 0.0) || !(xi_prev >= 0.0)) {
        throw std::invalid_argument("denoise coefficients: xi_t and xi_prev must be non-negative");
    }
    if (!(sigma_t >= 0.0)) {
        throw std::invalid_argument("denoise coefficients: sigma_t must be non-negative");
    }
}

std::vector<double> denoise_step(std::span<const double> Z, std::span<const double> z,
                                 const DenoiseCoeffs& coeffs, std::span<const double> noise) {
    if (Z.size() != z.size() || Z.size() != noise.size()) {
        throw std::invalid_argument("denoise_step: latent lengths differ (" + std::to_string(Z.size()) +
                                    ", " + std::to_string(z.size()) + ", " +
                                    std::to_string(noise.size()) + ")");
    }
    coeffs.validate();
    const double a = std::sqrt(coeffs.xi_prev) * coeffs.eta_t / coeffs.eta_prev;
    const double b = std::sqrt(coeffs.xi_t) * coeffs.eta_prev / coeffs.eta_t;
    std::vector<double> out(Z.size());
    for (std::size_t i = 0; i < Z.size(); ++i) {
        out[i] = a * Z[i] + b * z[i] + coeffs.sigma_t * noise[i];
    }
    return out;
}

std::string select_reference(std::span<const CameraView> references, const CameraView& novel) {
    if (references.empty()) {
        throw std::invalid_argument("select_reference: no reference views");
    }
    const Vec3 c = novel.pose.camera_center();
    const CameraView* best = nullptr;
    double best_d = 0.0;
    for (const CameraView& r : references) {
        const double d = (r.pose.camera_center() - c).norm();
        if (!best || d < best_d || (d == best_d && r.id < best->id)) {
            best = &r;
            best_d = d;
        }
    }
    return best->id;
}

}  // namespace splatfix::fixer
