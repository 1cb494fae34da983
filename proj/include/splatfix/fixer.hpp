#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "splatfix/camera.hpp"
#include "splatfix/image.hpp"
#include "splatfix/pcrender.hpp"

// Artifact fixing stage: the fixer interface, concrete fixers, the
// single-step denoise combinator and reference-view selection.
namespace splatfix::fixer {

struct FixRequest {
    std::string view_id;
    ColorImage artifact_image;   // render of the current scene on the novel view
    ColorImage guidance_image;   // point-cloud render on the same view
    ColorImage reference_image;  // target of the nearest reference view
    pcrender::ConfidenceMask guidance_mask;  // coverage of the guidance render; may be empty

    // Throws DataError when the images differ in size or the mask is present
    // with other dimensions.
    void validate() const;
};

class FixError : public std::runtime_error {
public:
    FixError(std::string view_id, const std::string& message)
        : std::runtime_error("fixing view '" + view_id + "' failed: " + message),
          view_id_(std::move(view_id)) {}
    const std::string& view_id() const { return view_id_; }

private:
    std::string view_id_;
};

// Implementations return an image the size of the request with channels in
// [0, 1], deterministically for a given configuration, and signal failure
// with FixError.
class Fixer {
public:
    virtual ~Fixer() = default;
    virtual std::string_view name() const = 0;
    virtual ColorImage fix(const FixRequest& request) = 0;
    // Default: fix() per request.
    virtual std::vector<ColorImage> fix_batch(std::span<const FixRequest> requests);
};

class IdentityFixer : public Fixer {
public:
    std::string_view name() const override { return "identity"; }
    ColorImage fix(const FixRequest& request) override;
};

enum class OracleRegion {
    everywhere,      // blend on every pixel
    uncovered_only,  // blend where the guidance mask is false, exact truth elsewhere
};

struct OracleOptions {
    // out = fidelity * truth + (1 - fidelity) * artifact on the blended region.
    double fidelity = 1.0;
    OracleRegion region = OracleRegion::everywhere;
};

// Returns held-out ground truth for the requested view.
class OracleFixer : public Fixer {
public:
    // Throws std::invalid_argument for fidelity outside [0, 1].
    OracleFixer(std::map<std::string, ColorImage> truth, OracleOptions options = {});
    std::string_view name() const override { return "oracle"; }
    ColorImage fix(const FixRequest& request) override;

private:
    std::map<std::string, ColorImage> truth_;
    OracleOptions options_;
};

// Coefficients of the single-step combinator
//   out = sqrt(xi_prev) * eta_t / eta_prev * Z + sqrt(xi_t) * eta_prev / eta_t * z + sigma_t * noise.
// They come from an external noise schedule; there are no defaults.
struct DenoiseCoeffs {
    double xi_t = 0.0;
    double xi_prev = 0.0;
    double eta_t = 1.0;
    double eta_prev = 1.0;
    double sigma_t = 0.0;
    std::int64_t t_fixed = 0;

    // Throws std::invalid_argument: eta_t, eta_prev nonzero; xi >= 0; sigma_t >= 0.
    void validate() const;
};

// Throws std::invalid_argument when the three vectors differ in length.
std::vector<double> denoise_step(std::span<const double> Z, std::span<const double> z,
                                 const DenoiseCoeffs& coeffs, std::span<const double> noise);

struct ExternalFixerOptions {
    // Program run once per batch as `command <exchange dir>`; resolved via PATH.
    std::string command;
    std::filesystem::path exchange_root;
    double timeout_seconds = 300.0;
    std::optional<DenoiseCoeffs> coefficients;  // echoed into the manifest
};

// Exchanges PNG payloads with an external process through a per-batch
// directory holding manifest.json:
//   {"version": 1, "coefficients": {...} | null,
//    "entries": [{"view_id", "artifact", "guidance", "reference", "output"}]}
// The process must write every "output" PNG and then a file named "done".
class ExternalFixer : public Fixer {
public:
    explicit ExternalFixer(ExternalFixerOptions options);
    std::string_view name() const override { return "external"; }
    ColorImage fix(const FixRequest& request) override;
    std::vector<ColorImage> fix_batch(std::span<const FixRequest> requests) override;

    static constexpr const char* kManifestName = "manifest.json";
    static constexpr const char* kDoneMarker = "done";

private:
    ExternalFixerOptions options_;
    std::uint64_t batches_ = 0;
};

// Id of the reference view whose camera center is nearest to the novel
// view's; exact ties go to the lexicographically smaller id. Throws
// std::invalid_argument when `references` is empty.
std::string select_reference(std::span<const CameraView> references, const CameraView& novel);

}  // namespace splatfix::fixer
