#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "splatfix/error.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/image.hpp"
#include "splatfix/rng.hpp"

using namespace splatfix;
using namespace splatfix::fixer;
namespace fs = std::filesystem;

namespace {

// Values on the 8-bit grid survive the PNG exchange unchanged.
ColorImage grid_image(Rng& rng, int w, int h) {
    ColorImage img(w, h);
    for (double& v : img.data()) {
        v = static_cast<double>(rng.uniform_int(256)) / 255.0;
    }
    return img;
}

FixRequest request(Rng& rng, const std::string& id, int w = 6, int h = 5) {
    FixRequest r;
    r.view_id = id;
    r.artifact_image = grid_image(rng, w, h);
    r.guidance_image = grid_image(rng, w, h);
    r.reference_image = grid_image(rng, w, h);
    r.guidance_mask = pcrender::ConfidenceMask(w, h);
    return r;
}

CameraView at(const std::string& id, Vec3 center) {
    CameraView v;
    v.id = id;
    v.intrinsics = {10, 10, 5, 5, 10, 10};
    v.pose = look_at(center, {0, 0, 100}, {0, -1, 0});
    return v;
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("splatfix_test_fixer_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("denoise combinator examples") {
    const std::vector<double> Z{1, 2}, z{3, 4}, noise{5, 6};
    CHECK(denoise_step(Z, z, {0.0, 1.0, 1.0, 1.0, 0.0, 0}, noise) == Z);
    CHECK(denoise_step(Z, z, {1.0, 0.0, 1.0, 1.0, 0.0, 0}, noise) == z);
    CHECK(denoise_step(Z, z, {0.81, 0.25, 2.0, 1.0, 0.0, 0}, noise) == std::vector<double>{2.35, 3.8});
    const auto n = denoise_step(Z, z, {0.0, 0.0, 1.0, 1.0, 0.5, 0}, noise);
    CHECK(n == std::vector<double>{2.5, 3.0});
    CHECK_THROWS_AS(denoise_step(Z, std::vector<double>{1}, {}, noise), std::invalid_argument);
}

TEST_CASE("denoise combinator is affine") {
    Rng rng(1);
    const DenoiseCoeffs c{0.3, 0.6, 1.7, 0.9, 0.2, 4};
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> z1(8), z2(8), Z(8), e(8);
        for (int i = 0; i < 8; ++i) {
            z1[i] = rng.normal();
            z2[i] = rng.normal();
            Z[i] = rng.normal();
            e[i] = rng.normal();
        }
        const double s = rng.uniform(-2, 2);
        std::vector<double> mix(8);
        for (int i = 0; i < 8; ++i) {
            mix[i] = s * z1[i] + (1 - s) * z2[i];
        }
        const auto a = denoise_step(Z, z1, c, e), b = denoise_step(Z, z2, c, e), m = denoise_step(Z, mix, c, e);
        for (int i = 0; i < 8; ++i) {
            CHECK(m[i] == doctest::Approx(s * a[i] + (1 - s) * b[i]));
        }
    }
}

TEST_CASE("coefficient validation") {
    CHECK_THROWS_AS(DenoiseCoeffs({0, 0, 0.0, 1, 0, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(DenoiseCoeffs({-1, 0, 1, 1, 0, 0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(DenoiseCoeffs({0, 0, 1, 1, -0.1, 0}).validate(), std::invalid_argument);
    CHECK_NOTHROW(DenoiseCoeffs({0.5, 0.5, 1, 1, 0, 0}).validate());
}

TEST_CASE("identity fixer returns the clamped artifact") {
    Rng rng(2);
    FixRequest r = request(rng, "v");
    r.artifact_image.data()[0] = 1.5;
    r.artifact_image.data()[1] = -0.5;
    IdentityFixer f;
    const ColorImage out = f.fix(r);
    CHECK(out.data()[0] == 1.0);
    CHECK(out.data()[1] == 0.0);
    for (std::size_t i = 2; i < out.data().size(); ++i) {
        CHECK(out.data()[i] == r.artifact_image.data()[i]);
    }
}

TEST_CASE("request validation") {
    Rng rng(3);
    FixRequest r = request(rng, "v");
    CHECK_NOTHROW(r.validate());
    r.guidance_mask = pcrender::ConfidenceMask(2, 2);
    CHECK_THROWS_AS(r.validate(), DataError);
    r = request(rng, "v");
    r.reference_image = ColorImage(3, 3);
    CHECK_THROWS_AS(r.validate(), DataError);
}

TEST_CASE("oracle fixer") {
    Rng rng(4);
    FixRequest r = request(rng, "v");
    const ColorImage truth = grid_image(rng, 6, 5);
    r.guidance_mask.set(1, 1, true);

    SUBCASE("returns the truth") {
        OracleFixer f({{"v", truth}});
        CHECK(f.fix(r) == truth);
    }
    SUBCASE("missing view") {
        OracleFixer f({{"w", truth}});
        CHECK_THROWS_AS(f.fix(r), FixError);
    }
    SUBCASE("fidelity blends everywhere") {
        OracleFixer f({{"v", truth}}, {0.25, OracleRegion::everywhere});
        const ColorImage out = f.fix(r);
        for (std::size_t i = 0; i < out.data().size(); ++i) {
            CHECK(out.data()[i] == doctest::Approx(0.25 * truth.data()[i] + 0.75 * r.artifact_image.data()[i]));
        }
    }
    SUBCASE("uncovered-only blending keeps covered pixels exact") {
        OracleFixer f({{"v", truth}}, {0.5, OracleRegion::uncovered_only});
        const ColorImage out = f.fix(r);
        CHECK(out.at(1, 1) == truth.at(1, 1));
        for (int c = 0; c < 3; ++c) {
            CHECK(out.channel(0, 0, c) ==
                  doctest::Approx(0.5 * truth.channel(0, 0, c) + 0.5 * r.artifact_image.channel(0, 0, c)));
        }
    }
    CHECK_THROWS_AS(OracleFixer({}, {1.5, OracleRegion::everywhere}), std::invalid_argument);
}

TEST_CASE("select_reference") {
    const std::vector<CameraView> refs{at("b", {1, 0, 0}), at("a", {-1, 0, 0}), at("c", {0, 5, 0})};
    CHECK(select_reference(refs, at("n", {0.9, 0.1, 0})) == "b");
    CHECK(select_reference(refs, at("n", {0, 4, 0})) == "c");
    // Exact tie between a and b.
    CHECK(select_reference(refs, at("n", {0, 0, 0})) == "a");
    CHECK_THROWS_AS(select_reference({}, at("n", {0, 0, 0})), std::invalid_argument);
}

TEST_CASE("external fixer round trip") {
    Rng rng(5);
    const std::vector<FixRequest> batch{request(rng, "v0"), request(rng, "v1", 9, 4)};
    ExternalFixerOptions o;
    o.command = SPLATFIX_ECHO_FIXER;
    o.exchange_root = scratch("echo");
    o.timeout_seconds = 20;
    o.coefficients = DenoiseCoeffs{0.5, 0.25, 1, 1, 0, 7};

    SUBCASE("echo returns the artifacts") {
        setenv("SPLATFIX_ECHO_FIXER_MODE", "", 1);
        ExternalFixer f(o);
        const auto out = f.fix_batch(batch);
        REQUIRE(out.size() == 2);
        CHECK(out[0] == batch[0].artifact_image);
        CHECK(out[1] == batch[1].artifact_image);
        std::ifstream in(o.exchange_root / "batch_000000" / "manifest.json");
        const auto m = nlohmann::json::parse(in);
        CHECK(m["version"] == 1);
        CHECK(m["coefficients"]["t_fixed"] == 7);
        CHECK(m["entries"][1]["view_id"] == "v1");
        CHECK(f.fix(batch[1]) == batch[1].artifact_image);
    }
    SUBCASE("guidance mode") {
        setenv("SPLATFIX_ECHO_FIXER_MODE", "guidance", 1);
        ExternalFixer f(o);
        CHECK(f.fix(batch[0]) == batch[0].guidance_image);
    }
    SUBCASE("nonzero exit") {
        setenv("SPLATFIX_ECHO_FIXER_MODE", "fail", 1);
        ExternalFixer f(o);
        CHECK_THROWS_AS(f.fix_batch(batch), FixError);
    }
    SUBCASE("missing done marker") {
        setenv("SPLATFIX_ECHO_FIXER_MODE", "no-done", 1);
        ExternalFixer f(o);
        CHECK_THROWS_AS(f.fix_batch(batch), FixError);
    }
    SUBCASE("timeout") {
        setenv("SPLATFIX_ECHO_FIXER_MODE", "hang", 1);
        o.timeout_seconds = 0.3;
        ExternalFixer f(o);
        CHECK_THROWS_AS(f.fix_batch(batch), FixError);
    }
    SUBCASE("missing program") {
        o.command = "/nonexistent/splatfix-fixer";
        ExternalFixer f(o);
        CHECK_THROWS_AS(f.fix_batch(batch), FixError);
    }
    unsetenv("SPLATFIX_ECHO_FIXER_MODE");
}
