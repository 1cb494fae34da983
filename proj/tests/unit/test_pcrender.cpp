#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "splatfix/error.hpp"
#include "splatfix/pcrender.hpp"
#include "splatfix/rng.hpp"

using namespace splatfix;
using namespace splatfix::pcrender;

namespace {

CameraView axis_view(int w, int h) {
    CameraView v;
    v.id = "v";
    v.intrinsics = {20.0, 20.0, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
    v.role = ViewRole::novel;
    return v;
}

}  // namespace

TEST_CASE("empty cloud renders black with an empty mask") {
    const CameraView v = axis_view(12, 9);
    const auto [image, mask] = render_points({}, v);
    CHECK(image == ColorImage(12, 9));
    CHECK(mask.popcount() == 0);
    CHECK(mask.width() == 12);
    CHECK(mask.height() == 9);
}

TEST_CASE("single point splats a 3x3 block and the nearer point wins") {
    const CameraView v = axis_view(11, 11);  // principal point (5, 5)
    GuidancePointCloud cloud;
    cloud.points.push_back({{0, 0, 2}, {0, 0, 1}});
    cloud.points.push_back({{0, 0, 1}, {1, 0, 0}});
    const auto [image, mask] = render_points(cloud, v);
    CHECK(mask.popcount() == 9);
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            const bool inside = std::abs(x - 5) <= 1 && std::abs(y - 5) <= 1;
            CHECK(mask.at(x, y) == inside);
            CHECK(image.at(x, y) == (inside ? Rgb{1, 0, 0} : Rgb{0, 0, 0}));
        }
    }
}

TEST_CASE("points behind the camera contribute nothing") {
    const CameraView v = axis_view(8, 8);
    GuidancePointCloud cloud;
    cloud.points.push_back({{0, 0, -1}, {1, 1, 1}});
    cloud.points.push_back({{0, 0, 0}, {1, 1, 1}});
    const auto [image, mask] = render_points(cloud, v);
    CHECK(mask.popcount() == 0);
    CHECK(image == ColorImage(8, 8));
}

TEST_CASE("depth ordering matches a brute-force per-pixel scan") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 16, h = 12;
        CameraView v = axis_view(w, h);
        v.pose = look_at({rng.uniform(-1, 1), rng.uniform(-1, 1), -3}, {0, 0, 0}, {0, -1, 0});
        GuidancePointCloud cloud;
        cloud.point_radius_px = rng.uniform(0.2, 2.4);
        const int n = 1 + static_cast<int>(rng.uniform_int(100));
        for (int i = 0; i < n; ++i) {
            // Colors strictly away from black so coverage is visible in the image.
            cloud.points.push_back({{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                    {rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 1)}});
        }
        const auto [image, mask] = render_points(cloud, v);

        const int r = static_cast<int>(std::floor(cloud.point_radius_px + 0.5));
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double best = std::numeric_limits<double>::infinity();
                Rgb color{0, 0, 0};
                for (const auto& p : cloud.points) {
                    const auto proj = project_point(v, p.position);
                    if (!proj) {
                        continue;
                    }
                    const double px = std::floor(proj->u + 0.5), py = std::floor(proj->v + 0.5);
                    if (std::abs(px - x) <= r && std::abs(py - y) <= r && proj->depth < best) {
                        best = proj->depth;
                        color = p.color;
                    }
                }
                const bool covered = std::isfinite(best);
                CHECK(mask.at(x, y) == covered);
                CHECK(image.at(x, y) == color);
                // With non-black colors the mask is exactly the non-background support.
                CHECK(covered == !(image.at(x, y) == Rgb{0, 0, 0}));
            }
        }
    }
}

TEST_CASE("mask coverage") {
    CHECK(mask_coverage(ConfidenceMask(10, 10)) == 0.0);
    CHECK(mask_coverage(ConfidenceMask(10, 10, true)) == 1.0);
    ConfidenceMask m(10, 10);
    for (int y = 2; y < 5; ++y) {
        for (int x = 6; x < 9; ++x) {
            m.set(x, y, true);
        }
    }
    CHECK(mask_coverage(m) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("cloud validation") {
    GuidancePointCloud cloud;
    cloud.points.push_back({{0, 0, 1}, {0.5, 0.5, 1.5}});
    CHECK_THROWS_AS(cloud.validate(), DataError);
    cloud.points[0].color.b = 1.0;
    CHECK_NOTHROW(cloud.validate());
    cloud.point_radius_px = 0.0;
    CHECK_THROWS_AS(cloud.validate(), DataError);
}
