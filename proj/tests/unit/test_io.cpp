#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "splatfix/error.hpp"
#include "splatfix/io.hpp"
#include "splatfix/rng.hpp"

using namespace splatfix;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "splatfix_test_io";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GaussianSet float_set(Rng& rng, int n) {
    GaussianSet set;
    for (int i = 0; i < n; ++i) {
        GaussianParams p;
        for (double& v : p) {
            v = static_cast<float>(rng.normal());
        }
        set.push_back(Gaussian::from_params(p));
    }
    return set;
}

std::string camera_json(const std::string& qw) {
    return R"([{"id": "a", "role": "reference", "image": "a.png", "width": 64, "height": 62,
      "fx": 50, "fy": 51, "cx": 31.5, "cy": 30.5, "qw": )" +
           qw + R"(, "qx": 0, "qy": 0, "qz": 0, "tx": 0.1, "ty": 0.2, "tz": 3}])";
}

}  // namespace

TEST_CASE("checkpoint round trip is bit-exact") {
    Rng rng(1);
    const GaussianSet set = float_set(rng, 37);
    const fs::path p = scratch("ck.splat");
    io::write_checkpoint(p, set);
    CHECK(fs::file_size(p) == 8 + 4 + 8 + 37 * 14 * 4);
    CHECK(io::read_checkpoint(p).same_gaussians(set));

    io::write_checkpoint(p, GaussianSet{});
    CHECK(io::read_checkpoint(p).empty());
}

TEST_CASE("checkpoint errors") {
    Rng rng(2);
    const fs::path p = scratch("bad.splat");
    io::write_checkpoint(p, float_set(rng, 2));
    std::string bytes = read_file(p);

    std::string wrong_version = bytes;
    wrong_version[8] = 2;
    write_file(p, wrong_version);
    CHECK_THROWS_AS(io::read_checkpoint(p), DataError);

    write_file(p, bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(io::read_checkpoint(p), DataError);

    std::string magic = bytes;
    magic[0] = 'X';
    write_file(p, magic);
    CHECK_THROWS_AS(io::read_checkpoint(p), DataError);
    CHECK_THROWS_AS(io::read_checkpoint(scratch("missing.splat")), DataError);
}

TEST_CASE("PNG round trip on the 8-bit grid") {
    Rng rng(3);
    ColorImage img(7, 5);
    for (double& v : img.data()) {
        v = static_cast<double>(rng.uniform_int(256)) / 255.0;
    }
    const fs::path p = scratch("img.png");
    io::write_png(p, img);
    CHECK(io::read_png(p) == img);
    CHECK_THROWS_AS(io::read_png(scratch("missing.png")), DataError);
}

TEST_CASE("PLY ascii and binary") {
    const fs::path a = scratch("ascii.ply");
    write_file(a,
               "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty float x\nproperty float y\n"
               "property float z\nproperty float nx\nproperty uchar red\nproperty uchar green\n"
               "property uchar blue\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n"
               "1 2 3 9 255 0 51\n-1 0.5 0 9 0 255 0\n");
    const pcrender::GuidancePointCloud c = io::read_ply(a);
    REQUIRE(c.points.size() == 2);
    CHECK(c.points[0].position.y == 2.0);
    CHECK(c.points[0].color.r == 1.0);
    CHECK(c.points[0].color.b == doctest::Approx(0.2));
    CHECK(c.points[1].position.x == -1.0);

    const fs::path b = scratch("binary.ply");
    io::write_ply(b, c);
    const pcrender::GuidancePointCloud d = io::read_ply(b);
    REQUIRE(d.points.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(d.points[i].position.x == c.points[i].position.x);
        CHECK(d.points[i].position.z == c.points[i].position.z);
        CHECK(d.points[i].color.g == c.points[i].color.g);
    }

    write_file(a, "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nend_header\n1\n");
    CHECK_THROWS_AS(io::read_ply(a), DataError);
}

TEST_CASE("cameras parse and round trip") {
    const fs::path p = scratch("cameras.json");
    write_file(p, camera_json("1"));
    const auto cams = io::read_cameras(p);
    REQUIRE(cams.size() == 1);
    CHECK(cams[0].view.id == "a");
    CHECK(cams[0].role == "reference");
    CHECK(cams[0].view.role == ViewRole::reference);
    CHECK(cams[0].view.intrinsics.fy == 51.0);
    CHECK(cams[0].view.intrinsics.height == 62);
    CHECK(*cams[0].image == "a.png");

    const fs::path q = scratch("cameras2.json");
    io::write_cameras(q, cams);
    const auto again = io::read_cameras(q);
    REQUIRE(again.size() == 1);
    CHECK(again[0].view.intrinsics.cx == cams[0].view.intrinsics.cx);
    CHECK(again[0].view.pose.translation.z == cams[0].view.pose.translation.z);
    CHECK(again[0].view.pose.rotation.w == cams[0].view.pose.rotation.w);
    io::write_cameras(scratch("cameras3.json"), again);
    CHECK(read_file(q) == read_file(scratch("cameras3.json")));
}

TEST_CASE("camera quaternion tolerance") {
    const fs::path p = scratch("cameras_q.json");
    write_file(p, camera_json("1.00001"));
    const auto cams = io::read_cameras(p);
    CHECK(cams[0].view.pose.rotation.norm() == doctest::Approx(1.0).epsilon(1e-12));
    write_file(p, camera_json("1.01"));
    CHECK_THROWS_AS(io::read_cameras(p), DataError);
}

TEST_CASE("camera errors name the field") {
    const fs::path p = scratch("cameras_bad.json");
    write_file(p, R"([{"id": "a", "role": "reference", "width": 8, "height": 8}])");
    try {
        io::read_cameras(p);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("fx") != std::string::npos);
    }
    write_file(p, "{not json");
    CHECK_THROWS_AS(io::read_cameras(p), DataError);
}

TEST_CASE("key-value config") {
    const auto c = io::KeyValueConfig::parse("# comment\ntop = 1\n[train]\nalpha = 0.5\nname = \"x y\"\n"
                                             "flag = true\n");
    CHECK(c.get_int("top", 0) == 1);
    CHECK(c.get_double("train.alpha", 0) == 0.5);
    CHECK(c.get_string("train.name", "") == "x y");
    CHECK(c.get_bool("train.flag", false));
    CHECK(c.get_double("train.missing", 7.0) == 7.0);
    CHECK_THROWS_AS(c.get_double("train.name", 0), DataError);
    CHECK_THROWS_AS(c.require_known({"top"}), DataError);
    CHECK_NOTHROW(c.require_known({"top", "train.alpha", "train.name", "train.flag"}));

    io::KeyValueConfig d = c;
    d.set_override("train.alpha=0.9");
    CHECK(d.get_double("train.alpha", 0) == 0.9);
    CHECK_THROWS_AS(d.set_override("no-equals"), UsageError);

    const auto e = io::KeyValueConfig::parse(d.serialize());
    CHECK(e.values() == d.values());
    CHECK_THROWS_AS(io::KeyValueConfig::parse("just words\n"), DataError);
}
