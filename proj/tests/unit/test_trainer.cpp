#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "splatfix/cli.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/io.hpp"
#include "splatfix/optimizer.hpp"
#include "splatfix/trainer.hpp"

using namespace splatfix;
using namespace splatfix::trainer;
namespace fs = std::filesystem;

namespace {

// Small synthetic bundle shared by the tests below.
const cli::SceneBundle& small_scene() {
    static const cli::SceneBundle scene = [] {
        const fs::path dir = fs::temp_directory_path() / "splatfix_test_trainer_scene";
        fs::remove_all(dir);
        cli::SynthParams p;
        p.gaussians = 40;
        p.size = 24;
        p.references = 3;
        p.novel = 4;
        p.heldout = 2;
        p.seed = 3;
        cli::cmd_synth(dir, p);
        return cli::load_scene(dir);
    }();
    return scene;
}

TrainConfig small_config(std::int64_t it_s, std::int64_t it_e) {
    TrainConfig c;
    c.it_s = it_s;
    c.it_e = it_e;
    c.seed = 5;
    c.densify.from = 1000000;
    return c;
}

Trainer small_trainer(const TrainConfig& cfg) {
    const cli::SceneBundle& s = small_scene();
    Trainer t(cfg, initialize_from_points(*s.cloud), s.reference, s.novel);
    t.set_point_cloud(*s.cloud);
    t.set_heldout(s.heldout);
    return t;
}

CameraView front_view(int size) {
    CameraView v;
    v.id = "front";
    v.role = ViewRole::reference;
    v.intrinsics = {1.2 * size, 1.2 * size, (size - 1) / 2.0, (size - 1) / 2.0, size, size};
    v.pose = look_at({0, 0, -3}, {0, 0, 0}, {0, -1, 0});
    return v;
}

}  // namespace

TEST_CASE("it_s = it_e = 0 leaves the scene unchanged") {
    Trainer t = small_trainer(small_config(0, 0));
    const GaussianSet before = t.gaussians();
    fixer::IdentityFixer f;
    const TrainReport r = t.run(f);
    CHECK(r.steps.empty());
    CHECK(t.gaussians().same_gaussians(before));
}

TEST_CASE("it_e = it_s: the mixed phase is a no-op") {
    Trainer t = small_trainer(small_config(20, 20));
    t.warmup();
    const GaussianSet after_warmup = t.gaussians();
    fixer::IdentityFixer f;
    t.fixing_round(f);
    t.mixed_phase();
    CHECK(t.gaussians().same_gaussians(after_warmup));
    CHECK(t.iteration() == 20);
}

TEST_CASE("constant-color fit decreases over windows") {
    Rng rng(1);
    std::vector<Gaussian> gs;
    for (int i = 0; i < 10; ++i) {
        Gaussian g;
        g.position = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2)};
        g.log_scale = {std::log(0.4), std::log(0.4), std::log(0.4)};
        g.opacity_logit = logit(0.5);
        g.color = {rng.uniform(), rng.uniform(), rng.uniform()};
        gs.push_back(g);
    }
    CameraView v = front_view(16);
    v.target = ColorImage(16, 16, {0.8, 0.3, 0.1});
    TrainConfig c = small_config(200, 200);
    Trainer t(c, GaussianSet(gs), {v}, {});
    t.warmup();
    double prev = std::numeric_limits<double>::infinity();
    for (int w = 0; w < 10; ++w) {
        double sum = 0.0;
        for (int k = 0; k < 20; ++k) {
            sum += t.steps()[20 * w + k].l2;
        }
        CHECK(sum < prev);
        prev = sum;
    }
}

TEST_CASE("training is deterministic") {
    TrainConfig c = small_config(30, 80);
    c.densify.from = 20;
    c.densify.interval = 20;
    c.densify.grad_threshold = 1e-7;
    Trainer a = small_trainer(c), b = small_trainer(c);
    fixer::IdentityFixer f;
    const TrainReport ra = a.run(f), rb = b.run(f);
    std::ostringstream la, lb;
    write_loss_csv(la, ra.steps);
    write_loss_csv(lb, rb.steps);
    CHECK(la.str() == lb.str());
    CHECK(a.gaussians().same_gaussians(b.gaussians()));
}

TEST_CASE("fixing round targets and weights") {
    const cli::SceneBundle& s = small_scene();
    SUBCASE("identity fixer targets equal artifact renders") {
        Trainer t = small_trainer(small_config(10, 20));
        t.warmup();
        fixer::IdentityFixer f;
        const auto out = t.fixing_round(f);
        CHECK(out.size() == s.novel.size());
        for (const CameraView& v : t.novel_views()) {
            REQUIRE(v.target);
            CHECK(*v.target == splat::render(t.gaussians(), v, t.config().raster).image);
        }
    }
    SUBCASE("oracle fixer targets equal ground truth") {
        Trainer t = small_trainer(small_config(10, 20));
        fixer::OracleFixer f(s.novel_images);
        t.fixing_round(f);
        for (const CameraView& v : t.novel_views()) {
            CHECK(*v.target == s.novel_images.at(v.id));
        }
    }
    SUBCASE("beta = 1 gives all-ones weights") {
        TrainConfig c = small_config(10, 20);
        c.beta = 1.0;
        Trainer t = small_trainer(c);
        fixer::IdentityFixer f;
        t.fixing_round(f);
        for (const CameraView& v : t.novel_views()) {
            REQUIRE(v.weight_map);
            for (double w : v.weight_map->values()) {
                CHECK(w == 1.0);
            }
        }
    }
    SUBCASE("empty point cloud gives beta everywhere") {
        TrainConfig c = small_config(10, 20);
        c.beta = 0.4;
        Trainer t = small_trainer(c);
        t.set_point_cloud({});
        fixer::IdentityFixer f;
        const auto out = t.fixing_round(f);
        CHECK(out[0].mask_coverage == 0.0);
        for (double w : t.novel_views()[0].weight_map->values()) {
            CHECK(w == 0.4);
        }
    }
    SUBCASE("fixer failure falls back to the artifact") {
        Trainer t = small_trainer(small_config(10, 20));
        fixer::OracleFixer f({});
        const auto out = t.fixing_round(f);
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i].fell_back);
            CHECK(*t.novel_views()[i].target ==
                  splat::render(t.gaussians(), t.novel_views()[i], t.config().raster).image);
        }
    }
}

TEST_CASE("alpha = 1 continues reference-only training") {
    TrainConfig c = small_config(15, 60);
    c.alpha = 1.0;
    Trainer a = small_trainer(c);
    fixer::IdentityFixer f;
    a.run(f);

    // Replay the same view sequence as plain reference steps.
    Trainer b = small_trainer(c);
    b.warmup();
    for (std::size_t k = 15; k < a.steps().size(); ++k) {
        const std::string& id = a.steps()[k].view_id;
        CHECK(id.rfind("ref", 0) == 0);
        for (const CameraView& v : b.references()) {
            if (v.id == id) {
                b.train_step(v, "mixed");
            }
        }
    }
    REQUIRE(a.steps().size() == b.steps().size());
    for (std::size_t k = 0; k < a.steps().size(); ++k) {
        CHECK(a.steps()[k].loss == b.steps()[k].loss);
    }
    CHECK(a.gaussians().same_gaussians(b.gaussians()));
}

TEST_CASE("densify and prune") {
    TrainConfig c = small_config(5, 5);
    SUBCASE("inert thresholds leave the set unchanged") {
        c.densify.grad_threshold = std::numeric_limits<double>::infinity();
        c.densify.prune_opacity = 0.0;
        Trainer t = small_trainer(c);
        t.warmup();
        const GaussianSet before = t.gaussians();
        t.densify_prune();
        CHECK(t.gaussians().same_gaussians(before));
    }
    SUBCASE("one Gaussian above the clone threshold adds exactly one") {
        // Only the first Gaussian is visible from the single view.
        CameraView v = front_view(16);
        v.target = ColorImage(16, 16, {1, 0, 0});
        Gaussian g;
        g.position = {0.1, 0.05, 0};  // off-center, so the 2D mean gradient is nonzero
        g.color = {0.5, 0.5, 0.5};
        g.log_scale = {std::log(0.2), std::log(0.2), std::log(0.2)};
        g.opacity_logit = logit(0.5);
        Gaussian hidden = g;
        hidden.position = {0, 0, -10};
        c.densify.grad_threshold = 0.0;
        Trainer t(c, GaussianSet({g, hidden}), {v}, {});
        t.train_step(v, "warmup");
        t.densify_prune();
        CHECK(t.gaussians().size() == 3);
        CHECK(t.gaussians()[2].color == t.gaussians()[0].color);
    }
    SUBCASE("pruning everything leaves an empty scene") {
        c.densify.prune_opacity = 0.999;
        Trainer t = small_trainer(c);
        t.densify_prune();
        CHECK(t.gaussians().empty());
        const CameraView& v = small_scene().reference[0];
        CHECK(splat::render(t.gaussians(), v, c.raster).image == ColorImage(24, 24));
    }
}

TEST_CASE("initialization from points") {
    pcrender::GuidancePointCloud cloud;
    cloud.points = {{{0, 0, 0}, {1, 0, 0}}, {{1, 0, 0}, {0, 1, 0}}, {{0, 2, 0}, {0, 0, 1}}};
    InitConfig ic;
    ic.neighbours = 1;
    const GaussianSet s = initialize_from_points(cloud, ic);
    REQUIRE(s.size() == 3);
    CHECK(s[0].scale().x == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s[2].scale().y == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(s[1].color.g == 1.0);
    CHECK(s[0].opacity() == doctest::Approx(0.1).epsilon(1e-6));
}

TEST_CASE("configuration keys round trip") {
    TrainConfig c;
    c.alpha = 0.55;
    c.densify.grad_threshold = 3.25e-7;
    c.raster.background = {0.1, 0.2, 0.3};
    const TrainConfig d = TrainConfig::from_config(c.to_config());
    CHECK(d.alpha == 0.55);
    CHECK(d.densify.grad_threshold == 3.25e-7);
    CHECK(d.raster.background.b == 0.3);
    CHECK(d.to_config().values() == c.to_config().values());
    const io::KeyValueConfig kv = c.to_config();
    for (const auto& [k, v] : kv.values()) {
        CHECK(TrainConfig::keys().count(k) == 1);
    }
    c.it_s = 10;
    c.it_e = 5;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("Adam moves against the gradient and keeps rotations unit") {
    LearningRates lr;
    Adam adam(lr);
    Gaussian g;
    g.rotation = Quaternion{1, 0.2, 0, 0}.normalized();
    GaussianSet set({g});
    set.grads()[0][param::position] = 1.0;
    set.grads()[0][param::rotation + 1] = -1.0;
    set.grads()[0][param::color] = -1.0;
    adam.step(set, 1);
    CHECK(set[0].position.x < 0.0);
    CHECK(set[0].color.r > 0.0);
    CHECK(set[0].rotation.norm() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(set.grads()[0][param::position] == 0.0);
    CHECK(lr.position_at(0) == doctest::Approx(1.6e-4));
    CHECK(lr.position_at(lr.position_max_steps) == doctest::Approx(1.6e-6));
}
