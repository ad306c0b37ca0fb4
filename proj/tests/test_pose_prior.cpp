#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"

#include "bodyfit/body_template.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/pose_prior.hpp"
#include "bodyfit/prior_train.hpp"
#include "bodyfit/synth.hpp"

using namespace bodyfit;
namespace fs = std::filesystem;

namespace {

const BodyTemplate& tpl() {
    static const BodyTemplate t = builtin_humanoid();
    return t;
}

const KeypointMap& map16() { return KeypointMap::standard16(); }

Pose2D family_pose(const PriorSample& s) {
    Pose2D p;
    p.u = s.u;
    p.visibility.assign(s.u.size(), true);
    return p;
}

Mlp zero_critic() {
    const MlpSpec spec = MlpSpec::critic(map16().size(), 8, 2);
    std::mt19937_64 rng(1);
    Mlp D = Mlp::init(spec, rng);
    for (double& w : D.weights) w = 0.0;
    return D;
}

}  // namespace

TEST_CASE("normalize_pose: unit trunk, pelvis at the origin") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-100.0, 100.0);
    std::vector<Vec2<double>> kp(map16().size());
    for (auto& p : kp) p = {U(rng), U(rng)};
    const std::vector<bool> vis(kp.size(), true);

    const Pose2D pose = normalize_pose(kp, vis, map16());
    CHECK(pose.u[map16().trunk_root].x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(pose.u[map16().trunk_root].y == doctest::Approx(0.0).epsilon(1e-12));
    const double trunk = std::sqrt(squared_norm(pose.u[map16().trunk_top]));
    CHECK(trunk == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pose.all_visible());
    CHECK((int)pose.flat().size() == 2 * map16().size());

    // Degenerate trunk.
    std::vector<Vec2<double>> flat_kp(map16().size(), Vec2<double>{5.0, 5.0});
    CHECK_THROWS_AS(normalize_pose(flat_kp, vis, map16()), DegenerateInput);
}

TEST_CASE("rotate_project: axis conventions and size contract") {
    Pose2D u;
    u.u = {{1.0, 2.0}, {0.5, -1.0}};
    u.visibility = {true, true};
    const std::vector<double> z{0.25, -0.75};

    const auto front = rotate_project<double>(u, z, 0.0);
    CHECK(front[0].x == doctest::Approx(1.0));
    CHECK(front[0].y == doctest::Approx(2.0));

    const auto side = rotate_project<double>(u, z, M_PI / 2.0);
    CHECK(side[0].x == doctest::Approx(0.25));  // x' = z at 90 degrees
    CHECK(side[1].x == doctest::Approx(-0.75));
    CHECK(side[0].y == doctest::Approx(2.0));   // y never changes

    const std::vector<double> short_z{0.1};
    CHECK_THROWS_AS(rotate_project<double>(u, short_z, 0.3), ContractViolation);
}

TEST_CASE("geometric_losses: hand-computed single-bone oracle") {
    SkeletonStats stats;
    stats.bones = {1};
    stats.bone_parent = {0};
    stats.ratio = {0.5};
    stats.trunk_root = 0;
    stats.trunk_top = 2;

    Pose2D u;
    u.u = {{0.0, 0.0}, {1.3, 0.0}, {0.0, 2.0}};
    u.visibility = {true, true, true};
    const std::vector<double> z{0.0, 0.0, 0.0};

    // trunk = 2, bone = 1.3: L_ratio = (1.3/2 - 0.5)^2.
    const auto [ratio, sym] = geometric_losses<double>(u, z, stats);
    CHECK(ratio == doctest::Approx(0.0225).epsilon(1e-12));
    CHECK(sym == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("geometric_losses: symmetry pair oracle and degenerate trunk") {
    SkeletonStats stats;
    stats.bones = {1, 3};
    stats.bone_parent = {0, 2};
    stats.ratio = {0.5, 0.5};
    stats.sym_bones = {{1, 3}};
    stats.trunk_root = 0;
    stats.trunk_top = 2;

    Pose2D u;
    u.u = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}, {1.5, 2.0}};
    u.visibility.assign(4, true);
    std::vector<double> z(4, 0.0);

    // Bone lengths 1 and 1.5 in one symmetric pair: L_sym = 0.25.
    const auto [ratio, sym] = geometric_losses<double>(u, z, stats);
    CHECK(sym == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ratio == doctest::Approx(0.0 + std::pow(1.0 / 2.0 - 0.5, 2) +
                                   std::pow(1.5 / 2.0 - 0.5, 2))
                       .epsilon(1e-12));

    u.u = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 0.0}, {1.5, 2.0}};  // trunk collapses
    CHECK_THROWS_AS((geometric_losses<double>(u, z, stats)), DegenerateInput);
}

TEST_CASE("geometric_losses: true family depths are the optimum") {
    const SkeletonStats stats = SkeletonStats::from_template(tpl(), map16());

    // Without jitter only knees and elbows move; every keypoint bone and the
    // trunk keep their rest lengths, so the true depths are exact.
    PriorFamilyConfig rigid;
    rigid.jitter = 0.0;
    for (const auto& s : make_prior_family(tpl(), map16(), 10, 5, rigid)) {
        const Pose2D u = family_pose(s);
        const auto [ratio, sym] = geometric_losses<double>(u, s.z, stats);
        CHECK(ratio < 1e-9);
        CHECK(sym < 1e-9);

        // Breaking one depth breaks the geometry.
        std::vector<double> bad = s.z;
        bad[4] += 0.4;
        const auto [ratio2, sym2] = geometric_losses<double>(u, bad, stats);
        CHECK(ratio2 + sym2 > 1e-4);
    }

    // With jitter the lengths wander a little; the losses stay small.
    for (const auto& s : make_prior_family(tpl(), map16(), 10, 5)) {
        const auto [ratio, sym] = geometric_losses<double>(family_pose(s), s.z, stats);
        CHECK(ratio < 0.1);
        CHECK(sym < 0.1);
    }
}

TEST_CASE("adv_losses: a zero critic scores log(1/2) everywhere") {
    const Mlp D = zero_critic();
    const auto family = make_prior_family(tpl(), map16(), 6, 9);
    std::vector<Pose2D> real;
    std::vector<std::vector<Vec2<double>>> fake;
    for (const auto& s : family) {
        real.push_back(family_pose(s));
        fake.push_back(rotate_project<double>(real.back(), s.z, 1.0));
    }

    const auto [adv_g, adv_d] = adv_losses(D, real, fake);
    CHECK(adv_g == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(adv_d == doctest::Approx(2.0 * std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("generate_depths and fill_gan_depths: shapes and root-centering") {
    std::mt19937_64 rng(15);
    const Mlp G = Mlp::init(MlpSpec::lifter(map16().size(), 16, 2), rng);

    const auto family = make_prior_family(tpl(), map16(), 3, 21);
    const Pose2D u = family_pose(family[0]);
    const auto z = generate_depths(G, u);
    REQUIRE((int)z.size() == u.size());
    for (double v : z) CHECK(std::isfinite(v));

    SynthConfig cfg;
    cfg.count = 3;
    cfg.dense_points = 30;
    cfg.seed = 27;
    SynthDataset data = synth_dataset(tpl(), map16(), cfg);
    REQUIRE(!data.samples[0].has_gan_depths());

    const int filled = fill_gan_depths(G, map16(), data.samples);
    CHECK(filled == 3);
    for (const auto& anno : data.samples) {
        REQUIRE((int)anno.gan_depths.size() == map16().size());
        CHECK(anno.gan_depths[map16().trunk_root] == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("train_prior: deterministic, finite, shape-preserving") {
    const auto family = make_prior_family(tpl(), map16(), 60, 33);
    std::vector<Pose2D> data;
    for (const auto& s : family) data.push_back(family_pose(s));
    const SkeletonStats stats = SkeletonStats::from_template(tpl(), map16());

    PriorConfig cfg;
    cfg.max_steps = 8;
    cfg.batch_size = 16;
    cfg.hidden = 16;
    cfg.layers = 2;
    cfg.eval_every = 4;
    cfg.eval_subset = 16;
    cfg.seed = 12;

    const PriorTrainResult a = train_prior(data, stats, cfg);
    const PriorTrainResult b = train_prior(data, stats, cfg);
    CHECK(a.G.weights == b.G.weights);
    CHECK(a.D.weights == b.D.weights);
    REQUIRE(!a.history.empty());
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].adv_g == b.history[i].adv_g);
        CHECK(std::isfinite(a.history[i].adv_g));
        CHECK(std::isfinite(a.history[i].ratio));
        CHECK(a.history[i].ratio >= 0.0);
        CHECK(a.history[i].sym >= 0.0);
    }
    CHECK(a.G.spec.widths.front() == 2 * map16().size());
    CHECK(a.G.spec.widths.back() == map16().size());
    CHECK(a.D.spec.widths.back() == 1);
}

TEST_CASE("pose dataset and mlp files round trip") {
    const fs::path dir = fs::temp_directory_path() / "bodyfit_prior_io";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Two clean poses, one with an invisible joint, one degenerate: loader
    // keeps only the clean ones.
    SynthConfig cfg;
    cfg.count = 2;
    cfg.dense_points = 25;
    cfg.seed = 39;
    const SynthDataset data = synth_dataset(tpl(), map16(), cfg);
    std::vector<std::vector<Keypoint2D>> poses;
    for (const auto& s : data.samples) poses.push_back(s.keypoints);
    poses.push_back(data.samples[0].keypoints);
    poses.back()[2].visible = false;
    poses.push_back(std::vector<Keypoint2D>(map16().size(), Keypoint2D{{1.0, 1.0}, true}));

    const fs::path pf = dir / "poses.jsonl";
    save_pose_dataset(poses, pf.string());
    const auto loaded = load_pose_dataset(pf.string(), map16());
    CHECK(loaded.size() == 2);
    for (const auto& p : loaded) CHECK(p.all_visible());

    std::mt19937_64 rng(44);
    const Mlp G = Mlp::init(MlpSpec::lifter(map16().size(), 16, 3), rng);
    const fs::path mf = dir / "g.json";
    save_mlp(G, mf.string());
    const Mlp back = load_mlp(mf.string());
    CHECK(back.spec.widths == G.spec.widths);
    CHECK(back.weights == G.weights);
    CHECK(back.spec.logistic_output == G.spec.logistic_output);

    CHECK_THROWS_AS(load_mlp((dir / "absent.json").string()), IoError);
}

TEST_CASE("depth_sign_accuracy: bounded, deterministic, margin-sensitive") {
    const auto eval = make_prior_family(tpl(), map16(), 50, 51);
    std::mt19937_64 rng(4);
    const Mlp G = Mlp::init(MlpSpec::lifter(map16().size(), 16, 2), rng);

    const double acc = depth_sign_accuracy(G, eval, map16());
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(acc == depth_sign_accuracy(G, eval, map16()));

    // A huge margin leaves no scoreable joints.
    CHECK_THROWS_AS(depth_sign_accuracy(G, eval, map16(), 1e9), DegenerateInput);
}
