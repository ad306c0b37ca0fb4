#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"

#include "bodyfit/ad/gradcheck.hpp"
#include "bodyfit/body_template.hpp"
#include "bodyfit/camera.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/regist_losses.hpp"
#include "bodyfit/synth.hpp"

using namespace bodyfit;

namespace {

const BodyTemplate& tpl() {
    static const BodyTemplate t = builtin_humanoid();
    return t;
}

BodyParams camera_pose() {
    BodyParams p = BodyParams::t_pose();
    p.scale = 200.0;
    p.translation = {256.0, 256.0};
    return p;
}

// Annotation whose pixels are exactly the projections under p.
SampleAnnotation exact_annotation(const BodyParams& p, const std::vector<int>& verts,
                                  bool with_depths) {
    const KeypointMap& map = KeypointMap::standard16();
    const PosedBody body = pose_body(tpl(), p);
    const Mat3<double> R = gram_schmidt(p.rotation_raw);

    SampleAnnotation a;
    a.id = "exact";
    a.width = a.height = 512;
    for (int v : verts) {
        const auto vp = view_point<double>(R, p.scale, p.translation, body.vertices[v]);
        a.dense.push_back({vp.image, v});
    }
    std::vector<double> depth(map.size());
    for (int k = 0; k < map.size(); ++k) {
        const auto vp =
            view_point<double>(R, p.scale, p.translation, body.joints[map.model_joint[k]]);
        a.keypoints.push_back({vp.image, true});
        depth[k] = vp.depth;
    }
    if (with_depths) {
        a.gan_depths.resize(map.size());
        for (int k = 0; k < map.size(); ++k) a.gan_depths[k] = depth[k] - depth[map.trunk_root];
    }
    return a;
}

BodyParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> A(-0.6, 0.6), S(0.8, 1.25), N(-0.2, 0.2);
    BodyParams p;
    for (auto& a : p.pose) a = {A(rng), A(rng), A(rng)};
    for (auto& s : p.scales) s = S(rng);
    p.rotation_raw = rodrigues(Vec3<double>{A(rng), A(rng), A(rng)});
    for (auto& m : p.rotation_raw.m) m += 0.1 * N(rng);
    p.scale = 150.0 + 100.0 * S(rng);
    p.translation = {256.0 + 30.0 * N(rng), 256.0 + 30.0 * N(rng)};
    return p;
}

}  // namespace

TEST_CASE("dense_loss: exact, single offset, mean convention") {
    const BodyParams p = camera_pose();
    SampleAnnotation a = exact_annotation(p, {0, 7, 123, 900}, false);
    CHECK(dense_loss(p, tpl(), a) == doctest::Approx(0.0).epsilon(1e-15));

    SampleAnnotation one = exact_annotation(p, {123}, false);
    one.dense[0].pixel.x += 3.0;
    one.dense[0].pixel.y += 4.0;
    CHECK(dense_loss(p, tpl(), one) == doctest::Approx(25.0).epsilon(1e-12));

    SampleAnnotation two = exact_annotation(p, {123, 400}, false);
    two.dense[0].pixel.x += 3.0;
    two.dense[0].pixel.y += 4.0;
    CHECK(dense_loss(p, tpl(), two) == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("dense_loss: empty correspondence list is a contract violation") {
    const BodyParams p = camera_pose();
    SampleAnnotation a = exact_annotation(p, {0}, false);
    a.dense.clear();
    CHECK_THROWS_AS(dense_loss(p, tpl(), a), ContractViolation);
}

TEST_CASE("keypoint_loss: exact fit, depth omission, per-term means") {
    const KeypointMap& map = KeypointMap::standard16();
    const BodyParams p = camera_pose();
    const int n = map.size();

    SampleAnnotation a = exact_annotation(p, {0}, true);
    CHECK(keypoint_loss(p, tpl(), a, map) == doctest::Approx(0.0).epsilon(1e-15));

    // 2D offset (3,4) on one of n visible keypoints.
    SampleAnnotation b = exact_annotation(p, {0}, false);
    b.keypoints[5].pos.x += 3.0;
    b.keypoints[5].pos.y += 4.0;
    CHECK(keypoint_loss(p, tpl(), b, map) == doctest::Approx(25.0 / n).epsilon(1e-12));

    // Same offset with depths present and exact: identical, the z term is 0.
    SampleAnnotation c = exact_annotation(p, {0}, true);
    c.keypoints[5].pos.x += 3.0;
    c.keypoints[5].pos.y += 4.0;
    CHECK(keypoint_loss(p, tpl(), c, map) == doctest::Approx(25.0 / n).epsilon(1e-12));

    // One depth off by 0.5, everything else exact.
    SampleAnnotation d = exact_annotation(p, {0}, true);
    d.gan_depths[8] += 0.5;
    CHECK(keypoint_loss(p, tpl(), d, map) == doctest::Approx(0.25 / n).epsilon(1e-12));
}

TEST_CASE("keypoint_loss: invisible joints are skipped; all-invisible warns") {
    const KeypointMap& map = KeypointMap::standard16();
    const BodyParams p = camera_pose();

    SampleAnnotation a = exact_annotation(p, {0}, false);
    a.keypoints[3].visible = false;
    a.keypoints[3].pos = {-1e6, 1e6};  // would dominate if counted
    CHECK(keypoint_loss(p, tpl(), a, map) == doctest::Approx(0.0).epsilon(1e-15));
    // The visible mean renormalizes: offset on one of (n-1) visible joints.
    a.keypoints[7].pos.x += 3.0;
    a.keypoints[7].pos.y += 4.0;
    CHECK(keypoint_loss(p, tpl(), a, map) ==
          doctest::Approx(25.0 / (map.size() - 1)).epsilon(1e-12));

    SampleAnnotation b = exact_annotation(p, {0}, true);
    for (auto& k : b.keypoints) k.visible = false;
    bool warned = false;
    CHECK(keypoint_loss(p, tpl(), b, map, &warned) == doctest::Approx(0.0));
    CHECK(warned);
}

TEST_CASE("scale_smoothness_loss: uniform scalings cost nothing") {
    std::array<double, BodyTemplate::kNumJoints> s{};
    s.fill(1.0);
    CHECK(scale_smoothness_loss(s, tpl()) == doctest::Approx(0.0));
    s.fill(0.7);
    CHECK(scale_smoothness_loss(s, tpl()) == doctest::Approx(0.0));
}

TEST_CASE("scale_smoothness_loss: one adjacent pair differing by 0.2 costs 0.04") {
    // Scale a whole subtree: the adjacency pairs are tree edges, so exactly
    // one pair straddles the cut.
    const int j = 4;
    std::array<bool, BodyTemplate::kNumJoints> inside{};
    inside[j] = true;
    for (int k = 0; k < BodyTemplate::kNumJoints; ++k)
        if (tpl().parents[k] >= 0 && inside[tpl().parents[k]]) inside[k] = true;

    int crossings = 0;
    for (const auto& [a, b] : tpl().adjacency)
        if (inside[a] != inside[b]) ++crossings;
    REQUIRE(crossings == 1);

    std::array<double, BodyTemplate::kNumJoints> s{};
    for (int k = 0; k < BodyTemplate::kNumJoints; ++k) s[k] = inside[k] ? 1.2 : 1.0;
    CHECK(scale_smoothness_loss(s, tpl()) == doctest::Approx(0.04).epsilon(1e-12));
}

TEST_CASE("joint_loss: rest pose baseline and hinge asymmetry") {
    const int hinges = (int)tpl().hinge_axes.size();
    REQUIRE(hinges > 0);

    std::array<Vec3<double>, BodyTemplate::kNumJoints> a{};
    CHECK(joint_loss(a, tpl()) == doctest::Approx((double)hinges).epsilon(1e-12));

    const auto& [j, axis] = tpl().hinge_axes.front();

    // Natural flexion projects negative on the hinge axis: exp(-0.5)^2 = e^-1.
    a[j] = -0.5 * axis;
    const double bend = joint_loss(a, tpl());
    CHECK(bend == doctest::Approx(0.25 + (hinges - 1) + std::exp(-1.0)).epsilon(1e-12));

    a[j] = 0.5 * axis;
    const double extend = joint_loss(a, tpl());
    CHECK(extend == doctest::Approx(0.25 + (hinges - 1) + std::exp(1.0)).epsilon(1e-12));
    CHECK(extend > bend);
}

TEST_CASE("det_loss: sign oracle and descent direction") {
    Mat3<double> plus = mat3_identity();
    CHECK(std::abs(det_loss(plus) - std::exp(-1.0)) < 1e-12);

    Mat3<double> minus = mat3_identity();
    minus(2, 2) = -1.0;
    CHECK(std::abs(det_loss(minus) - std::exp(1.0)) < 1e-12);

    // Raising the determinant lowers the loss.
    Mat3<double> shrunk = mat3_identity();
    shrunk(2, 2) = 0.9;
    CHECK(det_loss(shrunk) > det_loss(plus));
}

TEST_CASE("all five terms are non-negative at random configurations") {
    std::mt19937_64 rng(411);
    SynthConfig cfg;
    cfg.count = 4;
    cfg.dense_points = 80;
    cfg.truth_gan_depths = true;
    cfg.seed = 19;
    const KeypointMap& map = KeypointMap::standard16();
    const SynthDataset data = synth_dataset(tpl(), map, cfg);

    for (const auto& anno : data.samples) {
        for (int rep = 0; rep < 5; ++rep) {
            const BodyParams p = random_params(rng);
            CHECK(dense_loss(p, tpl(), anno) >= 0.0);
            CHECK(keypoint_loss(p, tpl(), anno, map) >= 0.0);
            CHECK(scale_smoothness_loss(p.scales, tpl()) >= 0.0);
            CHECK(joint_loss(p.pose, tpl()) >= 0.0);
            CHECK(det_loss(p.rotation_raw) >= 0.0);
        }
    }
}

TEST_CASE("evaluate_registration agrees with the single-term wrappers") {
    std::mt19937_64 rng(77);
    SynthConfig cfg;
    cfg.count = 1;
    cfg.dense_points = 60;
    cfg.truth_gan_depths = true;
    cfg.seed = 5;
    const KeypointMap& map = KeypointMap::standard16();
    const SampleAnnotation anno = synth_dataset(tpl(), map, cfg).samples[0];

    for (int rep = 0; rep < 3; ++rep) {
        const BodyParams p = random_params(rng);
        const auto flat = p.flatten();
        const auto view = ParamsView<double>::from_flat(flat);
        const auto terms = evaluate_registration<double>(tpl(), view, anno, map);
        CHECK(terms.dense == doctest::Approx(dense_loss(p, tpl(), anno)).epsilon(1e-12));
        CHECK(terms.kp == doctest::Approx(keypoint_loss(p, tpl(), anno, map)).epsilon(1e-12));
        CHECK(terms.scale == doctest::Approx(scale_smoothness_loss(p.scales, tpl())).epsilon(1e-12));
        CHECK(terms.joint == doctest::Approx(joint_loss(p.pose, tpl())).epsilon(1e-12));
        CHECK(terms.det == doctest::Approx(det_loss(p.rotation_raw)).epsilon(1e-12));
    }
}

TEST_CASE("weighted total gradient passes the finite-difference check") {
    std::mt19937_64 rng(1234);
    SynthConfig cfg;
    cfg.count = 3;
    cfg.dense_points = 40;
    cfg.truth_gan_depths = true;
    cfg.seed = 3;
    const KeypointMap& map = KeypointMap::standard16();
    const SynthDataset data = synth_dataset(tpl(), map, cfg);
    const RegistWeights w;

    for (const auto& anno : data.samples) {
        const auto x = random_params(rng).flatten();
        const auto f = [&](ad::Tape&, std::span<const ad::Value> v) {
            const auto view = ParamsView<ad::Value>::from_flat(v);
            return evaluate_registration<ad::Value>(tpl(), view, anno, map).total(w);
        };
        const auto res = ad::check_gradient(f, x, 1e-5);
        CHECK(res.nonfinite_count == 0);
        CHECK(res.max_rel_err < 1e-4);
    }
}
