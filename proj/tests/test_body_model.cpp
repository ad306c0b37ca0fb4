#include <cmath>
#include <cstdio>
#include <random>
#include <string>

#include "doctest.h"

#include "bodyfit/ad/gradcheck.hpp"
#include "bodyfit/body_model.hpp"
#include "bodyfit/body_template.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/keypoints.hpp"

using namespace bodyfit;

namespace {

const BodyTemplate& tpl() {
    static BodyTemplate t = builtin_humanoid();
    return t;
}

std::array<Mat3<double>, BodyTemplate::kNumJoints> identity_rotations() {
    std::array<Mat3<double>, BodyTemplate::kNumJoints> R;
    R.fill(mat3_identity());
    return R;
}

double dist(const Vec3<double>& a, const Vec3<double>& b) { return norm(a - b); }

}  // namespace

TEST_CASE("template: builtin humanoid validates with default vertex count") {
    const auto& t = tpl();
    CHECK(t.n_vertices() == 1730);
    CHECK_NOTHROW(t.validate());
    for (const auto& row : t.skin_weights) {
        double s = 0.0;
        for (auto& [j, w] : row) {
            CHECK(w >= 0.0);
            s += w;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(t.vertex_part.size() == t.vertices.size());
    for (int i = 0; i < t.n_vertices(); ++i) {
        CHECK(t.vertex_part[i] >= 0);
        CHECK(t.vertex_part[i] < BodyTemplate::kNumJoints);
        CHECK(t.vertex_uv[i].x >= 0.0);
        CHECK(t.vertex_uv[i].x <= 1.0);
        CHECK(t.vertex_uv[i].y >= 0.0);
        CHECK(t.vertex_uv[i].y <= 1.0);
    }
}

TEST_CASE("fk: rest pose puts joints at cumulative rest offsets") {
    const auto& t = tpl();
    std::array<double, 24> S;
    S.fill(1.0);
    auto posed = forward_kinematics<double>(t, identity_rotations(), S);
    auto rest = t.rest_joints();
    for (int j = 0; j < 24; ++j) CHECK(dist(posed.joints[j], rest[j]) < 1e-12);
}

TEST_CASE("fk: scaling one segment doubles its bone only") {
    const auto& t = tpl();
    std::array<double, 24> S;
    S.fill(1.0);
    const int k = 5;  // right knee segment
    S[k] = 2.0;
    auto posed = forward_kinematics<double>(t, identity_rotations(), S);
    auto rest = t.rest_joints();
    for (int j = 1; j < 24; ++j) {
        const double len = dist(posed.joints[j], posed.joints[t.parents[j]]);
        const double rest_len = dist(rest[j], rest[t.parents[j]]);
        CHECK(len == doctest::Approx((j == k ? 2.0 : 1.0) * rest_len).epsilon(1e-12));
    }
}

TEST_CASE("fk: root rotation turns the whole skeleton") {
    const auto& t = tpl();
    std::array<double, 24> S;
    S.fill(1.0);
    auto R = identity_rotations();
    R[0] = rodrigues(Vec3<double>{0.0, 0.0, M_PI / 2});
    auto posed = forward_kinematics<double>(t, R, S);
    auto rest = t.rest_joints();
    const Mat3<double> Rz = rodrigues(Vec3<double>{0.0, 0.0, M_PI / 2});
    for (int j = 0; j < 24; ++j) {
        const Vec3<double> expect = Rz * rest[j];  // root sits at the origin
        CHECK(dist(posed.joints[j], expect) < 1e-9);
    }
}

TEST_CASE("fk: bone length equals S_j * |rest_offset_j| over 1000 random scales") {
    const auto& t = tpl();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    std::uniform_real_distribution<double> A(-1.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        std::array<double, 24> S;
        for (auto& s : S) s = U(rng);
        auto R = identity_rotations();
        for (auto& r : R) r = rodrigues(Vec3<double>{A(rng), A(rng), A(rng)});
        auto posed = forward_kinematics<double>(t, R, S);
        for (int j = 1; j < 24; ++j) {
            const double len = dist(posed.joints[j], posed.joints[t.parents[j]]);
            CHECK(len == doctest::Approx(S[j] * norm(t.rest_offsets[j])).epsilon(1e-9));
        }
    }
}

TEST_CASE("fk: non-positive scale rejected") {
    const auto& t = tpl();
    std::array<double, 24> S;
    S.fill(1.0);
    S[3] = 0.0;
    CHECK_THROWS_AS((void)forward_kinematics<double>(t, identity_rotations(), S),
                    ContractViolation);
}

TEST_CASE("skin: rest pose reproduces template vertices") {
    const auto& t = tpl();
    auto body = pose_body(t, BodyParams::t_pose());
    for (int i = 0; i < t.n_vertices(); ++i)
        CHECK(dist(body.vertices[i], t.vertices[i]) < 1e-12);
}

TEST_CASE("skin: single-weight vertex follows its joint rigidly") {
    BodyTemplate t = tpl();
    t.skin_weights[0] = {{4, 1.0}};  // pin vertex 0 to the left knee joint
    std::array<double, 24> S;
    S.fill(1.0);
    auto R = identity_rotations();
    R[4] = rodrigues(Vec3<double>{0.4, -0.2, 0.7});
    R[0] = rodrigues(Vec3<double>{0.1, 0.2, -0.3});
    auto posed = forward_kinematics<double>(t, R, S);
    auto rest = t.rest_joints();
    const Vec3<double> direct = posed.world[4].apply(t.vertices[0] - rest[4]);
    const Vec3<double> skinned = skin_vertex(t, posed, rest, 0);
    CHECK(dist(direct, skinned) < 1e-12);
}

TEST_CASE("skin: half/half blend moves a vertex by half the translation") {
    BodyTemplate t = tpl();
    t.skin_weights[0] = {{4, 0.5}, {5, 0.5}};
    std::array<double, 24> S;
    S.fill(1.0);
    auto posed = forward_kinematics<double>(t, identity_rotations(), S);
    auto rest = t.rest_joints();
    const Vec3<double> before = skin_vertex(t, posed, rest, 0);
    const Vec3<double> d{0.3, -0.1, 0.2};
    posed.world[4].t = posed.world[4].t + d;  // translate one joint by d
    const Vec3<double> after = skin_vertex(t, posed, rest, 0);
    CHECK(dist(after - before, 0.5 * d) < 1e-12);
}

TEST_CASE("fk+skin: differentiable end to end") {
    const auto& t = tpl();
    auto f = [&t](ad::Tape& tape, std::span<const ad::Value> v) {
        std::array<Mat3<ad::Value>, 24> R;
        std::array<ad::Value, 24> S;
        for (int j = 0; j < 24; ++j) {
            R[j] = rodrigues(Vec3<ad::Value>{v[3 * j], v[3 * j + 1], v[3 * j + 2]});
            S[j] = v[72 + j];
        }
        auto posed = forward_kinematics<ad::Value>(t, R, S);
        auto rest = t.rest_joints();
        ad::Value acc = tape.constant(0.0);
        for (int vtx : {0, 201, 777, 1500}) {
            Vec3<ad::Value> p = skin_vertex(t, posed, rest, vtx);
            // linear term breaks rotation invariance of the pure norm
            acc = acc + squared_norm(p) + 0.3 * p.x + 0.7 * p.y - 0.2 * p.z;
        }
        return acc;
    };
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> A(-0.8, 0.8), U(0.6, 1.8);
    std::vector<double> x(96);
    for (int i = 0; i < 72; ++i) x[i] = A(rng);
    for (int i = 72; i < 96; ++i) x[i] = U(rng);
    auto r = ad::check_gradient(f, x, 1e-5);
    CHECK(r.nonfinite_count == 0);
    CHECK(r.max_rel_err < 1e-4);
}

TEST_CASE("quaternion: identity and half-turn about z") {
    auto q0 = axis_angle_to_quaternion({0.0, 0.0, 0.0});
    CHECK(q0.w == doctest::Approx(1.0));
    CHECK(q0.x == 0.0);
    CHECK(q0.y == 0.0);
    CHECK(q0.z == 0.0);
    auto qz = axis_angle_to_quaternion({0.0, 0.0, M_PI});
    CHECK(qz.w == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(qz.z == doctest::Approx(1.0));
}

TEST_CASE("quaternion: round trip under 1e-10 rad on 1000 random axis-angles") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::uniform_real_distribution<double> T(0.0, M_PI - 1e-6);
    for (int i = 0; i < 1000; ++i) {
        Vec3<double> axis{U(rng), U(rng), U(rng)};
        const double n = norm(axis);
        if (n < 1e-6) continue;
        const double angle = T(rng);
        Vec3<double> a = (angle / n) * axis;
        Vec3<double> back = quaternion_to_axis_angle(axis_angle_to_quaternion(a));
        CHECK(norm(back - a) < 1e-10);
    }
}

TEST_CASE("params: flatten/unflatten round trip and 108 count") {
    BodyParams p = BodyParams::t_pose();
    p.pose[5] = {0.1, -0.2, 0.3};
    p.scales[7] = 1.4;
    p.rotation_raw(0, 1) = 0.25;
    p.scale = 3.5;
    p.translation = {12.0, -7.0};
    auto flat = p.flatten();
    CHECK(flat.size() == 108);
    BodyParams q = BodyParams::unflatten(flat);
    CHECK(q.pose[5].z == 0.3);
    CHECK(q.scales[7] == 1.4);
    CHECK(q.rotation_raw(0, 1) == 0.25);
    CHECK(q.scale == 3.5);
    CHECK(q.translation.y == -7.0);
}

TEST_CASE("template: json round trip") {
    const auto& t = tpl();
    const std::string path = "tpl_roundtrip.json";
    save_template(t, path);
    BodyTemplate u = load_template(path);
    CHECK(u.n_vertices() == t.n_vertices());
    CHECK(u.faces.size() == t.faces.size());
    CHECK(u.parents == t.parents);
    CHECK(u.trunk_bone == t.trunk_bone);
    for (int i = 0; i < t.n_vertices(); ++i) {
        CHECK(dist(u.vertices[i], t.vertices[i]) < 1e-12);
        CHECK(u.vertex_part[i] == t.vertex_part[i]);
        CHECK(u.skin_weights[i].size() == t.skin_weights[i].size());
    }
    CHECK(u.hinge_axes.size() == t.hinge_axes.size());
    CHECK(u.symmetry_pairs == t.symmetry_pairs);
    CHECK(u.adjacency == t.adjacency);
    std::remove(path.c_str());
}

TEST_CASE("skeleton stats: positive ratios, sane trunk") {
    const auto& t = tpl();
    auto stats = SkeletonStats::from_template(t, KeypointMap::standard16());
    CHECK(stats.bones.size() == 15);  // 16 keypoints, one root
    for (double r : stats.ratio) CHECK(r > 0.0);
}
