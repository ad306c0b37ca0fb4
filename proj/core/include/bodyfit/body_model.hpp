#pragma once

#include <span>

#include "bodyfit/body_template.hpp"
#include "bodyfit/geom.hpp"

namespace bodyfit {

// Full body parameterization: per-joint axis-angle pose, per-segment scales,
// global rotation (unconstrained 9 values, orthonormalized on use), global
// scale (pixels per meter) and 2D image translation. 108 stored values.
struct BodyParams {
    static constexpr int kDim = 108;

    std::array<Vec3<double>, BodyTemplate::kNumJoints> pose{};
    std::array<double, BodyTemplate::kNumJoints> scales{};
    Mat3<double> rotation_raw = mat3_identity();
    double scale = 1.0;
    Vec2<double> translation{};

    static BodyParams t_pose() {
        BodyParams p;
        p.scales.fill(1.0);
        return p;
    }

    std::array<double, kDim> flatten() const;
    static BodyParams unflatten(std::span<const double> x);
};

// The same 108 parameters as scalars of type T, in flatten() order:
// pose (72), scales (24), rotation (9, row-major), scale, translation (2).
template <class T>
struct ParamsView {
    std::array<Vec3<T>, BodyTemplate::kNumJoints> pose;
    std::array<T, BodyTemplate::kNumJoints> scales;
    Mat3<T> rotation_raw;
    T scale;
    Vec2<T> translation;

    static ParamsView<T> from_flat(std::span<const T> x) {
        if (x.size() != BodyParams::kDim)
            throw ContractViolation("ParamsView: expected 108 parameters");
        ParamsView<T> p;
        std::size_t k = 0;
        for (auto& a : p.pose) {
            a.x = x[k++];
            a.y = x[k++];
            a.z = x[k++];
        }
        for (auto& s : p.scales) s = x[k++];
        for (auto& m : p.rotation_raw.m) m = x[k++];
        p.scale = x[k++];
        p.translation.x = x[k++];
        p.translation.y = x[k++];
        return p;
    }
};

template <class T>
struct PosedSkeleton {
    std::array<Frame<T>, BodyTemplate::kNumJoints> world;
    std::array<Vec3<T>, BodyTemplate::kNumJoints> joints;
};

// Mixed-scalar helpers: transform template-space double data by T frames.
template <class T>
Vec3<T> rotate_const(const Mat3<T>& A, const Vec3<double>& v) {
    return {A.m[0] * v.x + A.m[1] * v.y + A.m[2] * v.z,
            A.m[3] * v.x + A.m[4] * v.y + A.m[5] * v.z,
            A.m[6] * v.x + A.m[7] * v.y + A.m[8] * v.z};
}

template <class T>
Vec3<T> scale_const(const T& s, const Vec3<double>& v) {
    return {s * v.x, s * v.y, s * v.z};
}

// World transforms down the joint tree. Segment scales stretch the rest
// offset of their joint before the joint's own rotation is applied:
// T_j = T_parent ∘ translate(S_j * offset_j) ∘ rot_j.
template <class T>
PosedSkeleton<T> forward_kinematics(const BodyTemplate& tpl, std::span<const Mat3<T>> rotations,
                                    std::span<const T> scales) {
    if (rotations.size() != BodyTemplate::kNumJoints || scales.size() != BodyTemplate::kNumJoints)
        throw ContractViolation("forward_kinematics: expected 24 rotations and scales");
    for (const T& s : scales)
        if (scalar_value(s) <= 0.0)
            throw ContractViolation("forward_kinematics: non-positive segment scale");

    PosedSkeleton<T> out;
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j) {
        Frame<T> local{rotations[j], scale_const(scales[j], tpl.rest_offsets[j])};
        out.world[j] = tpl.parents[j] < 0 ? local : compose(out.world[tpl.parents[j]], local);
        out.joints[j] = out.world[j].t;
    }
    return out;
}

// Linear blend skinning of one rest vertex. Rest joint transforms are pure
// translations (T-pose), so the inverse rest transform is a subtraction.
template <class T>
Vec3<T> skin_vertex(const BodyTemplate& tpl, const PosedSkeleton<T>& posed,
                    const std::array<Vec3<double>, BodyTemplate::kNumJoints>& rest_joints,
                    int vertex) {
    const Vec3<double>& rest = tpl.vertices[vertex];
    Vec3<T> out{};
    bool first = true;
    for (const auto& [j, w] : tpl.skin_weights[vertex]) {
        const Vec3<double> local = rest - rest_joints[j];
        const Vec3<T> moved = rotate_const(posed.world[j].R, local) + posed.world[j].t;
        out = first ? w * moved : out + w * moved;
        first = false;
    }
    return out;
}

struct PosedBody {
    std::array<Vec3<double>, BodyTemplate::kNumJoints> joints;
    std::vector<Vec3<double>> vertices;
    std::array<Frame<double>, BodyTemplate::kNumJoints> transforms;
};

// Pose the whole template (axis-angle path, plain doubles).
PosedBody pose_body(const BodyTemplate& tpl, const BodyParams& params);

// Axis-angle <-> canonical unit quaternion (w >= 0, angle in [0, pi]).
// Declared in geom.hpp; re-exported here as the body-model rotation codec.
using bodyfit::axis_angle_to_quaternion;
using bodyfit::quaternion_to_axis_angle;

}  // namespace bodyfit
