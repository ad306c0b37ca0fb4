#include "bodyfit/body_model.hpp"

namespace bodyfit {

std::array<double, BodyParams::kDim> BodyParams::flatten() const {
    std::array<double, kDim> x{};
    std::size_t k = 0;
    for (const auto& a : pose) {
        x[k++] = a.x;
        x[k++] = a.y;
        x[k++] = a.z;
    }
    for (double s : scales) x[k++] = s;
    for (double m : rotation_raw.m) x[k++] = m;
    x[k++] = scale;
    x[k++] = translation.x;
    x[k++] = translation.y;
    return x;
}

BodyParams BodyParams::unflatten(std::span<const double> x) {
    if (x.size() != kDim) throw ContractViolation("BodyParams::unflatten: expected 108 values");
    BodyParams p;
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

PosedBody pose_body(const BodyTemplate& tpl, const BodyParams& params) {
    std::array<Mat3<double>, BodyTemplate::kNumJoints> rot;
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j) rot[j] = rodrigues(params.pose[j]);
    const auto posed = forward_kinematics<double>(tpl, rot, params.scales);
    const auto rest_joints = tpl.rest_joints();

    PosedBody out;
    out.joints = posed.joints;
    out.transforms = posed.world;
    out.vertices.resize(tpl.n_vertices());
    for (int i = 0; i < tpl.n_vertices(); ++i)
        out.vertices[i] = skin_vertex(tpl, posed, rest_joints, i);
    return out;
}

}  // namespace bodyfit
