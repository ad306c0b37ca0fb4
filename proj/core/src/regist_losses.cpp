#include "bodyfit/regist_losses.hpp"

#include <cmath>

#include "bodyfit/errors.hpp"

namespace bodyfit {

template <class T>
FitTerms<T> evaluate_fit_terms(const BodyTemplate& tpl, std::span<const Mat3<T>> rotations,
                               std::span<const T> scales, const Mat3<T>& rotation_raw,
                               const T& scale, const Vec2<T>& translation,
                               const SampleAnnotation& anno, const KeypointMap& map,
                               bool* kp_warning) {
    if (anno.dense.empty())
        throw ContractViolation("evaluate_fit_terms: empty dense correspondence list");
    if ((int)anno.keypoints.size() != map.size())
        throw ContractViolation("evaluate_fit_terms: keypoint count mismatch");
    if (kp_warning) *kp_warning = false;

    const auto skel = forward_kinematics<T>(tpl, rotations, scales);
    const auto rest = tpl.rest_joints();
    const Mat3<T> Rn = gram_schmidt(rotation_raw);

    FitTerms<T> terms;

    // L_dense: mean squared 2D distance over correspondences
    {
        T acc = scale * 0.0;
        for (const auto& c : anno.dense) {
            const Vec3<T> world = skin_vertex(tpl, skel, rest, c.vertex);
            const auto view = view_point<T>(Rn, scale, translation, world);
            const Vec2<T> d{view.image.x - c.pixel.x, view.image.y - c.pixel.y};
            acc = acc + squared_norm(d);
        }
        terms.dense = acc * (1.0 / (double)anno.dense.size());
    }

    // L_KP: mean 2D MSE over visible keypoints + mean depth MSE vs gan_depths
    {
        std::vector<ViewedPoint<T>> viewed(map.size());
        for (int k = 0; k < map.size(); ++k)
            viewed[k] = view_point<T>(Rn, scale, translation, skel.joints[map.model_joint[k]]);
        T acc2d = scale * 0.0;
        int visible = 0;
        for (int k = 0; k < map.size(); ++k) {
            if (!anno.keypoints[k].visible) continue;
            ++visible;
            const Vec2<T> d{viewed[k].image.x - anno.keypoints[k].pos.x,
                            viewed[k].image.y - anno.keypoints[k].pos.y};
            acc2d = acc2d + squared_norm(d);
        }
        if (visible == 0 && kp_warning) *kp_warning = true;
        terms.kp = visible > 0 ? acc2d * (1.0 / visible) : acc2d;

        if (anno.has_gan_depths() && visible > 0) {
            // Depths are compared root-centered; absolute depth is unobservable
            // under weak perspective.
            const T root_depth = viewed[map.trunk_root].depth;
            T accz = scale * 0.0;
            for (int k = 0; k < map.size(); ++k) {
                if (!anno.keypoints[k].visible) continue;
                accz = accz + square(viewed[k].depth - root_depth - anno.gan_depths[k]);
            }
            terms.kp = terms.kp + accz * (1.0 / visible);
        }
    }
    return terms;
}

template FitTerms<double> evaluate_fit_terms<double>(const BodyTemplate&,
                                                     std::span<const Mat3<double>>,
                                                     std::span<const double>, const Mat3<double>&,
                                                     const double&, const Vec2<double>&,
                                                     const SampleAnnotation&, const KeypointMap&,
                                                     bool*);
template FitTerms<ad::Value> evaluate_fit_terms<ad::Value>(
    const BodyTemplate&, std::span<const Mat3<ad::Value>>, std::span<const ad::Value>,
    const Mat3<ad::Value>&, const ad::Value&, const Vec2<ad::Value>&, const SampleAnnotation&,
    const KeypointMap&, bool*);

template <class T>
RegistTerms<T> evaluate_registration(const BodyTemplate& tpl, const ParamsView<T>& params,
                                     const SampleAnnotation& anno, const KeypointMap& map,
                                     bool* kp_warning) {
    std::array<Mat3<T>, BodyTemplate::kNumJoints> rotations;
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j) rotations[j] = rodrigues(params.pose[j]);

    RegistTerms<T> terms;
    const FitTerms<T> fit = evaluate_fit_terms<T>(
        tpl, std::span<const Mat3<T>>(rotations.data(), rotations.size()),
        std::span<const T>(params.scales.data(), params.scales.size()), params.rotation_raw,
        params.scale, params.translation, anno, map, kp_warning);
    terms.dense = fit.dense;
    terms.kp = fit.kp;

    // L_scale: sum over adjacent segment pairs
    {
        T acc = params.scale * 0.0;
        for (const auto& [a, b] : tpl.adjacency) {
            const T d = params.scales[a] - params.scales[b];
            acc = acc + d * d;
        }
        terms.scale = acc;
    }

    // L_joint: angle smoothness + hinge limits (flexion negative)
    {
        T acc = params.scale * 0.0;
        for (const auto& a : params.pose) acc = acc + squared_norm(a);
        for (const auto& [j, axis] : tpl.hinge_axes) {
            const T h = params.pose[j].x * axis.x + params.pose[j].y * axis.y +
                        params.pose[j].z * axis.z;
            acc = acc + square(exp(h));
        }
        terms.joint = acc;
    }

    // L_det on the raw matrix
    terms.det = exp(-det(params.rotation_raw));

    return terms;
}

template RegistTerms<double> evaluate_registration<double>(const BodyTemplate&,
                                                           const ParamsView<double>&,
                                                           const SampleAnnotation&,
                                                           const KeypointMap&, bool*);
template RegistTerms<ad::Value> evaluate_registration<ad::Value>(const BodyTemplate&,
                                                                 const ParamsView<ad::Value>&,
                                                                 const SampleAnnotation&,
                                                                 const KeypointMap&, bool*);

namespace {

ParamsView<double> as_view(const BodyParams& p) {
    ParamsView<double> v;
    v.pose = p.pose;
    v.scales = p.scales;
    v.rotation_raw = p.rotation_raw;
    v.scale = p.scale;
    v.translation = p.translation;
    return v;
}

}  // namespace

double dense_loss(const BodyParams& params, const BodyTemplate& tpl,
                  const SampleAnnotation& anno) {
    return evaluate_registration<double>(tpl, as_view(params), anno, KeypointMap::standard16())
        .dense;
}

double keypoint_loss(const BodyParams& params, const BodyTemplate& tpl,
                     const SampleAnnotation& anno, const KeypointMap& map, bool* all_invisible) {
    return evaluate_registration<double>(tpl, as_view(params), anno, map, all_invisible).kp;
}

double scale_smoothness_loss(std::span<const double> scales, const BodyTemplate& tpl) {
    if ((int)scales.size() != BodyTemplate::kNumJoints)
        throw ContractViolation("scale_smoothness_loss: expected 24 scales");
    double acc = 0.0;
    for (const auto& [a, b] : tpl.adjacency) acc += square(scales[a] - scales[b]);
    return acc;
}

double joint_loss(std::span<const Vec3<double>> pose, const BodyTemplate& tpl) {
    if ((int)pose.size() != BodyTemplate::kNumJoints)
        throw ContractViolation("joint_loss: expected 24 joint angles");
    double acc = 0.0;
    for (const auto& a : pose) acc += squared_norm(a);
    for (const auto& [j, axis] : tpl.hinge_axes) acc += square(std::exp(dot(pose[j], axis)));
    return acc;
}

double det_loss(const Mat3<double>& rotation_raw) { return std::exp(-det(rotation_raw)); }

}  // namespace bodyfit
