#pragma once

#include <span>

#include "bodyfit/annotation.hpp"
#include "bodyfit/body_model.hpp"
#include "bodyfit/camera.hpp"
#include "bodyfit/keypoints.hpp"

namespace bodyfit {

struct RegistWeights {
    double dense = 1000.0;
    double kp = 1.0;
    double scale = 10.0;
    double joint = 0.001;
    double det = 1.0;
};

// Stiff mode multiplies the body regularizers up for the first round.
inline RegistWeights stiffened(RegistWeights w) {
    w.scale = 100.0;
    w.joint = 1.0;
    return w;
}

struct RegistConfig {
    RegistWeights weights;
    double lr = 0.1;
    double beta2 = 0.99;  // short second-moment memory; loss scale drops ~1000x after transit
    int batch_size = 10;
    int iterations = 300;
    bool stiff = false;
    int threads = 1;

    RegistWeights effective_weights() const { return stiff ? stiffened(weights) : weights; }
};

template <class T>
struct RegistTerms {
    T dense, kp, scale, joint, det;

    T total(const RegistWeights& w) const {
        return w.dense * dense + w.kp * kp + w.scale * scale + w.joint * joint + w.det * det;
    }
};

template <class T>
struct FitTerms {
    T dense, kp;
};

// Dense and keypoint terms for explicit joint rotations; shared by the
// axis-angle registration path and the quaternion regressor path.
// kp_warning (optional) is set when every keypoint is invisible. Dense list
// must be non-empty.
template <class T>
FitTerms<T> evaluate_fit_terms(const BodyTemplate& tpl, std::span<const Mat3<T>> rotations,
                               std::span<const T> scales, const Mat3<T>& rotation_raw,
                               const T& scale, const Vec2<T>& translation,
                               const SampleAnnotation& anno, const KeypointMap& map,
                               bool* kp_warning = nullptr);

extern template FitTerms<double> evaluate_fit_terms<double>(
    const BodyTemplate&, std::span<const Mat3<double>>, std::span<const double>,
    const Mat3<double>&, const double&, const Vec2<double>&, const SampleAnnotation&,
    const KeypointMap&, bool*);
extern template FitTerms<ad::Value> evaluate_fit_terms<ad::Value>(
    const BodyTemplate&, std::span<const Mat3<ad::Value>>, std::span<const ad::Value>,
    const Mat3<ad::Value>&, const ad::Value&, const Vec2<ad::Value>&, const SampleAnnotation&,
    const KeypointMap&, bool*);

// All five terms at once; FK, Gram-Schmidt and the skinning of corresponded
// vertices are shared.
template <class T>
RegistTerms<T> evaluate_registration(const BodyTemplate& tpl, const ParamsView<T>& params,
                                     const SampleAnnotation& anno, const KeypointMap& map,
                                     bool* kp_warning = nullptr);

extern template RegistTerms<double> evaluate_registration<double>(const BodyTemplate&,
                                                                  const ParamsView<double>&,
                                                                  const SampleAnnotation&,
                                                                  const KeypointMap&, bool*);
extern template RegistTerms<ad::Value> evaluate_registration<ad::Value>(
    const BodyTemplate&, const ParamsView<ad::Value>&, const SampleAnnotation&,
    const KeypointMap&, bool*);

// Individual terms on plain parameters (convenience wrappers over the above).
double dense_loss(const BodyParams& params, const BodyTemplate& tpl,
                  const SampleAnnotation& anno);
double keypoint_loss(const BodyParams& params, const BodyTemplate& tpl,
                     const SampleAnnotation& anno, const KeypointMap& map,
                     bool* all_invisible = nullptr);
double scale_smoothness_loss(std::span<const double> scales, const BodyTemplate& tpl);
double joint_loss(std::span<const Vec3<double>> pose, const BodyTemplate& tpl);

// exp(-det(R_raw)) on the raw, un-orthonormalized matrix; this is what keeps
// the directly-optimized 9 parameters from drifting into a reflection.
double det_loss(const Mat3<double>& rotation_raw);

}  // namespace bodyfit
