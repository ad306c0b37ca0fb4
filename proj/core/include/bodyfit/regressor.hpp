#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bodyfit/annotation.hpp"
#include "bodyfit/keypoints.hpp"
#include "bodyfit/pose_prior.hpp"
#include "bodyfit/regist_losses.hpp"

namespace bodyfit {

inline constexpr int kRegressorDim = 132;

// Quaternion parameterization of BodyParams for regression: 24 unit
// quaternions (w,x,y,z, canonical sign), 24 scales, rotation 9, scale,
// translation 2.
using RegressorParams132 = std::array<double, kRegressorDim>;

RegressorParams132 params_to_regressor_space(const BodyParams& p);

// Inverse: quaternions are normalized, R_raw is orthonormalized, the rest is
// copied. Zero-norm quaternion -> ContractViolation.
BodyParams regressor_space_to_params(const RegressorParams132& r);

// 0.5 x^2 for |x| <= delta, |x| - 0.5 delta otherwise (C1 at delta = 1).
double smooth_l1(double x, double delta = 1.0);
ad::Value smooth_l1(ad::Value x, double delta = 1.0);

struct RegressorConfig {
    int epochs = 50;
    int batch_size = 30;
    double lr = 1e-4;
    double alpha = 1.0, beta = 10.0, gamma = 1.0;  // L_conv = a L_regress + b L_dense + g L_KP
    int hidden = 128;
    int dense_features = 64;  // dense correspondences per feature vector
    int max_steps = 0;        // 0 = no cap
    std::uint64_t seed = 1;
};

// MLP over a fixed-length feature vector built from the annotation
// (stand-in for an image backbone; the information pathway 2D -> theta is
// what matters for the alternation).
struct Regressor {
    Mlp mlp;
    int dense_features = 64;

    static int feature_dim(const KeypointMap& map, int dense_features);
    static Regressor init(const KeypointMap& map, const RegressorConfig& cfg,
                          std::mt19937_64& rng);
};

// Features: keypoints and a fixed random subset of dense correspondences,
// both normalized by the sample's camera guess (default_init), plus the
// guess itself so absolute placement stays recoverable. Zero-padded.
std::vector<double> regressor_features(const Regressor& reg, const BodyTemplate& tpl,
                                       const SampleAnnotation& anno, const KeypointMap& map);

// Raw network outputs are offsets around the T-pose + camera-guess base:
// additive for quaternions/scales/rotation, multiplicative (exp) for the
// camera scale, 100 px units for translation.
RegressorParams132 decode_prediction(std::span<const double> raw,
                                     const RegressorParams132& base);

// Prediction as body parameters; segment scales are floored at 0.01 so the
// result is always a usable registration init.
BodyParams predict(const Regressor& reg, const BodyTemplate& tpl, const SampleAnnotation& anno,
                   const KeypointMap& map);

struct RegressorHistory {
    std::vector<double> loss;  // per-step L_conv
};

// L_conv of one sample as a tape graph over the regressor weights (bound via
// bind_weights); the alpha/beta/gamma mix comes from cfg. Exposed so the loss
// can be gradient-checked end to end.
ad::Value conv_loss(ad::Tape& tape, std::span<const ad::Value> weights, const Regressor& reg,
                    const BodyTemplate& tpl, const SampleAnnotation& anno,
                    const BodyParams& theta_anno, const KeypointMap& map,
                    const RegressorConfig& cfg);

// Adam on L_conv over (sample, theta_anno) pairs; reg is warm-started.
// Missing theta_anno (count mismatch) -> ContractViolation.
Regressor train_regressor(Regressor reg, const BodyTemplate& tpl,
                          const std::vector<SampleAnnotation>& samples,
                          const std::vector<BodyParams>& theta_anno, const KeypointMap& map,
                          const RegressorConfig& cfg, RegressorHistory* history = nullptr);

void save_regressor(const Regressor& reg, const std::string& path);
Regressor load_regressor(const std::string& path);

}  // namespace bodyfit
