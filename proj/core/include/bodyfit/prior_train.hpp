#pragma once

#include <string>
#include <vector>

#include "bodyfit/annotation.hpp"
#include "bodyfit/pose_prior.hpp"

namespace bodyfit {

struct PriorConfig {
    int epochs = 60;
    int batch_size = 1024;
    double lr = 2e-4;
    double epsilon = 0.1;  // weight of the adversarial term in L^G
    std::vector<double> views_deg = {45, 60, 90, 135, 180, 235, 270};
    int hidden = 128;
    int layers = 8;
    int max_steps = 0;     // 0 = run all epochs; otherwise cap total steps
    int eval_every = 0;    // 0 = once per epoch
    int eval_subset = 256;
    std::uint64_t seed = 1;
};

struct PriorEvalPoint {
    int step = 0;
    double adv_g = 0.0;    // E[log(1 - D(fake))] over the view sweep
    double adv_d = 0.0;    // E[log D(real)] + E[log(1 - D(fake))]
    double ratio = 0.0;    // mean L_ratio over the eval subset
    double sym = 0.0;      // mean L_sym
};

struct PriorTrainResult {
    Mlp G;
    Mlp D;
    std::vector<PriorEvalPoint> history;
};

// Alternating Adam updates of D and G on normalized poses. Each fake pose in
// a training batch is projected under one view angle sampled from the view
// set; evaluation sweeps the full set. Deterministic for a fixed seed.
PriorTrainResult train_prior(const std::vector<Pose2D>& data, const SkeletonStats& stats,
                             const PriorConfig& cfg);

// L^G = epsilon * E[log(1 - D(fake))] + mean(L_ratio + L_sym) for one batch
// with the given per-sample view angles, as a tape graph over the generator
// weights (discriminator weights enter as constants).
ad::Value generator_loss(ad::Tape& tape, std::span<const ad::Value> g_weights,
                         const MlpSpec& g_spec, const Mlp& D, std::span<const Pose2D> batch,
                         std::span<const double> phis_rad, const SkeletonStats& stats,
                         double epsilon);

// Negated discriminator objective for one batch (to minimize); fake 2D poses
// are precomputed outside the tape.
ad::Value discriminator_loss(ad::Tape& tape, std::span<const ad::Value> d_weights,
                             const MlpSpec& d_spec, std::span<const Pose2D> real,
                             std::span<const std::vector<Vec2<double>>> fake);

// Predict depths for the annotation's keypoints and store them as gan_depths
// in pixels, root-centered. Skips samples with invisible joints or a
// degenerate trunk; returns the number of samples filled.
int fill_gan_depths(const Mlp& G, const KeypointMap& map,
                    std::vector<SampleAnnotation>& annotations);

// JSON-lines keypoint dataset, one {"joints": [[x,y,visible] x N]} per line.
// Loading normalizes each pose and drops poses with any invisible joint or a
// degenerate trunk.
std::vector<Pose2D> load_pose_dataset(const std::string& path, const KeypointMap& map);
void save_pose_dataset(const std::vector<std::vector<Keypoint2D>>& poses,
                       const std::string& path);

// Trained-prior weights file: JSON of layer matrices.
void save_mlp(const Mlp& mlp, const std::string& path);
Mlp load_mlp(const std::string& path);

}  // namespace bodyfit
