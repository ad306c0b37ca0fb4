#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodyfit/annotation.hpp"
#include "bodyfit/body_model.hpp"
#include "bodyfit/keypoints.hpp"

namespace bodyfit {

struct SynthConfig {
    int count = 50;
    double noise_sigma = 0.0;  // Gaussian pixel noise on dense points and keypoints
    double max_angle = 0.6;    // per-coordinate |a| bound
    double scale_lo = 0.8, scale_hi = 1.25;
    int dense_points = 300;  // target correspondences per sample (capped by visibility)
    int width = 512, height = 512;
    // Camera draw: azimuth/elevation/roll about the front view, degrees.
    double azimuth_deg = 60.0;
    double elevation_deg = 15.0;
    double roll_deg = 10.0;
    bool truth_gan_depths = false;  // fill z^GAN from the true depths
    std::uint64_t seed = 1;
};

struct SynthDataset {
    std::vector<SampleAnnotation> samples;
    std::vector<BodyParams> truth;
};

// Per-sample deterministic draws (sample i depends on cfg.seed and i only):
// bounded pose, per-segment scales, near-front camera; dense correspondences
// are a random subset of the front-facing vertices (camera-frame vertex
// normal z < 0), keypoints are the projected mapped joints.
SynthDataset synth_dataset(const BodyTemplate& tpl, const KeypointMap& map,
                           const SynthConfig& cfg);

// Area-weighted world-space vertex normals of a posed copy of the template.
std::vector<Vec3<double>> vertex_normals(const BodyTemplate& tpl,
                                         const std::vector<Vec3<double>>& vertices);

struct PriorFamilyConfig {
    double knee_lo = 0.35, knee_hi = 1.0;    // flexion magnitude (sign from the hinge axis)
    double elbow_lo = 0.35, elbow_hi = 1.0;
    double jitter = 0.15;                    // other-joint angle noise
};

struct PriorSample {
    std::vector<Vec2<double>> u;  // root-centered, 2D-trunk-normalized image pose
    std::vector<double> z;        // true depths in the same units
};

// Depth-asymmetric articulated family seen from uniformly random azimuths.
// Knees and elbows flex with one consistent sign, so the depth signs of limb
// joints are statistically identifiable from the multi-view 2D marginal.
std::vector<PriorSample> make_prior_family(const BodyTemplate& tpl, const KeypointMap& map,
                                           int count, std::uint64_t seed,
                                           const PriorFamilyConfig& cfg = {});

// Fraction of limb-joint depth signs a generator gets right on an eval
// family; joints with |true z| < margin are skipped as ambiguous.
struct Mlp;
double depth_sign_accuracy(const Mlp& G, const std::vector<PriorSample>& eval_set,
                           const KeypointMap& map, double margin = 0.05);

// Dataset directory layout: samples/NNN.json, truth/NNN.json, meta.json.
void write_synth_dataset(const SynthDataset& data, const SynthConfig& cfg,
                         const std::string& dir);
SynthDataset load_synth_dataset(const std::string& dir, const BodyTemplate& tpl);

// One JSONL record per pose: {"joints": [[x,y,1],...]} plus "z" when depths
// are included.
void write_prior_family(const std::vector<PriorSample>& family, const std::string& path,
                        bool with_depths);
std::vector<PriorSample> load_prior_eval(const std::string& path);

}  // namespace bodyfit
