#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bodyfit/ad/tape.hpp"
#include "bodyfit/keypoints.hpp"

namespace bodyfit {

// Stack of affine layers with leaky-rectifier units (slope 0.2) between them.
// The critic variant squashes its single output through a logistic when asked
// for a probability; losses work on the raw logit.
struct MlpSpec {
    std::vector<int> widths;  // layer count = widths.size() - 1
    double leaky_slope = 0.2;
    bool logistic_output = false;

    int layer_count() const { return static_cast<int>(widths.size()) - 1; }
    int weight_count() const;

    // Generator: 2N -> N depths. Discriminator: 2N -> 1 logit.
    static MlpSpec lifter(int n_keypoints, int hidden = 128, int layers = 8);
    static MlpSpec critic(int n_keypoints, int hidden = 128, int layers = 8);
};

struct Mlp {
    MlpSpec spec;
    std::vector<double> weights;  // flat [W0 row-major (out x in), b0, W1, b1, ...]

    static Mlp init(const MlpSpec& spec, std::mt19937_64& rng);
};

// Raw network output (depths for the lifter, logit for the critic).
std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input);

// Tape variants. Weights bound as leaves can be optimized; as constants the
// network still back-propagates through its inputs.
std::vector<ad::Value> bind_weights(ad::Tape& tape, const Mlp& mlp, bool trainable);
std::vector<ad::Value> mlp_forward(ad::Tape& tape, const MlpSpec& spec,
                                   std::span<const ad::Value> weights,
                                   std::span<const ad::Value> input);

// Root-centered, trunk-normalized 2D pose. Normalization centers at the
// pelvis keypoint and divides by the pelvis->neck distance.
struct Pose2D {
    std::vector<Vec2<double>> u;
    std::vector<bool> visibility;

    int size() const { return static_cast<int>(u.size()); }
    bool all_visible() const;
    std::vector<double> flat() const;  // [x0, y0, x1, y1, ...]
};

// Throws DegenerateInput when the 2D trunk is shorter than 1e-9.
Pose2D normalize_pose(std::span<const Vec2<double>> keypoints,
                      const std::vector<bool>& visibility, const KeypointMap& map);

// Depths for a normalized pose, z = G(flatten(u)).
std::vector<double> generate_depths(const Mlp& G, const Pose2D& u);

// Rotation about the vertical (y) axis followed by orthographic projection:
// x' = x cos(phi) + z sin(phi), y' = y.
template <class T>
std::vector<Vec2<T>> rotate_project(const Pose2D& u, std::span<const T> z, double phi) {
    if ((int)z.size() != u.size())
        throw ContractViolation("rotate_project: depth count must match keypoints");
    const double c = std::cos(phi), s = std::sin(phi);
    std::vector<Vec2<T>> out(z.size());
    for (int i = 0; i < u.size(); ++i) {
        out[i].x = c * u.u[i].x + s * z[i];
        if constexpr (std::is_same_v<T, double>)
            out[i].y = u.u[i].y;
        else
            out[i].y = z[i].tape()->constant(u.u[i].y);
    }
    return out;
}

// (L_adv^G, L_adv^D): generator loss E[log(1 - D(fake))] and the
// discriminator objective E[log D(real)] + E[log(1 - D(fake))] (its optimum
// is 0). Training minimizes the first and the negation of the second.
std::pair<double, double> adv_losses(const Mlp& D, std::span<const Pose2D> real,
                                     std::span<const std::vector<Vec2<double>>> fake);

// (L_ratio, L_sym) on the assembled (x, y, z) pose; sums over bones/pairs.
// Throws DegenerateInput when the 3D trunk is shorter than 1e-9.
template <class T>
std::pair<T, T> geometric_losses(const Pose2D& u, std::span<const T> z,
                                 const SkeletonStats& stats);

extern template std::pair<double, double> geometric_losses<double>(
    const Pose2D&, std::span<const double>, const SkeletonStats&);
extern template std::pair<ad::Value, ad::Value> geometric_losses<ad::Value>(
    const Pose2D&, std::span<const ad::Value>, const SkeletonStats&);

}  // namespace bodyfit
