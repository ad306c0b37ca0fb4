#include "bodyfit/pose_prior.hpp"

#include <cmath>
#include <unordered_map>

#include "bodyfit/errors.hpp"

namespace bodyfit {

int MlpSpec::weight_count() const {
    int n = 0;
    for (int l = 0; l < layer_count(); ++l) n += widths[l + 1] * (widths[l] + 1);
    return n;
}

MlpSpec MlpSpec::lifter(int n_keypoints, int hidden, int layers) {
    MlpSpec spec;
    spec.widths.push_back(2 * n_keypoints);
    for (int l = 0; l < layers - 1; ++l) spec.widths.push_back(hidden);
    spec.widths.push_back(n_keypoints);
    return spec;
}

MlpSpec MlpSpec::critic(int n_keypoints, int hidden, int layers) {
    MlpSpec spec;
    spec.widths.push_back(2 * n_keypoints);
    for (int l = 0; l < layers - 1; ++l) spec.widths.push_back(hidden);
    spec.widths.push_back(1);
    spec.logistic_output = true;
    return spec;
}

Mlp Mlp::init(const MlpSpec& spec, std::mt19937_64& rng) {
    Mlp mlp;
    mlp.spec = spec;
    mlp.weights.resize(spec.weight_count());
    std::normal_distribution<double> N(0.0, 1.0);
    std::size_t k = 0;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        // He-style fan-in scaling for the leaky rectifier
        const double std_dev =
            std::sqrt(2.0 / ((1.0 + spec.leaky_slope * spec.leaky_slope) * in));
        for (int i = 0; i < out * in; ++i) mlp.weights[k++] = std_dev * N(rng);
        for (int i = 0; i < out; ++i) mlp.weights[k++] = 0.0;
    }
    return mlp;
}

std::vector<double> mlp_forward(const Mlp& mlp, std::span<const double> input) {
    const MlpSpec& spec = mlp.spec;
    if ((int)input.size() != spec.widths.front())
        throw ContractViolation("mlp_forward: input width mismatch");
    std::vector<double> x(input.begin(), input.end()), y;
    std::size_t off = 0;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        y.assign(out, 0.0);
        for (int j = 0; j < out; ++j) {
            const double* w = &mlp.weights[off + (std::size_t)j * in];
            double acc = mlp.weights[off + (std::size_t)out * in + j];
            for (int i = 0; i < in; ++i) acc += w[i] * x[i];
            y[j] = (l + 1 < spec.layer_count() && acc < 0.0) ? spec.leaky_slope * acc : acc;
        }
        x.swap(y);
        off += (std::size_t)out * (in + 1);
    }
    return x;
}

std::vector<ad::Value> bind_weights(ad::Tape& tape, const Mlp& mlp, bool trainable) {
    std::vector<ad::Value> out;
    out.reserve(mlp.weights.size());
    for (double w : mlp.weights) out.push_back(trainable ? tape.var(w) : tape.constant(w));
    return out;
}

std::vector<ad::Value> mlp_forward(ad::Tape& tape, const MlpSpec& spec,
                                   std::span<const ad::Value> weights,
                                   std::span<const ad::Value> input) {
    if ((int)weights.size() != spec.weight_count())
        throw ContractViolation("mlp_forward: weight count mismatch");
    if ((int)input.size() != spec.widths.front())
        throw ContractViolation("mlp_forward: input width mismatch");
    std::vector<ad::Value> x(input.begin(), input.end()), y;
    std::size_t off = 0;
    for (int l = 0; l < spec.layer_count(); ++l) {
        const int in = spec.widths[l], out = spec.widths[l + 1];
        y.clear();
        y.reserve(out);
        for (int j = 0; j < out; ++j) {
            ad::Value acc = tape.dot(weights.subspan(off + (std::size_t)j * in, in),
                                     std::span<const ad::Value>(x.data(), in));
            acc = acc + weights[off + (std::size_t)out * in + j];
            y.push_back(l + 1 < spec.layer_count() ? leaky_relu(acc, spec.leaky_slope) : acc);
        }
        x.swap(y);
        off += (std::size_t)out * (in + 1);
    }
    return x;
}

bool Pose2D::all_visible() const {
    for (bool v : visibility)
        if (!v) return false;
    return true;
}

std::vector<double> Pose2D::flat() const {
    std::vector<double> out;
    out.reserve(2 * u.size());
    for (const auto& p : u) {
        out.push_back(p.x);
        out.push_back(p.y);
    }
    return out;
}

Pose2D normalize_pose(std::span<const Vec2<double>> keypoints,
                      const std::vector<bool>& visibility, const KeypointMap& map) {
    if ((int)keypoints.size() != map.size())
        throw ContractViolation("normalize_pose: keypoint count mismatch");
    const Vec2<double> root = keypoints[map.trunk_root];
    const Vec2<double> d = keypoints[map.trunk_top] - root;
    const double trunk = std::sqrt(squared_norm(d));
    if (trunk < 1e-9) throw DegenerateInput("normalize_pose: 2D trunk length < 1e-9");
    Pose2D pose;
    pose.u.reserve(keypoints.size());
    for (const auto& p : keypoints)
        pose.u.push_back({(p.x - root.x) / trunk, (p.y - root.y) / trunk});
    pose.visibility.assign(visibility.begin(), visibility.end());
    if (pose.visibility.empty()) pose.visibility.assign(keypoints.size(), true);
    return pose;
}

std::vector<double> generate_depths(const Mlp& G, const Pose2D& u) {
    return mlp_forward(G, u.flat());
}

namespace {

double stable_softplus(double x) {
    return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace

std::pair<double, double> adv_losses(const Mlp& D, std::span<const Pose2D> real,
                                     std::span<const std::vector<Vec2<double>>> fake) {
    if (real.empty() || fake.empty()) throw ContractViolation("adv_losses: empty batch");
    // log(1 - sigmoid(l)) = -softplus(l); log(sigmoid(l)) = -softplus(-l)
    double log_one_minus_fake = 0.0;
    for (const auto& pose : fake) {
        std::vector<double> flat;
        flat.reserve(2 * pose.size());
        for (const auto& p : pose) {
            flat.push_back(p.x);
            flat.push_back(p.y);
        }
        log_one_minus_fake += -stable_softplus(mlp_forward(D, flat)[0]);
    }
    log_one_minus_fake /= (double)fake.size();

    double log_real = 0.0;
    for (const auto& pose : real) log_real += -stable_softplus(-mlp_forward(D, pose.flat())[0]);
    log_real /= (double)real.size();

    return {log_one_minus_fake, log_real + log_one_minus_fake};
}

template <class T>
std::pair<T, T> geometric_losses(const Pose2D& u, std::span<const T> z,
                                 const SkeletonStats& stats) {
    if ((int)z.size() != u.size())
        throw ContractViolation("geometric_losses: depth count must match keypoints");

    const auto bone_length = [&](int child, int parent) -> T {
        const double dxy = squared_norm(u.u[child] - u.u[parent]);
        const T dz = z[child] - z[parent];
        return sqrt(dz * dz + dxy);
    };

    const T trunk = bone_length(stats.trunk_top, stats.trunk_root);
    if (scalar_value(trunk) < 1e-9)
        throw DegenerateInput("geometric_losses: 3D trunk length < 1e-9");

    std::unordered_map<int, int> bone_of_child;
    std::vector<T> lengths;
    lengths.reserve(stats.bones.size());
    for (std::size_t e = 0; e < stats.bones.size(); ++e) {
        bone_of_child[stats.bones[e]] = (int)e;
        lengths.push_back(bone_length(stats.bones[e], stats.bone_parent[e]));
    }

    T ratio_loss = square(lengths[0] / trunk - stats.ratio[0]);
    for (std::size_t e = 1; e < lengths.size(); ++e)
        ratio_loss = ratio_loss + square(lengths[e] / trunk - stats.ratio[e]);

    T sym_loss = ratio_loss * 0.0;
    for (const auto& [lc, rc] : stats.sym_bones) {
        const T diff = lengths[bone_of_child.at(lc)] - lengths[bone_of_child.at(rc)];
        sym_loss = sym_loss + diff * diff;
    }
    return {ratio_loss, sym_loss};
}

template std::pair<double, double> geometric_losses<double>(const Pose2D&,
                                                            std::span<const double>,
                                                            const SkeletonStats&);
template std::pair<ad::Value, ad::Value> geometric_losses<ad::Value>(const Pose2D&,
                                                                     std::span<const ad::Value>,
                                                                     const SkeletonStats&);

}  // namespace bodyfit
