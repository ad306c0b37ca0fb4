#include "bodyfit/registration.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <Eigen/Dense>

#include "bodyfit/ad/adam.hpp"
#include "bodyfit/errors.hpp"

namespace bodyfit {

namespace {

constexpr double kScaleFloor = 1e-2;

ParamsView<double> as_view(const BodyParams& p) {
    ParamsView<double> v;
    v.pose = p.pose;
    v.scales = p.scales;
    v.rotation_raw = p.rotation_raw;
    v.scale = p.scale;
    v.translation = p.translation;
    return v;
}

struct Box {
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -std::numeric_limits<double>::infinity();
    double ymin = std::numeric_limits<double>::infinity();
    double ymax = -std::numeric_limits<double>::infinity();

    void add(const Vec2<double>& p) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    bool valid() const { return xmax >= xmin; }
    double height() const { return ymax - ymin; }
    Vec2<double> center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
};

// Adam moves every coordinate by roughly lr per step, so optimize the camera
// scale in log space and the translation in 100 px units; pose, bone scales,
// and the rotation matrix are already order-one. External layout unchanged.
constexpr int kIdxScale = 105, kIdxTx = 106, kIdxTy = 107;

std::array<double, BodyParams::kDim> to_opt(std::array<double, BodyParams::kDim> p) {
    p[kIdxScale] = std::log(std::max(p[kIdxScale], kScaleFloor));
    p[kIdxTx] /= 100.0;
    p[kIdxTy] /= 100.0;
    return p;
}

std::array<double, BodyParams::kDim> from_opt(std::array<double, BodyParams::kDim> y) {
    y[kIdxScale] = std::exp(y[kIdxScale]);
    y[kIdxTx] *= 100.0;
    y[kIdxTy] *= 100.0;
    return y;
}

// One sample, cfg.iterations Adam steps on a reusable tape.
void optimize_one(const BodyTemplate& tpl, const SampleAnnotation& anno, const BodyParams& init,
                  const RegistConfig& cfg, const KeypointMap& map, ad::Tape& tape,
                  BodyParams& fitted, RegistTrace& trace) {
    const RegistWeights w = cfg.effective_weights();
    std::array<double, BodyParams::kDim> x = to_opt(init.flatten());
    std::array<double, BodyParams::kDim> x_finite = x;  // last params with a finite loss
    ad::AdamState adam(BodyParams::kDim, cfg.lr);
    adam.beta2 = cfg.beta2;
    std::array<ad::Value, BodyParams::kDim> leaves;
    std::array<ad::Value, BodyParams::kDim> vals;
    std::array<double, BodyParams::kDim> g;
    trace.loss.reserve(cfg.iterations);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        tape.clear();
        for (int i = 0; i < BodyParams::kDim; ++i) leaves[i] = tape.var(x[i]);
        vals = leaves;
        vals[kIdxScale] = exp(leaves[kIdxScale]);
        vals[kIdxTx] = leaves[kIdxTx] * 100.0;
        vals[kIdxTy] = leaves[kIdxTy] * 100.0;
        const auto params = ParamsView<ad::Value>::from_flat(std::span<const ad::Value>(vals));
        bool kp_warn = false;
        RegistTerms<ad::Value> terms;
        try {
            terms = evaluate_registration<ad::Value>(tpl, params, anno, map, &kp_warn);
        } catch (const DegenerateInput& e) {
            trace.aborted = true;
            trace.note = "iteration " + std::to_string(iter) + ": " + e.what();
            x = x_finite;
            break;
        }
        trace.kp_warning = trace.kp_warning || kp_warn;
        const ad::Value total = terms.total(w);
        const double loss = total.value();
        trace.loss.push_back(loss);
        if (!std::isfinite(loss)) {
            trace.aborted = true;
            trace.note = "iteration " + std::to_string(iter) + ": non-finite loss";
            x = x_finite;
            break;
        }
        x_finite = x;

        const auto grads = tape.backward(total);
        bool finite = true;
        for (int i = 0; i < BodyParams::kDim; ++i) {
            g[i] = grads[leaves[i]];
            finite = finite && std::isfinite(g[i]);
        }
        if (!finite) {
            trace.aborted = true;
            trace.note = "iteration " + std::to_string(iter) + ": non-finite gradient";
            break;
        }
        ad::adam_step(adam, x, g);
        // Projected step: forward kinematics requires strictly positive scales.
        for (int k = 72; k < 96; ++k) x[k] = std::max(x[k], kScaleFloor);
    }

    fitted = BodyParams::unflatten(from_opt(x));
    if (!trace.aborted) {
        try {
            fitted.rotation_raw = gram_schmidt(fitted.rotation_raw);
        } catch (const DegenerateInput& e) {
            trace.aborted = true;
            trace.note = std::string("finalization: ") + e.what();
        }
    }
    try {
        trace.final_terms = evaluate_registration<double>(tpl, as_view(fitted), anno, map);
    } catch (const DegenerateInput&) {
        // aborted sample with a degenerate rotation; terms stay zero
    }
}

// Weak-perspective camera from known 3D<->2D correspondences: least-squares
// 2x3 affine map, then SVD projection onto a scaled rotation. Returns false
// when the point set is too small or degenerate.
bool fit_weak_perspective(const std::vector<Vec3<double>>& pts3,
                          const std::vector<Vec2<double>>& pts2, Mat3<double>& rotation,
                          double& scale, Vec2<double>& translation) {
    const std::size_t n = pts3.size();
    if (n < 6) return false;

    Eigen::Vector3d v_mean = Eigen::Vector3d::Zero();
    Eigen::Vector2d p_mean = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        v_mean += Eigen::Vector3d(pts3[i].x, pts3[i].y, pts3[i].z);
        p_mean += Eigen::Vector2d(pts2[i].x, pts2[i].y);
    }
    v_mean /= double(n);
    p_mean /= double(n);

    Eigen::Matrix3d cov3 = Eigen::Matrix3d::Zero();     // sum v~ v~^T
    Eigen::Matrix<double, 2, 3> cross = Eigen::Matrix<double, 2, 3>::Zero();  // sum p~ v~^T
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d v = Eigen::Vector3d(pts3[i].x, pts3[i].y, pts3[i].z) - v_mean;
        const Eigen::Vector2d p = Eigen::Vector2d(pts2[i].x, pts2[i].y) - p_mean;
        cov3 += v * v.transpose();
        cross += p * v.transpose();
    }

    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov3);
    if (eig.info() != Eigen::Success) return false;
    const double ev_max = eig.eigenvalues().maxCoeff();
    const double ev_min = eig.eigenvalues().minCoeff();
    if (!(ev_max > 0.0) || ev_min < 1e-9 * ev_max) return false;  // near-planar point set

    const Eigen::Matrix<double, 2, 3> affine = cross * cov3.inverse();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(affine, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::Matrix<double, 2, 3> rows2 = svd.matrixU() * svd.matrixV().transpose();
    const double s = 0.5 * (svd.singularValues()(0) + svd.singularValues()(1));
    if (!std::isfinite(s) || s < 1e-8) return false;

    const Eigen::Vector3d r0 = rows2.row(0), r1 = rows2.row(1);
    const Eigen::Vector3d r2 = r0.cross(r1);
    Eigen::Matrix3d R;
    R.row(0) = r0;
    R.row(1) = r1;
    R.row(2) = r2;
    if (!R.allFinite()) return false;

    const Eigen::Vector2d t = p_mean - s * (R * v_mean).head<2>();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) rotation(r, c) = R(r, c);
    scale = s;
    translation = {t(0), t(1)};
    return true;
}

}  // namespace

BodyParams default_init(const BodyTemplate& tpl, const SampleAnnotation& anno,
                        const KeypointMap& map) {
    BodyParams p = BodyParams::t_pose();
    p.rotation_raw = front_view_rotation();

    // Correspondences pin rest geometry to pixels, so the camera has a direct
    // least-squares estimate. Limbs articulate far from their rest placement
    // (chains accumulate), so fit the near-rigid trunk first: pelvis, spine,
    // upper thighs. Fall back to all correspondences, then the box heuristic.
    for (const bool trunk_only : {true, false}) {
        std::array<bool, BodyTemplate::kNumJoints> keep{};
        if (trunk_only)
            for (int j : {0, 1, 2, 3, 6, 9}) keep[j] = true;
        else
            keep.fill(true);

        std::vector<Vec3<double>> pts3;
        std::vector<Vec2<double>> pts2;
        pts3.reserve(anno.dense.size() + map.size());
        pts2.reserve(anno.dense.size() + map.size());
        for (const auto& c : anno.dense) {
            if (c.vertex < 0 || c.vertex >= tpl.n_vertices()) continue;
            if (!keep[tpl.vertex_part[c.vertex]]) continue;
            pts3.push_back(tpl.vertices[c.vertex]);
            pts2.push_back(c.pixel);
        }
        if ((int)anno.keypoints.size() == map.size()) {
            const auto joints = tpl.rest_joints();
            for (int k = 0; k < map.size(); ++k)
                if (anno.keypoints[k].visible && keep[map.model_joint[k]]) {
                    pts3.push_back(joints[map.model_joint[k]]);
                    pts2.push_back(anno.keypoints[k].pos);
                }
        }
        if (fit_weak_perspective(pts3, pts2, p.rotation_raw, p.scale, p.translation)) {
            p.scale = std::max(p.scale, kScaleFloor);
            return p;
        }
    }

    Box box;
    bool from_keypoints = false;
    if ((int)anno.keypoints.size() == map.size()) {
        int visible = 0;
        for (const auto& kp : anno.keypoints)
            if (kp.visible) {
                box.add(kp.pos);
                ++visible;
            }
        from_keypoints = visible >= 2;
    }
    if (!from_keypoints) {
        box = Box{};
        for (const auto& c : anno.dense) box.add(c.pixel);
    }
    if (!box.valid()) {
        p.translation = {0.5 * anno.width, 0.5 * anno.height};
        return p;
    }

    const double height_px = box.height();
    const double height_model = tpl.skeleton_height();
    if (height_px > 1e-6 && height_model > 1e-6) p.scale = height_px / height_model;

    Vec2<double> target = box.center();
    if (from_keypoints && anno.keypoints[map.trunk_root].visible)
        target = anno.keypoints[map.trunk_root].pos;
    // t places the rest pelvis at the target pixel.
    const Vec3<double> root = p.rotation_raw * tpl.rest_joints()[0];
    p.translation = {target.x - p.scale * root.x, target.y - p.scale * root.y};
    return p;
}

RegistrationResult register_samples(const BodyTemplate& tpl,
                                    const std::vector<SampleAnnotation>& samples,
                                    const std::vector<BodyParams>& init, const RegistConfig& cfg,
                                    const KeypointMap& map) {
    if (!init.empty() && init.size() != samples.size())
        throw ContractViolation("register_samples: init length must match samples");
    if (cfg.iterations < 0 || cfg.lr <= 0.0 || cfg.beta2 <= 0.0 || cfg.beta2 >= 1.0)
        throw ContractViolation("register_samples: bad optimizer config");

    RegistrationResult result;
    result.fitted.resize(samples.size());
    result.traces.resize(samples.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        ad::Tape tape;
        for (std::size_t i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) {
            const BodyParams start = init.empty() ? default_init(tpl, samples[i], map) : init[i];
            optimize_one(tpl, samples[i], start, cfg, map, tape, result.fitted[i],
                         result.traces[i]);
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || samples.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        const int n = std::min<std::size_t>(threads, samples.size());
        pool.reserve(n);
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& t : result.traces) result.aborted_count += t.aborted ? 1 : 0;
    return result;
}

}  // namespace bodyfit
