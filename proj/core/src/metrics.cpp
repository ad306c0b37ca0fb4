#include "bodyfit/metrics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "bodyfit/camera.hpp"
#include "bodyfit/errors.hpp"

namespace bodyfit {

namespace {

double total_bone_length(std::span<const Vec3<double>> joints, std::span<const int> parents) {
    double total = 0.0;
    for (std::size_t j = 0; j < joints.size(); ++j)
        if (parents[j] >= 0) total += std::sqrt(squared_norm(joints[j] - joints[parents[j]]));
    return total;
}

}  // namespace

double mpjpe(std::span<const Vec3<double>> pred, std::span<const Vec3<double>> gt,
             std::span<const int> parents, std::span<const double> canonical_lengths, int root) {
    const std::size_t n = pred.size();
    if (gt.size() != n || parents.size() != n || canonical_lengths.size() != n)
        throw ContractViolation("mpjpe: size mismatch");
    if (root < 0 || (std::size_t)root >= n) throw ContractViolation("mpjpe: bad root index");

    double canonical = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        if (parents[j] >= 0) canonical += canonical_lengths[j];
    const double tp = total_bone_length(pred, parents);
    const double tg = total_bone_length(gt, parents);
    if (tp < 1e-12 || tg < 1e-12 || canonical < 1e-12)
        throw DegenerateInput("mpjpe: zero total bone length");

    const double sp = canonical / tp, sg = canonical / tg;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const Vec3<double> a = sp * (pred[j] - pred[root]);
        const Vec3<double> b = sg * (gt[j] - gt[root]);
        acc += std::sqrt(squared_norm(a - b));
    }
    return acc / (double)n;
}

double mpjpe_mm(const BodyTemplate& tpl, const BodyParams& pred, const BodyParams& gt) {
    // Compare in camera frame: the split of global orientation between the
    // camera rotation and the root joint is invisible to the projections, so
    // model-frame joints would differ by a pure gauge choice.
    auto camera_joints = [&](const BodyParams& p) {
        auto joints = pose_body(tpl, p).joints;
        const Mat3<double> R = gram_schmidt(p.rotation_raw);
        for (auto& j : joints) j = R * j;
        return joints;
    };
    const auto pj = camera_joints(pred);
    const auto gj = camera_joints(gt);
    std::array<double, BodyTemplate::kNumJoints> canonical{};
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j)
        if (tpl.parents[j] >= 0) canonical[j] = 1000.0 * std::sqrt(squared_norm(tpl.rest_offsets[j]));
    return mpjpe(pj, gj, tpl.parents, canonical);
}

double procrustes_vertex_error(std::span<const Vec3<double>> pred,
                               std::span<const Vec3<double>> gt) {
    const std::size_t n = pred.size();
    if (gt.size() != n) throw ContractViolation("procrustes_vertex_error: size mismatch");
    if (n == 0) throw ContractViolation("procrustes_vertex_error: empty point sets");

    Eigen::MatrixXd X(3, n), Y(3, n);
    for (std::size_t i = 0; i < n; ++i) {
        X.col(i) << pred[i].x, pred[i].y, pred[i].z;
        Y.col(i) << gt[i].x, gt[i].y, gt[i].z;
    }
    const Eigen::Vector3d cx = X.rowwise().mean(), cy = Y.rowwise().mean();
    X.colwise() -= cx;
    Y.colwise() -= cy;

    const double var_x = X.squaredNorm();
    if (var_x < 1e-24) throw DegenerateInput("procrustes_vertex_error: coincident points");

    const Eigen::Matrix3d H = X * Y.transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d d(1.0, 1.0, 1.0);
    if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2) = -1.0;
    const Eigen::Matrix3d R =
        svd.matrixV() * d.asDiagonal() * svd.matrixU().transpose();
    const double s = svd.singularValues().dot(d) / var_x;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += (s * R * X.col(i) - Y.col(i)).norm();
    return acc / (double)n;
}

double per_pixel_error(std::span<const Vec2<double>> pred, std::span<const Vec2<double>> gt) {
    if (pred.size() != gt.size()) throw ContractViolation("per_pixel_error: size mismatch");
    if (pred.empty()) throw ContractViolation("per_pixel_error: empty correspondence set");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += std::sqrt(squared_norm(pred[i] - gt[i]));
    return acc / (double)pred.size();
}

double per_pixel_error(std::span<const Vec2<double>> pred_pixels,
                       const std::vector<DensePoint>& dense) {
    if (dense.empty()) throw ContractViolation("per_pixel_error: empty correspondence set");
    double acc = 0.0;
    for (const auto& c : dense) {
        if (c.vertex < 0 || (std::size_t)c.vertex >= pred_pixels.size())
            throw ContractViolation("per_pixel_error: vertex index out of range");
        acc += std::sqrt(squared_norm(pred_pixels[c.vertex] - c.pixel));
    }
    return acc / (double)dense.size();
}

std::string EvalReport::csv_header() { return "count,mpjpe_mm,per_vertex_mm,per_pixel"; }

std::string EvalReport::csv_row() const {
    std::ostringstream os;
    os << count << ',' << mpjpe_mm << ',' << per_vertex_mm << ',' << per_pixel;
    return os.str();
}

std::string EvalReport::to_json() const {
    std::ostringstream os;
    os << "{\"count\": " << count << ", \"mpjpe_mm\": " << mpjpe_mm
       << ", \"per_vertex_mm\": " << per_vertex_mm << ", \"per_pixel\": " << per_pixel << "}";
    return os.str();
}

EvalReport evaluate_fits(const BodyTemplate& tpl, std::span<const BodyParams> fitted,
                         std::span<const BodyParams> truth,
                         const std::vector<SampleAnnotation>* annotations) {
    if (fitted.size() != truth.size())
        throw ContractViolation("evaluate_fits: fitted/truth size mismatch");
    if (annotations && annotations->size() != fitted.size())
        throw ContractViolation("evaluate_fits: annotation count mismatch");

    EvalReport report;
    report.count = (int)fitted.size();
    if (fitted.empty()) return report;

    int pixel_count = 0;
    for (std::size_t i = 0; i < fitted.size(); ++i) {
        report.mpjpe_mm += mpjpe_mm(tpl, fitted[i], truth[i]);
        const PosedBody pb = pose_body(tpl, fitted[i]);
        const PosedBody gb = pose_body(tpl, truth[i]);
        report.per_vertex_mm += 1000.0 * procrustes_vertex_error(pb.vertices, gb.vertices);
        if (annotations && !(*annotations)[i].dense.empty()) {
            const WeakPerspectiveCamera cam{fitted[i].rotation_raw, fitted[i].scale,
                                            fitted[i].translation};
            const auto pixels = project(pb.vertices, cam);
            report.per_pixel += per_pixel_error(pixels, (*annotations)[i].dense);
            ++pixel_count;
        }
    }
    report.mpjpe_mm /= report.count;
    report.per_vertex_mm /= report.count;
    if (pixel_count > 0) report.per_pixel /= pixel_count;
    return report;
}

}  // namespace bodyfit
