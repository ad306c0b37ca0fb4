#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"

#include "bodyfit/body_template.hpp"
#include "bodyfit/geom.hpp"
#include "bodyfit/metrics.hpp"
#include "bodyfit/synth.hpp"

using namespace bodyfit;

namespace {

const BodyTemplate& tpl() {
    static const BodyTemplate t = builtin_humanoid();
    return t;
}

std::vector<Vec3<double>> random_cloud(std::mt19937_64& rng, int n, double radius = 1.0) {
    std::uniform_real_distribution<double> U(-radius, radius);
    std::vector<Vec3<double>> pts(n);
    for (auto& p : pts) p = {U(rng), U(rng), U(rng)};
    return pts;
}

std::array<Vec3<double>, BodyTemplate::kNumJoints> posed_joints(const BodyParams& p) {
    return pose_body(tpl(), p).joints;
}

std::vector<double> canonical_lengths() {
    std::vector<double> l(BodyTemplate::kNumJoints, 0.0);
    for (int j = 1; j < BodyTemplate::kNumJoints; ++j) l[j] = norm(tpl().rest_offsets[j]);
    return l;
}

}  // namespace

TEST_CASE("mpjpe: doubling every joint position is invisible after rescaling") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> A(-0.5, 0.5);
    BodyParams p = BodyParams::t_pose();
    for (auto& a : p.pose) a = {A(rng), A(rng), A(rng)};

    const auto gt = posed_joints(p);
    std::vector<Vec3<double>> pred(gt.begin(), gt.end());
    for (auto& j : pred) j = 2.0 * j;

    const auto canon = canonical_lengths();
    const std::vector<Vec3<double>> gtv(gt.begin(), gt.end());
    const std::vector<int> parents(tpl().parents.begin(), tpl().parents.end());
    CHECK(mpjpe(pred, gtv, parents, canon) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mpjpe_mm: identity and uniform-scale invariance") {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> A(-0.5, 0.5);
    BodyParams p = BodyParams::t_pose();
    for (auto& a : p.pose) a = {A(rng), A(rng), A(rng)};

    CHECK(mpjpe_mm(tpl(), p, p) == doctest::Approx(0.0).epsilon(1e-12));

    BodyParams doubled = p;
    for (auto& s : doubled.scales) s *= 2.0;
    CHECK(mpjpe_mm(tpl(), doubled, p) < 1e-9);

    // Camera parameters never enter the metric.
    BodyParams moved = p;
    moved.scale = 321.0;
    moved.translation = {40.0, -17.0};
    CHECK(mpjpe_mm(tpl(), moved, p) < 1e-9);
}

TEST_CASE("procrustes_vertex_error: exact under any similarity transform") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto gt = random_cloud(rng, 60);
        const Mat3<double> R = rodrigues(Vec3<double>{2.0 * U(rng), 2.0 * U(rng), 2.0 * U(rng)});
        const double s = 0.3 + 2.0 * std::abs(U(rng));
        const Vec3<double> t{U(rng), U(rng), U(rng)};
        std::vector<Vec3<double>> pred(gt.size());
        for (std::size_t i = 0; i < gt.size(); ++i) pred[i] = s * (R * gt[i]) + t;
        CHECK(procrustes_vertex_error(pred, gt) < 1e-9);
    }
}

TEST_CASE("procrustes_vertex_error: matches the expected noise magnitude") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> N(0.0, 0.01);
    const auto gt = random_cloud(rng, 800);
    std::vector<Vec3<double>> pred = gt;
    double mean_norm = 0.0;
    for (auto& p : pred) {
        const Vec3<double> n{N(rng), N(rng), N(rng)};
        p = p + n;
        mean_norm += norm(n);
    }
    mean_norm /= (double)pred.size();
    const double err = procrustes_vertex_error(pred, gt);
    CHECK(err == doctest::Approx(mean_norm).epsilon(0.1));
    CHECK(err > 0.0);
}

TEST_CASE("procrustes_vertex_error: reflections are not free") {
    std::mt19937_64 rng(23);
    auto gt = random_cloud(rng, 50);
    gt.push_back({3.0, 0.1, 0.2});  // break any accidental symmetry
    std::vector<Vec3<double>> pred = gt;
    for (auto& p : pred) p.x = -p.x;
    CHECK(procrustes_vertex_error(pred, gt) > 1e-3);
}

TEST_CASE("procrustes_vertex_error: alignment never hurts") {
    std::mt19937_64 rng(24);
    for (int rep = 0; rep < 10; ++rep) {
        const auto gt = random_cloud(rng, 40);
        auto pred = random_cloud(rng, 40);
        double raw = 0.0;
        for (std::size_t i = 0; i < gt.size(); ++i) raw += norm(pred[i] - gt[i]);
        raw /= (double)gt.size();
        CHECK(procrustes_vertex_error(pred, gt) <= raw + 1e-12);
    }
}

TEST_CASE("per_pixel_error: the 3-4-5 oracle in both overloads") {
    std::vector<Vec2<double>> gt{{10.0, 20.0}, {30.0, 40.0}};
    std::vector<Vec2<double>> pred{{13.0, 24.0}, {33.0, 44.0}};
    CHECK(per_pixel_error(pred, gt) == doctest::Approx(5.0).epsilon(1e-12));

    std::vector<Vec2<double>> pixels(5, Vec2<double>{0.0, 0.0});
    pixels[2] = {3.0, 4.0};
    std::vector<DensePoint> dense{{{0.0, 0.0}, 2}};
    CHECK(per_pixel_error(pixels, dense) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("evaluate_fits: zero against itself, report shape") {
    SynthConfig cfg;
    cfg.count = 3;
    cfg.dense_points = 60;
    cfg.seed = 31;
    const KeypointMap& map = KeypointMap::standard16();
    const SynthDataset data = synth_dataset(tpl(), map, cfg);

    const EvalReport self = evaluate_fits(tpl(), data.truth, data.truth, &data.samples);
    CHECK(self.count == 3);
    CHECK(self.mpjpe_mm == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(self.per_vertex_mm == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(self.per_pixel == doctest::Approx(0.0).epsilon(1e-9));

    // Perturbed fits score worse than the truth on every column.
    std::vector<BodyParams> bad = data.truth;
    for (auto& p : bad)
        for (auto& a : p.pose) a.x += 0.15;
    const EvalReport worse = evaluate_fits(tpl(), bad, data.truth, &data.samples);
    CHECK(worse.mpjpe_mm > 1.0);
    CHECK(worse.per_vertex_mm > 1.0);
    CHECK(worse.per_pixel > 0.1);

    const std::string header = EvalReport::csv_header();
    const std::string row = worse.csv_row();
    CHECK(header.find("mpjpe_mm") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    CHECK(worse.to_json().find("mpjpe_mm") != std::string::npos);
}
