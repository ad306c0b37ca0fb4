#pragma once

#include <span>
#include <string>
#include <vector>

#include "bodyfit/annotation.hpp"
#include "bodyfit/body_model.hpp"

namespace bodyfit {

// Mean per-joint position error. Both skeletons are rescaled so their total
// bone length matches the canonical lengths (entry per joint, root ignored),
// then root-aligned; the result is the mean joint distance in the canonical
// units. Rescaling both sides makes the metric scale-free.
double mpjpe(std::span<const Vec3<double>> pred, std::span<const Vec3<double>> gt,
             std::span<const int> parents, std::span<const double> canonical_lengths,
             int root = 0);

// MPJPE in millimeters for two parameter sets on the same template (template
// units are meters; canonical lengths are the rest bone lengths).
double mpjpe_mm(const BodyTemplate& tpl, const BodyParams& pred, const BodyParams& gt);

// Optimal similarity alignment (rotation restricted to det +1, scale,
// translation) of pred onto gt, then mean per-point distance in gt units.
double procrustes_vertex_error(std::span<const Vec3<double>> pred,
                               std::span<const Vec3<double>> gt);

// Mean 2D distance between paired projections.
double per_pixel_error(std::span<const Vec2<double>> pred, std::span<const Vec2<double>> gt);

// Mean 2D distance between annotated pixels and the projected matched
// vertices (pred_pixels indexed by vertex).
double per_pixel_error(std::span<const Vec2<double>> pred_pixels,
                       const std::vector<DensePoint>& dense);

struct EvalReport {
    double mpjpe_mm = 0.0;
    double per_vertex_mm = 0.0;
    double per_pixel = 0.0;
    int count = 0;

    static std::string csv_header();
    std::string csv_row() const;
    std::string to_json() const;
};

// Sample-averaged metrics of fitted parameters against ground truth; the
// per-pixel term uses each sample's dense correspondences when given.
EvalReport evaluate_fits(const BodyTemplate& tpl, std::span<const BodyParams> fitted,
                         std::span<const BodyParams> truth,
                         const std::vector<SampleAnnotation>* annotations = nullptr);

}  // namespace bodyfit
