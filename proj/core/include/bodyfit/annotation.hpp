#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bodyfit/body_model.hpp"
#include "bodyfit/body_template.hpp"

namespace bodyfit {

// DensePose-style raw annotation point: pixel plus part-chart UV.
struct DenseRawPoint {
    Vec2<double> pixel;
    int part = 0;         // in [0, 24)
    Vec2<double> uv{};    // in [0,1]^2
};

// Resolved correspondence: pixel paired with a template vertex.
struct DensePoint {
    Vec2<double> pixel;
    int vertex = 0;
};

struct Keypoint2D {
    Vec2<double> pos;
    bool visible = true;
};

// Everything known about one image: dense correspondences, 2D keypoints and
// (optionally) prior depths. gan_depths are root-centered pixels; empty means
// absent.
struct SampleAnnotation {
    std::string id;
    std::vector<DensePoint> dense;
    std::vector<Keypoint2D> keypoints;
    std::vector<double> gan_depths;
    int width = 0;
    int height = 0;

    bool has_gan_depths() const { return !gan_depths.empty(); }
};

// Nearest vertex in the part's UV chart, Euclidean in UV; ties go to the
// smallest vertex index. Empty chart -> ContractViolation.
int uv_to_vertex(const DenseRawPoint& raw, const BodyTemplate& tpl, const PartCharts& charts);
int uv_to_vertex(const DenseRawPoint& raw, const BodyTemplate& tpl);

// Annotation JSON: {dense: [[px,py,idx];...] or [[px,py,part,u,v];...],
// keypoints: [[x,y,visible];...], gan_depths: [...]|null, width, height}.
// Raw five-element dense entries are resolved through the template's charts.
SampleAnnotation load_annotation(const std::string& path, const BodyTemplate& tpl);
void save_annotation(const SampleAnnotation& anno, const std::string& path);

// DensePose-like pixel grid {width, height, grid: [[part,u,v] row-major]}
// (part -1 = background), subsampled with a uniform stride to at most
// max_points raw points.
std::vector<DenseRawPoint> load_densepose_grid(const std::string& path, int max_points = 512);

// Body parameter JSON round trip.
BodyParams load_params(const std::string& path);
void save_params(const BodyParams& params, const std::string& path);

// Id-keyed parameter store ({"samples": {id: params, ...}}), returned sorted
// by id.
std::vector<std::pair<std::string, BodyParams>> load_params_map(const std::string& path);
void save_params_map(const std::vector<std::pair<std::string, BodyParams>>& items,
                     const std::string& path);

}  // namespace bodyfit
