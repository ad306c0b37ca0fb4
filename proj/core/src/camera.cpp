#include "bodyfit/camera.hpp"

namespace bodyfit {

std::vector<Vec2<double>> project(std::span<const Vec3<double>> points,
                                  const WeakPerspectiveCamera& cam) {
    const Mat3<double> R = gram_schmidt(cam.rotation_raw);
    std::vector<Vec2<double>> out;
    out.reserve(points.size());
    for (const auto& p : points)
        out.push_back(view_point<double>(R, cam.scale, cam.translation, p).image);
    return out;
}

}  // namespace bodyfit
