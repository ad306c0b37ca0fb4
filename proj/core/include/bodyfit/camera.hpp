#pragma once

#include <span>
#include <vector>

#include "bodyfit/geom.hpp"

namespace bodyfit {

// Weak perspective: orthonormalize the stored rotation, rotate, drop z,
// scale, translate. Image x grows right, y grows down, origin at the crop's
// top-left; the camera looks along +z.
struct WeakPerspectiveCamera {
    Mat3<double> rotation_raw = mat3_identity();
    double scale = 1.0;
    Vec2<double> translation{};
};

// One rotated point split into its image position and camera-frame depth.
template <class T>
struct ViewedPoint {
    Vec2<T> image;
    T depth;
};

template <class T>
ViewedPoint<T> view_point(const Mat3<T>& R, const T& s, const Vec2<T>& t, const Vec3<T>& p) {
    const Vec3<T> q = R * p;
    return {{s * q.x + t.x, s * q.y + t.y}, s * q.z};
}

std::vector<Vec2<double>> project(std::span<const Vec3<double>> points,
                                  const WeakPerspectiveCamera& cam);

// Canonical front view: 180 degrees about x maps model-up (+y) to image-up
// (decreasing y) with the camera on the model's +z side.
inline Mat3<double> front_view_rotation() {
    Mat3<double> R;
    R.m = {1, 0, 0, 0, -1, 0, 0, 0, -1};
    return R;
}

}  // namespace bodyfit
