#include "bodyfit/geom.hpp"

namespace bodyfit {

Quaternion axis_angle_to_quaternion(const Vec3<double>& a) {
    const double q = squared_norm(a);
    double half_sinc;  // sin(th/2)/th
    double w;
    if (q < 1e-14) {
        half_sinc = 0.5 - q / 48.0;
        w = 1.0 - q / 8.0;
    } else {
        const double th = std::sqrt(q);
        half_sinc = std::sin(0.5 * th) / th;
        w = std::cos(0.5 * th);
    }
    Quaternion out{w, half_sinc * a.x, half_sinc * a.y, half_sinc * a.z};
    if (out.w < 0.0) {
        out.w = -out.w;
        out.x = -out.x;
        out.y = -out.y;
        out.z = -out.z;
    }
    return out;
}

Vec3<double> quaternion_to_axis_angle(const Quaternion& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (n < 1e-12) throw ContractViolation("quaternion_to_axis_angle: zero-norm quaternion");
    double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;
    if (w < 0.0) {
        w = -w;
        x = -x;
        y = -y;
        z = -z;
    }
    const double sin_half = std::sqrt(x * x + y * y + z * z);
    if (sin_half < 1e-12) return {0.0, 0.0, 0.0};
    const double angle = 2.0 * std::atan2(sin_half, w);  // in [0, pi] for w >= 0
    const double k = angle / sin_half;
    return {k * x, k * y, k * z};
}

}  // namespace bodyfit
