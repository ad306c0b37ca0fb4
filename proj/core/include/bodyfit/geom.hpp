#pragma once

#include <array>
#include <cmath>
#include <type_traits>

#include "bodyfit/ad/tape.hpp"
#include "bodyfit/errors.hpp"

// Small fixed-size linear algebra usable with plain doubles and with tape
// values. Unqualified math calls resolve to the shims below for double and to
// the ad:: overloads for Value.

namespace bodyfit {

inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double sin(double x) { return std::sin(x); }
inline double cos(double x) { return std::cos(x); }
inline double sqrt(double x) { return std::sqrt(x); }
inline double square(double x) { return x * x; }

// Numeric payload of a scalar, used for value-dependent branches and checks.
inline double scalar_value(double x) { return x; }
inline double scalar_value(ad::Value x) { return x.value(); }

template <class T>
struct Vec2 {
    T x{}, y{};
};

template <class T>
struct Vec3 {
    T x{}, y{}, z{};
};

template <class T>
Vec2<T> operator+(const Vec2<T>& a, const Vec2<T>& b) { return {a.x + b.x, a.y + b.y}; }
template <class T>
Vec2<T> operator-(const Vec2<T>& a, const Vec2<T>& b) { return {a.x - b.x, a.y - b.y}; }
template <class T>
T squared_norm(const Vec2<T>& a) { return a.x * a.x + a.y * a.y; }

template <class T>
Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
template <class T>
Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
template <class T>
Vec3<T> operator*(const T& s, const Vec3<T>& a) { return {s * a.x, s * a.y, s * a.z}; }
template <class T>
    requires(!std::is_same_v<T, double>)
Vec3<T> operator*(double s, const Vec3<T>& a) { return {s * a.x, s * a.y, s * a.z}; }
template <class T>
T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
template <class T>
T squared_norm(const Vec3<T>& a) { return dot(a, a); }
template <class T>
T norm(const Vec3<T>& a) { return sqrt(squared_norm(a)); }
template <class T>
Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// Row-major 3x3.
template <class T>
struct Mat3 {
    std::array<T, 9> m{};

    T& operator()(int r, int c) { return m[3 * r + c]; }
    const T& operator()(int r, int c) const { return m[3 * r + c]; }

    Vec3<T> col(int c) const { return {m[c], m[3 + c], m[6 + c]}; }
    void set_col(int c, const Vec3<T>& v) {
        m[c] = v.x;
        m[3 + c] = v.y;
        m[6 + c] = v.z;
    }
};

template <class T>
Vec3<T> operator*(const Mat3<T>& A, const Vec3<T>& v) {
    return {A.m[0] * v.x + A.m[1] * v.y + A.m[2] * v.z,
            A.m[3] * v.x + A.m[4] * v.y + A.m[5] * v.z,
            A.m[6] * v.x + A.m[7] * v.y + A.m[8] * v.z};
}

template <class T>
Mat3<T> operator*(const Mat3<T>& A, const Mat3<T>& B) {
    Mat3<T> C;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            C(r, c) = A(r, 0) * B(0, c) + A(r, 1) * B(1, c) + A(r, 2) * B(2, c);
    return C;
}

template <class T>
Mat3<T> transpose(const Mat3<T>& A) {
    Mat3<T> B;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) B(r, c) = A(c, r);
    return B;
}

template <class T>
T det(const Mat3<T>& A) {
    return dot(A.col(0), cross(A.col(1), A.col(2)));
}

inline Mat3<double> mat3_identity() {
    Mat3<double> I;
    I.m = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    return I;
}

// Rigid/affine frame y = R x + t.
template <class T>
struct Frame {
    Mat3<T> R;
    Vec3<T> t;

    Vec3<T> apply(const Vec3<T>& x) const { return R * x + t; }
};

template <class T>
Frame<T> compose(const Frame<T>& a, const Frame<T>& b) {
    return {a.R * b.R, a.R * b.t + a.t};
}

// Axis-angle to rotation matrix. Switches to the series form of the two
// Rodrigues coefficients near zero so the expression stays smooth in the
// components (no sqrt of a vanishing argument).
template <class T>
Mat3<T> rodrigues(const Vec3<T>& a) {
    const T q = squared_norm(a);
    T c1, c2;
    if (scalar_value(q) < 1e-8) {
        c1 = 1.0 - q / 6.0 + q * q / 120.0;
        c2 = 0.5 - q / 24.0 + q * q / 720.0;
    } else {
        const T th = sqrt(q);
        c1 = sin(th) / th;
        c2 = (1.0 - cos(th)) / q;
    }
    const T ax[3] = {a.x, a.y, a.z};
    Mat3<T> R;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T v = c2 * (ax[i] * ax[j]);
            if (i == j) v = v + (1.0 - c2 * q);
            R(i, j) = v;
        }
    // c1 * K, K = skew(a)
    R(0, 1) = R(0, 1) - c1 * a.z;
    R(0, 2) = R(0, 2) + c1 * a.y;
    R(1, 0) = R(1, 0) + c1 * a.z;
    R(1, 2) = R(1, 2) - c1 * a.x;
    R(2, 0) = R(2, 0) - c1 * a.y;
    R(2, 1) = R(2, 1) + c1 * a.x;
    return R;
}

// Classical Gram-Schmidt on columns, orientation preserving. The third
// column is computed in its closed form sign(c·m2)·c with c = u0 x u1 (equal
// to the subtract-and-normalize form in exact arithmetic, but without the
// catastrophic cancellation that otherwise turns the column's analytically
// zero sensitivity to m2 into finite-difference noise). Rank deficiency
// (pivot norm < 1e-10) raises DegenerateInput.
template <class T>
Mat3<T> gram_schmidt(const Mat3<T>& M) {
    const auto degenerate = [] {
        return DegenerateInput("gram_schmidt: rank-deficient matrix (pivot norm < 1e-10)");
    };
    Vec3<T> u0 = M.col(0);
    const T n0 = squared_norm(u0);
    if (scalar_value(n0) < 1e-20) throw degenerate();
    u0 = (1.0 / sqrt(n0)) * u0;

    Vec3<T> u1 = M.col(1) - dot(u0, M.col(1)) * u0;
    const T n1 = squared_norm(u1);
    if (scalar_value(n1) < 1e-20) throw degenerate();
    u1 = (1.0 / sqrt(n1)) * u1;

    const Vec3<T> c = cross(u0, u1);  // unit for orthonormal u0, u1
    const double pivot2 = scalar_value(dot(c, M.col(2)));
    if (pivot2 > -1e-10 && pivot2 < 1e-10) throw degenerate();
    const Vec3<T> u2 = (pivot2 > 0.0 ? 1.0 : -1.0) * c;

    Mat3<T> Q;
    Q.set_col(0, u0);
    Q.set_col(1, u1);
    Q.set_col(2, u2);
    return Q;
}

// Unit quaternion (w, x, y, z), canonical sign w >= 0.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

Quaternion axis_angle_to_quaternion(const Vec3<double>& a);
Vec3<double> quaternion_to_axis_angle(const Quaternion& q);

// Rotation matrix from a (not necessarily unit) quaternion; normalizes first.
template <class T>
Mat3<T> quaternion_to_matrix(const T& qw, const T& qx, const T& qy, const T& qz) {
    const T n2 = qw * qw + qx * qx + qy * qy + qz * qz;
    if (scalar_value(n2) < 1e-24)
        throw ContractViolation("quaternion_to_matrix: zero-norm quaternion");
    const T inv = 1.0 / sqrt(n2);
    const T w = inv * qw, x = inv * qx, y = inv * qy, z = inv * qz;
    Mat3<T> R;
    R(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    R(0, 1) = 2.0 * (x * y - w * z);
    R(0, 2) = 2.0 * (x * z + w * y);
    R(1, 0) = 2.0 * (x * y + w * z);
    R(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    R(1, 2) = 2.0 * (y * z - w * x);
    R(2, 0) = 2.0 * (x * z - w * y);
    R(2, 1) = 2.0 * (y * z + w * x);
    R(2, 2) = 1.0 - 2.0 * (x * x + y * y);
    return R;
}

}  // namespace bodyfit
