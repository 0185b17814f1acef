#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace vekit {

constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    bool operator==(const Vec3&) const = default;
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

constexpr Vec3 hadamard(const Vec3& a, const Vec3& b) { return {a.x * b.x, a.y * b.y, a.z * b.z}; }

inline double length_sq(const Vec3& v) { return dot(v, v); }
inline double length(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 normalized(const Vec3& v) {
    double len = length(v);
    return len > 0.0 ? v / len : Vec3{};
}

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

inline Vec3 min_of(const Vec3& a, const Vec3& b) {
    return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}

inline Vec3 max_of(const Vec3& a, const Vec3& b) {
    return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}

inline Vec3 clamp_vec(const Vec3& v, const Vec3& lo, const Vec3& hi) {
    return {std::clamp(v.x, lo.x, hi.x), std::clamp(v.y, lo.y, hi.y), std::clamp(v.z, lo.z, hi.z)};
}

// Unit quaternion, scalar-first (w, x, y, z).
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    constexpr Quat() = default;
    constexpr Quat(double w_, double x_, double y_, double z_) : w(w_), x(x_), y(y_), z(z_) {}

    static constexpr Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }

    static Quat from_axis_angle(const Vec3& axis, double angle) {
        Vec3 a = normalized(axis);
        double h = 0.5 * angle;
        double s = std::sin(h);
        return {std::cos(h), a.x * s, a.y * s, a.z * s};
    }

    // Rotation about the +Y (vertical) axis.
    static Quat from_yaw(double yaw) {
        double h = 0.5 * yaw;
        return {std::cos(h), 0.0, std::sin(h), 0.0};
    }

    bool operator==(const Quat&) const = default;
};

inline Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

inline Quat conjugate(const Quat& q) { return {q.w, -q.x, -q.y, -q.z}; }

inline double norm(const Quat& q) { return std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z); }

inline Quat normalized(const Quat& q) {
    double n = norm(q);
    if (n <= 0.0) return Quat::identity();
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

inline bool is_unit(const Quat& q, double tol = 1e-6) { return std::abs(norm(q) - 1.0) <= tol; }

inline bool is_finite(const Quat& q) {
    return std::isfinite(q.w) && std::isfinite(q.x) && std::isfinite(q.y) && std::isfinite(q.z);
}

inline Vec3 rotate(const Quat& q, const Vec3& v) {
    // v' = v + 2 u x (u x v + w v), u = (x, y, z)
    Vec3 u{q.x, q.y, q.z};
    Vec3 t = cross(u, v) * 2.0;
    return v + t * q.w + cross(u, t);
}

// Row-major 3x3 matrix; used for inertia tensors and basis conversions.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static constexpr Mat3 zero() { return Mat3{{0, 0, 0, 0, 0, 0, 0, 0, 0}}; }
    static Mat3 diagonal(double a, double b, double c) { return Mat3{{a, 0, 0, 0, b, 0, 0, 0, c}}; }

    double operator()(int r, int c) const { return m[r * 3 + c]; }
    double& operator()(int r, int c) { return m[r * 3 + c]; }

    bool operator==(const Mat3&) const = default;
};

inline Vec3 operator*(const Mat3& a, const Vec3& v) {
    return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
            a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
            a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
    Mat3 r = Mat3::zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) r(i, j) += a(i, k) * b(k, j);
    return r;
}

inline Mat3 transposed(const Mat3& a) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = a(j, i);
    return r;
}

inline Mat3 to_mat3(const Quat& q) {
    double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    return Mat3{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy),
                 2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx),
                 2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
}

// Orthonormal column basis -> quaternion (Shepperd's method).
inline Quat quat_from_basis(const Vec3& xa, const Vec3& ya, const Vec3& za) {
    double m00 = xa.x, m01 = ya.x, m02 = za.x;
    double m10 = xa.y, m11 = ya.y, m12 = za.y;
    double m20 = xa.z, m21 = ya.z, m22 = za.z;
    double tr = m00 + m11 + m22;
    Quat q;
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q = {0.25 * s, (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s};
    } else if (m00 > m11 && m00 > m22) {
        double s = std::sqrt(1.0 + m00 - m11 - m22) * 2.0;
        q = {(m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s};
    } else if (m11 > m22) {
        double s = std::sqrt(1.0 + m11 - m00 - m22) * 2.0;
        q = {(m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s};
    } else {
        double s = std::sqrt(1.0 + m22 - m00 - m11) * 2.0;
        q = {(m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s};
    }
    return normalized(q);
}

// Local position/orientation/scale of a scene node.
struct Transform {
    Vec3 position{};
    Quat orientation = Quat::identity();
    Vec3 scale{1.0, 1.0, 1.0};

    static Transform identity() { return {}; }

    bool operator==(const Transform&) const = default;
};

// Parent-then-child composition. Scale composes component-wise and applies
// before rotation; non-uniform scale under rotation follows this convention.
inline Transform compose(const Transform& parent, const Transform& child) {
    Transform out;
    out.position = parent.position + rotate(parent.orientation, hadamard(parent.scale, child.position));
    out.orientation = parent.orientation * child.orientation;
    out.scale = hadamard(parent.scale, child.scale);
    return out;
}

inline Vec3 transform_point(const Transform& t, const Vec3& p) {
    return t.position + rotate(t.orientation, hadamard(t.scale, p));
}

struct AABB {
    Vec3 min{};
    Vec3 max{};

    static AABB empty() {
        constexpr double inf = std::numeric_limits<double>::infinity();
        return {{inf, inf, inf}, {-inf, -inf, -inf}};
    }

    bool valid() const { return min.x <= max.x && min.y <= max.y && min.z <= max.z; }
    Vec3 center() const { return (min + max) * 0.5; }
    Vec3 extents() const { return (max - min) * 0.5; }

    Vec3 corner(int i) const {
        return {(i & 1) ? max.x : min.x, (i & 2) ? max.y : min.y, (i & 4) ? max.z : min.z};
    }

    void expand(const Vec3& p) { min = min_of(min, p); max = max_of(max, p); }
    void expand(const AABB& b) { min = min_of(min, b.min); max = max_of(max, b.max); }

    AABB inflated(double r) const { return {min - Vec3{r, r, r}, max + Vec3{r, r, r}}; }

    bool operator==(const AABB&) const = default;
};

// Closed-interval overlap: touching boxes count.
inline bool overlaps(const AABB& a, const AABB& b) {
    return a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y &&
           a.min.z <= b.max.z && b.min.z <= a.max.z;
}

inline bool contains(const AABB& a, const Vec3& p) {
    return p.x >= a.min.x && p.x <= a.max.x && p.y >= a.min.y && p.y <= a.max.y && p.z >= a.min.z &&
           p.z <= a.max.z;
}

inline AABB union_of(const AABB& a, const AABB& b) {
    return {min_of(a.min, b.min), max_of(a.max, b.max)};
}

// Shortest decimal form that round-trips binary64; the canonical number
// format for serialized scenes, traces, and digests. Negative zero collapses
// to "0" so digests never depend on its sign.
inline std::string format_double(double v) {
    if (v == 0.0) return "0";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

inline bool parse_long(std::string_view text, long& out) {
    const char* first = text.data();
    const char* last = first + text.size();
    auto res = std::from_chars(first, last, out);
    return res.ec == std::errc{} && res.ptr == last;
}

}  // namespace vekit
