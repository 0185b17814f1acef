#pragma once

// Brute-force and closed-form oracles, kept independent of the library
// implementations they check. Everything here recomputes from first
// principles; nothing calls the traversal or solver code under test.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "vekit/math.hpp"
#include "vekit/shapes.hpp"
#include "vekit/spatial.hpp"

namespace vetest {

// --- 4x4 matrix oracle for transform composition ----------------------------

struct Mat4 {
    std::array<double, 16> m{};

    static Mat4 identity() {
        Mat4 r;
        r.m = {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
        return r;
    }

    double operator()(int r, int c) const { return m[r * 4 + c]; }
    double& operator()(int r, int c) { return m[r * 4 + c]; }
};

inline Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0;
            for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

// T * R * S, built from scratch (quaternion -> matrix by the textbook formula).
inline Mat4 matrix_of(const vekit::Transform& t) {
    const vekit::Quat& q = t.orientation;
    double xx = q.x * q.x, yy = q.y * q.y, zz = q.z * q.z;
    double xy = q.x * q.y, xz = q.x * q.z, yz = q.y * q.z;
    double wx = q.w * q.x, wy = q.w * q.y, wz = q.w * q.z;
    double r[3][3] = {{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
                      {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
                      {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}};
    double s[3] = {t.scale.x, t.scale.y, t.scale.z};
    Mat4 out = Mat4::identity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) out(i, j) = r[i][j] * s[j];
    out(0, 3) = t.position.x;
    out(1, 3) = t.position.y;
    out(2, 3) = t.position.z;
    return out;
}

inline vekit::Vec3 apply_point(const Mat4& m, const vekit::Vec3& p) {
    return {m(0, 0) * p.x + m(0, 1) * p.y + m(0, 2) * p.z + m(0, 3),
            m(1, 0) * p.x + m(1, 1) * p.y + m(1, 2) * p.z + m(1, 3),
            m(2, 0) * p.x + m(2, 1) * p.y + m(2, 2) * p.z + m(2, 3)};
}

// --- spatial oracles ---------------------------------------------------------

// Per-object p-vertex plane test, written out directly.
inline bool oracle_box_in_frustum(const vekit::Frustum& f, const vekit::AABB& box) {
    for (const vekit::Plane& plane : f.planes) {
        vekit::Vec3 p;
        p.x = plane.normal.x >= 0 ? box.max.x : box.min.x;
        p.y = plane.normal.y >= 0 ? box.max.y : box.min.y;
        p.z = plane.normal.z >= 0 ? box.max.z : box.min.z;
        if (vekit::dot(plane.normal, p) + plane.d < 0.0) return false;
    }
    return true;
}

inline std::vector<vekit::ObjectId> oracle_frustum_set(const std::vector<vekit::IndexedBox>& objects,
                                                       const vekit::Frustum& f) {
    std::vector<vekit::ObjectId> out;
    for (const auto& ob : objects)
        if (oracle_box_in_frustum(f, ob.box)) out.push_back(ob.id);
    std::sort(out.begin(), out.end());
    return out;
}

// Independent slab test.
inline bool oracle_ray_box(const vekit::Vec3& o, const vekit::Vec3& d, double max_t,
                           const vekit::AABB& box, double& t_out) {
    double tmin = 0.0, tmax = max_t;
    for (int i = 0; i < 3; ++i) {
        double oi = i == 0 ? o.x : (i == 1 ? o.y : o.z);
        double di = i == 0 ? d.x : (i == 1 ? d.y : d.z);
        double lo = i == 0 ? box.min.x : (i == 1 ? box.min.y : box.min.z);
        double hi = i == 0 ? box.max.x : (i == 1 ? box.max.y : box.max.z);
        if (di == 0.0) {
            if (oi < lo || oi > hi) return false;
        } else {
            double t1 = (lo - oi) / di, t2 = (hi - oi) / di;
            if (t1 > t2) std::swap(t1, t2);
            tmin = std::max(tmin, t1);
            tmax = std::min(tmax, t2);
            if (tmin > tmax) return false;
        }
    }
    t_out = tmin;
    return true;
}

inline std::vector<vekit::RayHit> oracle_ray_hits(const std::vector<vekit::IndexedBox>& objects,
                                                  const vekit::Vec3& o, const vekit::Vec3& d,
                                                  double max_t) {
    std::vector<vekit::RayHit> out;
    for (const auto& ob : objects) {
        double t;
        if (oracle_ray_box(o, d, max_t, ob.box, t)) out.push_back({ob.id, t});
    }
    std::sort(out.begin(), out.end(), [](const vekit::RayHit& a, const vekit::RayHit& b) {
        if (a.t_enter != b.t_enter) return a.t_enter < b.t_enter;
        return a.id < b.id;
    });
    return out;
}

// --- narrowphase oracles -------------------------------------------------------

// Point-to-box distance in box-local coordinates, written out directly.
inline double oracle_point_box_distance(const vekit::Vec3& p_local, const vekit::Vec3& half) {
    double dx = std::max({p_local.x - half.x, -half.x - p_local.x, 0.0});
    double dy = std::max({p_local.y - half.y, -half.y - p_local.y, 0.0});
    double dz = std::max({p_local.z - half.z, -half.z - p_local.z, 0.0});
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Dense sampling of the segment parameter plus golden-section refinement.
inline double oracle_segment_box_distance(const vekit::Vec3& s0_local, const vekit::Vec3& s1_local,
                                          const vekit::Vec3& half) {
    auto f = [&](double t) {
        return oracle_point_box_distance(s0_local + (s1_local - s0_local) * t, half);
    };
    double best_t = 0.0, best = f(0.0);
    const int samples = 2000;
    for (int i = 1; i <= samples; ++i) {
        double t = double(i) / samples;
        double d = f(t);
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    double lo = std::max(0.0, best_t - 1.0 / samples);
    double hi = std::min(1.0, best_t + 1.0 / samples);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = f(x1), f2 = f(x2);
    for (int i = 0; i < 200; ++i) {
        if (f1 > f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        }
    }
    return std::min({best, f1, f2});
}

// SAT penetration for a segment against a box (complete axis set: the 3 face
// normals plus cross products of the box edges with the segment direction).
inline double oracle_segment_box_penetration(const vekit::Vec3& s0_local, const vekit::Vec3& s1_local,
                                             const vekit::Vec3& half) {
    using vekit::Vec3;
    Vec3 mid = (s0_local + s1_local) * 0.5;
    Vec3 hs = (s1_local - s0_local) * 0.5;
    double best = std::numeric_limits<double>::infinity();
    auto axis_overlap = [&](Vec3 u) {
        double len = vekit::length(u);
        if (len < 1e-12) return;
        u = u / len;
        double rb = std::abs(u.x) * half.x + std::abs(u.y) * half.y + std::abs(u.z) * half.z;
        double rs = std::abs(vekit::dot(hs, u));
        double overlap = rb + rs - std::abs(vekit::dot(mid, u));
        best = std::min(best, overlap);
    };
    axis_overlap({1, 0, 0});
    axis_overlap({0, 1, 0});
    axis_overlap({0, 0, 1});
    Vec3 d = s1_local - s0_local;
    axis_overlap(vekit::cross(Vec3{1, 0, 0}, d));
    axis_overlap(vekit::cross(Vec3{0, 1, 0}, d));
    axis_overlap(vekit::cross(Vec3{0, 0, 1}, d));
    return best;
}

// Full 15-axis OBB SAT. Returns separation (negative overlap) or penetration
// depth; `separated` reports whether any axis separates the boxes.
inline double oracle_box_box_sat(const vekit::Pose3& pa, const vekit::Vec3& ha, const vekit::Pose3& pb,
                                 const vekit::Vec3& hb, bool& separated) {
    using vekit::Vec3;
    Vec3 axes_a[3] = {vekit::rotate(pa.orientation, {1, 0, 0}), vekit::rotate(pa.orientation, {0, 1, 0}),
                      vekit::rotate(pa.orientation, {0, 0, 1})};
    Vec3 axes_b[3] = {vekit::rotate(pb.orientation, {1, 0, 0}), vekit::rotate(pb.orientation, {0, 1, 0}),
                      vekit::rotate(pb.orientation, {0, 0, 1})};
    Vec3 delta = pb.position - pa.position;
    separated = false;
    double min_overlap = std::numeric_limits<double>::infinity();
    auto test_axis = [&](Vec3 u) {
        double len = vekit::length(u);
        if (len < 1e-12) return;
        u = u / len;
        double ra = std::abs(vekit::dot(axes_a[0], u)) * ha.x + std::abs(vekit::dot(axes_a[1], u)) * ha.y +
                    std::abs(vekit::dot(axes_a[2], u)) * ha.z;
        double rb = std::abs(vekit::dot(axes_b[0], u)) * hb.x + std::abs(vekit::dot(axes_b[1], u)) * hb.y +
                    std::abs(vekit::dot(axes_b[2], u)) * hb.z;
        double overlap = ra + rb - std::abs(vekit::dot(delta, u));
        if (overlap < 0.0) separated = true;
        min_overlap = std::min(min_overlap, overlap);
    };
    for (const Vec3& u : axes_a) test_axis(u);
    for (const Vec3& u : axes_b) test_axis(u);
    for (const Vec3& u : axes_a)
        for (const Vec3& v : axes_b) test_axis(vekit::cross(u, v));
    return min_overlap;
}

// O(n^2) closed-interval pair scan.
inline std::vector<std::pair<vekit::ObjectId, vekit::ObjectId>> oracle_pairs(
    const std::vector<vekit::IndexedBox>& objects) {
    std::vector<std::pair<vekit::ObjectId, vekit::ObjectId>> out;
    for (std::size_t i = 0; i < objects.size(); ++i) {
        for (std::size_t j = i + 1; j < objects.size(); ++j) {
            const vekit::AABB& a = objects[i].box;
            const vekit::AABB& b = objects[j].box;
            bool hit = a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y &&
                       b.min.y <= a.max.y && a.min.z <= b.max.z && b.min.z <= a.max.z;
            if (hit) {
                auto lo = std::min(objects[i].id, objects[j].id);
                auto hi = std::max(objects[i].id, objects[j].id);
                out.emplace_back(lo, hi);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace vetest
