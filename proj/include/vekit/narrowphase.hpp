#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/shapes.hpp"

namespace vekit {

struct UnsupportedPair : Error {
    explicit UnsupportedPair(const std::string& msg) : Error(msg) {}
};

// Single deepest contact; normal points from shape A toward shape B.
struct ContactPoint {
    Vec3 point{};
    Vec3 normal{0, 1, 0};
    double depth = 0.0;
};

struct DistanceResult {
    double distance = 0.0;  // gap between surfaces, clamped at 0
    Vec3 point_on_a{};
    Vec3 point_on_b{};
    // unit direction from B's surface toward A, derived from the core witness
    // points so it stays valid at zero surface gap; zero when the cores overlap
    Vec3 normal{};
};

namespace narrow_detail {

// -- closest-point primitives ------------------------------------------------

inline Vec3 closest_on_segment(const Vec3& a, const Vec3& b, const Vec3& p, double& t) {
    Vec3 ab = b - a;
    double denom = dot(ab, ab);
    t = denom > 0 ? std::clamp(dot(p - a, ab) / denom, 0.0, 1.0) : 0.0;
    return a + ab * t;
}

// Ericson: closest points between segments p1q1 and p2q2.
inline void closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2,
                                    Vec3& c1, Vec3& c2) {
    Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
    double s = 0.0, t = 0.0;
    if (a <= 1e-30 && e <= 1e-30) {
        c1 = p1;
        c2 = p2;
        return;
    }
    if (a <= 1e-30) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        double c = dot(d1, r);
        if (e <= 1e-30) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            double b = dot(d1, d2);
            double denom = a * e - b * b;
            s = denom > 1e-30 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    c1 = p1 + d1 * s;
    c2 = p2 + d2 * t;
}

// Ericson: closest point on triangle abc to point p.
inline Vec3 closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& p) {
    Vec3 ab = b - a, ac = c - a, ap = p - a;
    double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;
    Vec3 bp = p - b;
    double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));
    Vec3 cp = p - c;
    double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

// Closest points between a segment and a triangle. Returns the squared
// distance; 0 when the segment crosses the triangle interior.
inline double closest_segment_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                                       const Vec3& c, Vec3& on_seg, Vec3& on_tri) {
    // segment-plane crossing inside the triangle
    Vec3 n = cross(b - a, c - a);
    double nn = dot(n, n);
    if (nn > 1e-30) {
        double dp = dot(n, p - a), dq = dot(n, q - a);
        if ((dp <= 0.0 && dq >= 0.0) || (dp >= 0.0 && dq <= 0.0)) {
            double denom = dp - dq;
            if (std::abs(denom) > 1e-30) {
                double t = dp / denom;
                Vec3 hit = p + (q - p) * t;
                Vec3 cp = closest_on_triangle(a, b, c, hit);
                if (length_sq(cp - hit) < 1e-24) {
                    on_seg = hit;
                    on_tri = hit;
                    return 0.0;
                }
            }
        }
    }
    double best = std::numeric_limits<double>::infinity();
    Vec3 s1, s2;
    auto consider = [&](const Vec3& cs, const Vec3& ct) {
        double d2 = length_sq(cs - ct);
        if (d2 < best) {
            best = d2;
            s1 = cs;
            s2 = ct;
        }
    };
    Vec3 c1, c2;
    closest_segment_segment(p, q, a, b, c1, c2);
    consider(c1, c2);
    closest_segment_segment(p, q, b, c, c1, c2);
    consider(c1, c2);
    closest_segment_segment(p, q, c, a, c1, c2);
    consider(c1, c2);
    consider(p, closest_on_triangle(a, b, c, p));
    consider(q, closest_on_triangle(a, b, c, q));
    on_seg = s1;
    on_tri = s2;
    return best;
}

// -- support shapes ------------------------------------------------------------

struct ConvexPiece {
    enum class Kind { point, segment, box, hull, triangle };
    Kind kind = Kind::point;
    Vec3 a{}, b{}, c{};  // point/segment endpoints or triangle vertices, world space
    Pose3 pose;          // box/hull
    Vec3 half_extents{};
    const std::vector<Vec3>* hull = nullptr;
    double radius = 0.0;

    Vec3 support(const Vec3& dir) const {
        switch (kind) {
            case Kind::point:
                return a;
            case Kind::segment:
                return dot(dir, b - a) >= 0.0 ? b : a;
            case Kind::box: {
                Vec3 local = rotate(conjugate(pose.orientation), dir);
                Vec3 pick{local.x >= 0 ? half_extents.x : -half_extents.x,
                          local.y >= 0 ? half_extents.y : -half_extents.y,
                          local.z >= 0 ? half_extents.z : -half_extents.z};
                return pose.to_world(pick);
            }
            case Kind::hull: {
                Vec3 local = rotate(conjugate(pose.orientation), dir);
                const std::vector<Vec3>& verts = *hull;
                std::size_t best = 0;
                double best_dot = dot(verts[0], local);
                for (std::size_t i = 1; i < verts.size(); ++i) {
                    double d = dot(verts[i], local);
                    if (d > best_dot) {
                        best_dot = d;
                        best = i;
                    }
                }
                return pose.to_world(verts[best]);
            }
            case Kind::triangle: {
                double da = dot(a, dir), db = dot(b, dir), dc = dot(c, dir);
                if (da >= db && da >= dc) return a;
                return db >= dc ? b : c;
            }
        }
        return a;
    }

    Vec3 inner_point() const {
        switch (kind) {
            case Kind::point: return a;
            case Kind::segment: return (a + b) * 0.5;
            case Kind::triangle: return (a + b + c) / 3.0;
            default: return pose.position;
        }
    }
};

inline ConvexPiece make_piece(const CollisionShape& shape, const Pose3& pose) {
    ConvexPiece piece;
    if (const auto* s = std::get_if<SphereShape>(&shape)) {
        piece.kind = ConvexPiece::Kind::point;
        piece.a = pose.position;
        piece.radius = s->radius;
    } else if (const auto* cap = std::get_if<CapsuleShape>(&shape)) {
        piece.kind = ConvexPiece::Kind::segment;
        Vec3 axis = rotate(pose.orientation, {0, cap->half_height, 0});
        piece.a = pose.position - axis;
        piece.b = pose.position + axis;
        piece.radius = cap->radius;
    } else if (const auto* box = std::get_if<BoxShape>(&shape)) {
        piece.kind = ConvexPiece::Kind::box;
        piece.pose = pose;
        piece.half_extents = box->half_extents;
    } else if (const auto* hull = std::get_if<ConvexShape>(&shape)) {
        piece.kind = ConvexPiece::Kind::hull;
        piece.pose = pose;
        piece.hull = &hull->vertices;
    }
    return piece;
}

inline ConvexPiece triangle_piece(const Vec3& a, const Vec3& b, const Vec3& c) {
    ConvexPiece piece;
    piece.kind = ConvexPiece::Kind::triangle;
    piece.a = a;
    piece.b = b;
    piece.c = c;
    return piece;
}

// -- GJK distance ---------------------------------------------------------------

struct SupportVertex {
    Vec3 w{};   // minkowski point: sa - sb
    Vec3 pa{};  // witness on A core
    Vec3 pb{};  // witness on B core
};

inline SupportVertex minkowski_support(const ConvexPiece& a, const ConvexPiece& b, const Vec3& dir) {
    SupportVertex v;
    v.pa = a.support(dir);
    v.pb = b.support(-dir);
    v.w = v.pa - v.pb;
    return v;
}

struct GjkResult {
    bool overlapping = false;
    double distance = 0.0;  // between cores, 0 when overlapping
    Vec3 point_a{};
    Vec3 point_b{};
    std::array<SupportVertex, 4> simplex{};
    int simplex_size = 0;
};

// Closest point to the origin on the current simplex; reduces the simplex to
// the supporting feature and fills barycentric weights.
inline Vec3 simplex_closest(std::array<SupportVertex, 4>& sx, int& n, std::array<double, 4>& bary,
                            bool& contains_origin) {
    contains_origin = false;
    auto keep = [&](std::initializer_list<int> idx) {
        std::array<SupportVertex, 4> next{};
        int m = 0;
        for (int i : idx) next[m++] = sx[i];
        sx = next;
        n = m;
    };

    if (n == 1) {
        bary = {1, 0, 0, 0};
        return sx[0].w;
    }
    if (n == 2) {
        Vec3 a = sx[0].w, b = sx[1].w;
        Vec3 ab = b - a;
        double denom = dot(ab, ab);
        double t = denom > 0 ? -dot(a, ab) / denom : 0.0;
        if (t <= 0.0) {
            keep({0});
            bary = {1, 0, 0, 0};
            return a;
        }
        if (t >= 1.0) {
            keep({1});
            bary = {1, 0, 0, 0};
            return b;
        }
        bary = {1.0 - t, t, 0, 0};
        return a + ab * t;
    }
    if (n == 3) {
        Vec3 a = sx[0].w, b = sx[1].w, c = sx[2].w;
        Vec3 ab = b - a, ac = c - a;
        Vec3 ap = -a;
        double d1 = dot(ab, ap), d2 = dot(ac, ap);
        if (d1 <= 0.0 && d2 <= 0.0) {
            keep({0});
            bary = {1, 0, 0, 0};
            return a;
        }
        Vec3 bp = -b;
        double d3 = dot(ab, bp), d4 = dot(ac, bp);
        if (d3 >= 0.0 && d4 <= d3) {
            keep({1});
            bary = {1, 0, 0, 0};
            return b;
        }
        double vc = d1 * d4 - d3 * d2;
        if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
            double t = d1 / (d1 - d3);
            keep({0, 1});
            bary = {1.0 - t, t, 0, 0};
            return a + ab * t;
        }
        Vec3 cp = -c;
        double d5 = dot(ab, cp), d6 = dot(ac, cp);
        if (d6 >= 0.0 && d5 <= d6) {
            keep({2});
            bary = {1, 0, 0, 0};
            return c;
        }
        double vb = d5 * d2 - d1 * d6;
        if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
            double t = d2 / (d2 - d6);
            keep({0, 2});
            bary = {1.0 - t, t, 0, 0};
            return a + ac * t;
        }
        double va = d3 * d6 - d5 * d4;
        if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
            double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            keep({1, 2});
            bary = {1.0 - t, t, 0, 0};
            return b + (c - b) * t;
        }
        double denom = 1.0 / (va + vb + vc);
        double v = vb * denom, w = vc * denom;
        bary = {1.0 - v - w, v, w, 0};
        return a + ab * v + ac * w;
    }

    // tetrahedron
    Vec3 a = sx[0].w, b = sx[1].w, c = sx[2].w, d = sx[3].w;
    auto outside = [&](const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& opp) {
        Vec3 normal = cross(p1 - p0, p2 - p0);
        double sign_origin = dot(normal, -p0);
        double sign_opp = dot(normal, opp - p0);
        return sign_origin * sign_opp < 0.0 || std::abs(sign_opp) < 1e-30;
    };
    bool out_abc = outside(a, b, c, d);
    bool out_abd = outside(a, b, d, c);
    bool out_acd = outside(a, c, d, b);
    bool out_bcd = outside(b, c, d, a);
    if (!out_abc && !out_abd && !out_acd && !out_bcd) {
        contains_origin = true;
        bary = {0.25, 0.25, 0.25, 0.25};
        return Vec3{};
    }
    double best = std::numeric_limits<double>::infinity();
    std::array<SupportVertex, 4> best_sx = sx;
    int best_n = 0;
    std::array<double, 4> best_bary{};
    Vec3 best_point{};
    auto try_face = [&](int i0, int i1, int i2) {
        std::array<SupportVertex, 4> face{};
        face[0] = sx[i0];
        face[1] = sx[i1];
        face[2] = sx[i2];
        int m = 3;
        std::array<double, 4> fb{};
        bool dummy;
        Vec3 p = simplex_closest(face, m, fb, dummy);
        double d2 = dot(p, p);
        if (d2 < best) {
            best = d2;
            best_sx = face;
            best_n = m;
            best_bary = fb;
            best_point = p;
        }
    };
    if (out_abc) try_face(0, 1, 2);
    if (out_abd) try_face(0, 1, 3);
    if (out_acd) try_face(0, 2, 3);
    if (out_bcd) try_face(1, 2, 3);
    sx = best_sx;
    n = best_n;
    bary = best_bary;
    return best_point;
}

inline GjkResult gjk_distance(const ConvexPiece& a, const ConvexPiece& b) {
    GjkResult result;
    Vec3 dir = b.inner_point() - a.inner_point();
    if (length_sq(dir) < 1e-24) dir = {1, 0, 0};

    std::array<SupportVertex, 4> sx{};
    int n = 0;
    sx[n++] = minkowski_support(a, b, dir);
    Vec3 v = sx[0].w;
    std::array<double, 4> bary{1, 0, 0, 0};

    for (int iter = 0; iter < 128; ++iter) {
        double v2 = dot(v, v);
        if (v2 < 1e-24) {
            result.overlapping = true;
            break;
        }
        SupportVertex w = minkowski_support(a, b, -v);
        // no progress toward the origin: converged
        if (v2 - dot(v, w.w) <= 1e-12 * v2) break;
        bool duplicate = false;
        for (int i = 0; i < n; ++i)
            if (length_sq(sx[i].w - w.w) < 1e-28) duplicate = true;
        if (duplicate) break;
        sx[n++] = w;
        bool contains = false;
        v = simplex_closest(sx, n, bary, contains);
        if (contains) {
            result.overlapping = true;
            break;
        }
    }

    result.simplex = sx;
    result.simplex_size = n;
    if (!result.overlapping) {
        result.distance = std::sqrt(dot(v, v));
        Vec3 pa{}, pb{};
        for (int i = 0; i < n; ++i) {
            pa += sx[i].pa * bary[i];
            pb += sx[i].pb * bary[i];
        }
        result.point_a = pa;
        result.point_b = pb;
    }
    return result;
}

// -- EPA -------------------------------------------------------------------------

struct EpaResult {
    Vec3 normal{0, 1, 0};  // from A toward B (push B along it)
    double depth = 0.0;    // core penetration
    Vec3 point_a{};
    Vec3 point_b{};
    bool ok = false;
};

inline EpaResult epa_penetration(const ConvexPiece& a, const ConvexPiece& b, const GjkResult& seed) {
    EpaResult out;
    std::vector<SupportVertex> verts(seed.simplex.begin(), seed.simplex.begin() + seed.simplex_size);

    // grow a degenerate simplex to a tetrahedron
    auto add_unique = [&](const SupportVertex& v) {
        for (const SupportVertex& u : verts)
            if (length_sq(u.w - v.w) < 1e-24) return false;
        verts.push_back(v);
        return true;
    };
    const Vec3 axes[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    if (verts.size() < 2) {
        for (const Vec3& d : axes) {
            if (verts.size() >= 2) break;
            add_unique(minkowski_support(a, b, d));
        }
    }
    if (verts.size() >= 2 && verts.size() < 3) {
        Vec3 d = verts[1].w - verts[0].w;
        Vec3 ortho = std::abs(d.x) < std::abs(d.y) ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        Vec3 n1 = normalized(cross(d, ortho));
        Vec3 n2 = normalized(cross(d, n1));
        for (const Vec3& dir : {n1, -n1, n2, -n2}) {
            if (verts.size() >= 3) break;
            add_unique(minkowski_support(a, b, dir));
        }
    }
    if (verts.size() >= 3 && verts.size() < 4) {
        Vec3 n = cross(verts[1].w - verts[0].w, verts[2].w - verts[0].w);
        if (length_sq(n) < 1e-30) return out;
        SupportVertex sp = minkowski_support(a, b, n);
        SupportVertex sm = minkowski_support(a, b, -n);
        double dp = std::abs(dot(sp.w - verts[0].w, n));
        double dm = std::abs(dot(sm.w - verts[0].w, n));
        if (!add_unique(dp >= dm ? sp : sm))
            if (!add_unique(dp >= dm ? sm : sp)) return out;
    }
    if (verts.size() < 4) return out;

    struct Face {
        int v[3];
        Vec3 normal;  // outward
        double dist;  // distance of plane from origin along normal
        bool alive = true;
    };
    std::vector<Face> faces;
    Vec3 interior = (verts[0].w + verts[1].w + verts[2].w + verts[3].w) * 0.25;
    auto push_face = [&](int i, int j, int k) {
        Face f{{i, j, k}, {}, 0.0, true};
        Vec3 n = cross(verts[j].w - verts[i].w, verts[k].w - verts[i].w);
        double len = length(n);
        if (len < 1e-30) {
            f.alive = false;
            faces.push_back(f);
            return;
        }
        n = n / len;
        if (dot(n, verts[i].w - interior) < 0.0) {
            n = -n;
            std::swap(f.v[1], f.v[2]);
        }
        f.normal = n;
        f.dist = dot(n, verts[i].w);
        faces.push_back(f);
    };
    push_face(0, 1, 2);
    push_face(0, 1, 3);
    push_face(0, 2, 3);
    push_face(1, 2, 3);

    int best_face = -1;
    for (int iter = 0; iter < 128; ++iter) {
        // closest alive face
        best_face = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < faces.size(); ++i) {
            if (!faces[i].alive) continue;
            if (faces[i].dist < best_dist) {
                best_dist = faces[i].dist;
                best_face = static_cast<int>(i);
            }
        }
        if (best_face < 0) return out;
        const Face f = faces[best_face];
        SupportVertex w = minkowski_support(a, b, f.normal);
        double growth = dot(f.normal, w.w) - f.dist;
        if (growth < 1e-10 || faces.size() > 512) break;

        bool known = false;
        for (const SupportVertex& u : verts)
            if (length_sq(u.w - w.w) < 1e-28) known = true;
        if (known) break;

        int new_vertex = static_cast<int>(verts.size());
        verts.push_back(w);

        // remove faces visible from w, collect horizon
        std::vector<std::pair<int, int>> horizon;
        auto toggle_edge = [&](int p, int q) {
            for (std::size_t i = 0; i < horizon.size(); ++i) {
                if (horizon[i].first == q && horizon[i].second == p) {
                    horizon.erase(horizon.begin() + i);
                    return;
                }
            }
            horizon.emplace_back(p, q);
        };
        for (Face& face : faces) {
            if (!face.alive) continue;
            if (dot(face.normal, w.w - verts[face.v[0]].w) > 1e-12) {
                face.alive = false;
                toggle_edge(face.v[0], face.v[1]);
                toggle_edge(face.v[1], face.v[2]);
                toggle_edge(face.v[2], face.v[0]);
            }
        }
        if (horizon.empty()) break;
        for (const auto& [p, q] : horizon) push_face(p, q, new_vertex);
    }

    if (best_face < 0) return out;
    const Face& f = faces[best_face];
    // barycentric of the face point closest to the origin
    Vec3 c = f.normal * f.dist;
    const Vec3& p0 = verts[f.v[0]].w;
    const Vec3& p1 = verts[f.v[1]].w;
    const Vec3& p2 = verts[f.v[2]].w;
    Vec3 e0 = p1 - p0, e1 = p2 - p0, ep = c - p0;
    double d00 = dot(e0, e0), d01 = dot(e0, e1), d11 = dot(e1, e1);
    double d20 = dot(ep, e0), d21 = dot(ep, e1);
    double denom = d00 * d11 - d01 * d01;
    double v = 0, w2 = 0;
    if (std::abs(denom) > 1e-30) {
        v = (d11 * d20 - d01 * d21) / denom;
        w2 = (d00 * d21 - d01 * d20) / denom;
    }
    double u = 1.0 - v - w2;
    out.point_a = verts[f.v[0]].pa * u + verts[f.v[1]].pa * v + verts[f.v[2]].pa * w2;
    out.point_b = verts[f.v[0]].pb * u + verts[f.v[1]].pb * v + verts[f.v[2]].pb * w2;
    out.normal = f.normal;
    out.depth = f.dist;
    out.ok = true;
    return out;
}

// Contact between two convex pieces with margins; GJK for separation, EPA for
// core penetration.
inline std::optional<ContactPoint> collide_pieces(const ConvexPiece& a, const ConvexPiece& b) {
    double margin = a.radius + b.radius;
    GjkResult gjk = gjk_distance(a, b);
    if (!gjk.overlapping) {
        double gap = gjk.distance - margin;
        if (gap > 0.0) return std::nullopt;
        Vec3 n = gjk.distance > 1e-12 ? (gjk.point_b - gjk.point_a) / gjk.distance : Vec3{0, 1, 0};
        ContactPoint contact;
        contact.normal = n;
        contact.depth = -gap;
        Vec3 surf_a = gjk.point_a + n * a.radius;
        Vec3 surf_b = gjk.point_b - n * b.radius;
        contact.point = (surf_a + surf_b) * 0.5;
        return contact;
    }
    EpaResult epa = epa_penetration(a, b, gjk);
    if (!epa.ok) {
        // flat polytope fallback: deterministic vertical push
        ContactPoint contact;
        contact.normal = {0, 1, 0};
        contact.depth = margin;
        contact.point = a.inner_point();
        return contact;
    }
    ContactPoint contact;
    contact.normal = epa.normal;
    contact.depth = epa.depth + margin;
    Vec3 surf_a = epa.point_a + epa.normal * a.radius;
    Vec3 surf_b = epa.point_b - epa.normal * b.radius;
    contact.point = (surf_a + surf_b) * 0.5;
    return contact;
}

// -- analytic pairs ----------------------------------------------------------------

inline std::optional<ContactPoint> sphere_sphere(const Vec3& ca, double ra, const Vec3& cb, double rb) {
    Vec3 d = cb - ca;
    double dist = length(d);
    if (dist > ra + rb) return std::nullopt;
    ContactPoint contact;
    contact.normal = dist > 1e-12 ? d / dist : Vec3{0, 1, 0};
    contact.depth = ra + rb - dist;
    Vec3 surf_a = ca + contact.normal * ra;
    Vec3 surf_b = cb - contact.normal * rb;
    contact.point = (surf_a + surf_b) * 0.5;
    return contact;
}

// sphere (A) against box (B); normal from sphere toward box
inline std::optional<ContactPoint> sphere_box(const Vec3& center, double r, const BoxShape& box,
                                              const Pose3& pose) {
    Vec3 local = pose.to_local(center);
    Vec3 clamped = clamp_vec(local, -box.half_extents, box.half_extents);
    Vec3 delta = local - clamped;
    double dist2 = length_sq(delta);
    if (dist2 > 1e-24) {
        double dist = std::sqrt(dist2);
        if (dist > r) return std::nullopt;
        Vec3 n_world = rotate(pose.orientation, delta / -dist);  // sphere -> box
        ContactPoint contact;
        contact.normal = n_world;
        contact.depth = r - dist;
        Vec3 surf_a = center + n_world * r;
        Vec3 surf_b = pose.to_world(clamped);
        contact.point = (surf_a + surf_b) * 0.5;
        return contact;
    }
    // center inside the box: exit along the nearest face
    double best = std::numeric_limits<double>::infinity();
    Vec3 exit_local{1, 0, 0};
    for (int axis = 0; axis < 3; ++axis) {
        double h = box.half_extents[axis];
        double to_pos = h - local[axis];
        double to_neg = local[axis] + h;
        if (to_pos < best) {
            best = to_pos;
            exit_local = {};
            exit_local[axis] = 1.0;
        }
        if (to_neg < best) {
            best = to_neg;
            exit_local = {};
            exit_local[axis] = -1.0;
        }
    }
    ContactPoint contact;
    contact.normal = rotate(pose.orientation, -exit_local);  // push box away from sphere's exit
    contact.depth = best + r;
    contact.point = pose.to_world(clamped);
    return contact;
}

inline std::optional<ContactPoint> capsule_capsule(const Vec3& a0, const Vec3& a1, double ra,
                                                   const Vec3& b0, const Vec3& b1, double rb) {
    Vec3 pa, pb;
    closest_segment_segment(a0, a1, b0, b1, pa, pb);
    return sphere_sphere(pa, ra, pb, rb);
}

// capsule (A) against box (B); exact SAT when the core segment reaches the box
inline std::optional<ContactPoint> capsule_box(const Vec3& s0, const Vec3& s1, double r,
                                               const BoxShape& box, const Pose3& pose) {
    Vec3 l0 = pose.to_local(s0), l1 = pose.to_local(s1);
    auto point_box_dist2 = [&](double t, Vec3& cp_local) {
        Vec3 p = l0 + (l1 - l0) * t;
        cp_local = clamp_vec(p, -box.half_extents, box.half_extents);
        return length_sq(p - cp_local);
    };
    // convex 1-D minimization over the segment parameter
    double lo = 0.0, hi = 1.0;
    Vec3 cp;
    for (int i = 0; i < 120; ++i) {
        double m1 = lo + (hi - lo) / 3.0;
        double m2 = hi - (hi - lo) / 3.0;
        if (point_box_dist2(m1, cp) <= point_box_dist2(m2, cp)) hi = m2;
        else lo = m1;
    }
    double t = 0.5 * (lo + hi);
    Vec3 cp_local;
    double d2 = point_box_dist2(t, cp_local);
    for (double te : {0.0, 1.0}) {
        Vec3 cpe;
        double de = point_box_dist2(te, cpe);
        if (de < d2) {
            d2 = de;
            t = te;
            cp_local = cpe;
        }
    }

    if (d2 > 1e-18) {
        double dist = std::sqrt(d2);
        if (dist > r) return std::nullopt;
        Vec3 seg_local = l0 + (l1 - l0) * t;
        Vec3 n_world = rotate(pose.orientation, (cp_local - seg_local) / dist);  // capsule -> box
        ContactPoint contact;
        contact.normal = n_world;
        contact.depth = r - dist;
        Vec3 seg_world = pose.to_world(seg_local);
        Vec3 surf_a = seg_world + n_world * r;
        Vec3 surf_b = pose.to_world(cp_local);
        contact.point = (surf_a + surf_b) * 0.5;
        return contact;
    }

    // core segment touches or crosses the box: SAT over face normals and
    // edge cross products (complete axis set for segment vs box)
    Vec3 mid = (l0 + l1) * 0.5;
    Vec3 half_seg = (l1 - l0) * 0.5;
    double best_pen = std::numeric_limits<double>::infinity();
    Vec3 best_axis{0, 1, 0};
    auto consider_axis = [&](Vec3 u) {
        double len = length(u);
        if (len < 1e-9) return;
        u = u / len;
        double rb = std::abs(u.x) * box.half_extents.x + std::abs(u.y) * box.half_extents.y +
                    std::abs(u.z) * box.half_extents.z;
        double rs = std::abs(dot(half_seg, u));
        double off = dot(mid, u);
        double pen = rb + rs - std::abs(off);
        if (pen < best_pen) {
            best_pen = pen;
            best_axis = off >= 0.0 ? u : -u;  // axis points from box center toward segment
        }
    };
    consider_axis({1, 0, 0});
    consider_axis({0, 1, 0});
    consider_axis({0, 0, 1});
    Vec3 d = l1 - l0;
    consider_axis(cross(Vec3{1, 0, 0}, d));
    consider_axis(cross(Vec3{0, 1, 0}, d));
    consider_axis(cross(Vec3{0, 0, 1}, d));

    ContactPoint contact;
    contact.normal = rotate(pose.orientation, -best_axis);  // capsule -> box
    contact.depth = r + std::max(best_pen, 0.0);
    contact.point = pose.to_world(clamp_vec(mid, -box.half_extents, box.half_extents));
    return contact;
}

// sphere (A) against a world-space triangle (B)
inline std::optional<ContactPoint> sphere_triangle(const Vec3& center, double r, const Vec3& a,
                                                   const Vec3& b, const Vec3& c) {
    Vec3 cp = closest_on_triangle(a, b, c, center);
    Vec3 d = cp - center;
    double dist = length(d);
    if (dist > r) return std::nullopt;
    Vec3 n;
    if (dist > 1e-12) {
        n = d / dist;  // sphere -> triangle
    } else {
        Vec3 tn = normalized(cross(b - a, c - a));
        n = dot(tn, Vec3{0, 1, 0}) >= 0 ? -tn : tn;  // deterministic fallback
    }
    ContactPoint contact;
    contact.normal = n;
    contact.depth = r - dist;
    contact.point = cp;
    return contact;
}

// capsule (A) against a world-space triangle (B)
inline std::optional<ContactPoint> capsule_triangle(const Vec3& s0, const Vec3& s1, double r,
                                                    const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 on_seg, on_tri;
    double d2 = closest_segment_triangle(s0, s1, a, b, c, on_seg, on_tri);
    double dist = std::sqrt(d2);
    if (dist > r) return std::nullopt;
    ContactPoint contact;
    if (dist > 1e-9) {
        contact.normal = (on_tri - on_seg) / dist;  // capsule -> triangle
        contact.depth = r - dist;
        contact.point = on_tri;
        return contact;
    }
    // segment crosses the surface: push out along the triangle normal,
    // depth bounded by the deeper endpoint
    Vec3 tn = normalized(cross(b - a, c - a));
    double dp0 = dot(s0 - a, tn), dp1 = dot(s1 - a, tn);
    // orient so the normal points from the triangle toward the shallower side
    if (dp0 + dp1 < 0.0) {
        tn = -tn;
        dp0 = -dp0;
        dp1 = -dp1;
    }
    contact.normal = -tn;  // capsule -> triangle
    contact.depth = r + std::max(0.0, -std::min(dp0, dp1));
    contact.point = on_tri;
    return contact;
}

}  // namespace narrow_detail

// ---------------------------------------------------------------------------
// Public narrowphase entry points

// Deepest contact between two posed shapes; normal from A toward B, touching
// counts (depth 0). Trimesh-trimesh pairs are unsupported.
inline std::optional<ContactPoint> collide(const CollisionShape& shape_a, const Pose3& pose_a,
                                           const CollisionShape& shape_b, const Pose3& pose_b);

namespace narrow_detail {

inline std::vector<ObjectId> mesh_candidates(const TriMeshShape& mesh, const Pose3& mesh_pose,
                                             const AABB& world_query) {
    // conservative: transform the query box into mesh-local space
    AABB local = AABB::empty();
    for (int i = 0; i < 8; ++i) local.expand(mesh_pose.to_local(world_query.corner(i)));
    return query_overlaps(mesh.data->bvh, local);
}

inline std::optional<ContactPoint> collide_with_mesh(const CollisionShape& shape, const Pose3& pose,
                                                     const TriMeshShape& mesh, const Pose3& mesh_pose) {
    AABB query = shape_aabb(shape, pose).inflated(1e-3);
    std::optional<ContactPoint> best;
    for (ObjectId tri_index : mesh_candidates(mesh, mesh_pose, query)) {
        const auto& tri = mesh.data->triangles[tri_index];
        Vec3 a = mesh_pose.to_world(mesh.data->vertices[tri[0]]);
        Vec3 b = mesh_pose.to_world(mesh.data->vertices[tri[1]]);
        Vec3 c = mesh_pose.to_world(mesh.data->vertices[tri[2]]);
        std::optional<ContactPoint> contact;
        if (const auto* s = std::get_if<SphereShape>(&shape)) {
            contact = sphere_triangle(pose.position, s->radius, a, b, c);
        } else if (const auto* cap = std::get_if<CapsuleShape>(&shape)) {
            Vec3 axis = rotate(pose.orientation, {0, cap->half_height, 0});
            contact = capsule_triangle(pose.position - axis, pose.position + axis, cap->radius, a, b, c);
        } else {
            contact = collide_pieces(make_piece(shape, pose), triangle_piece(a, b, c));
        }
        if (contact && (!best || contact->depth > best->depth)) best = contact;
    }
    return best;
}

}  // namespace narrow_detail

inline std::optional<ContactPoint> collide(const CollisionShape& shape_a, const Pose3& pose_a,
                                           const CollisionShape& shape_b, const Pose3& pose_b) {
    using namespace narrow_detail;
    bool mesh_a = is_trimesh(shape_a), mesh_b = is_trimesh(shape_b);
    if (mesh_a && mesh_b) throw UnsupportedPair("trimesh vs trimesh narrowphase is unsupported");
    if (mesh_a) {
        auto flipped = collide(shape_b, pose_b, shape_a, pose_a);
        if (flipped) flipped->normal = -flipped->normal;
        return flipped;
    }
    if (mesh_b) return collide_with_mesh(shape_a, pose_a, std::get<TriMeshShape>(shape_b), pose_b);

    const auto* sa = std::get_if<SphereShape>(&shape_a);
    const auto* sb = std::get_if<SphereShape>(&shape_b);
    const auto* ca = std::get_if<CapsuleShape>(&shape_a);
    const auto* cb = std::get_if<CapsuleShape>(&shape_b);
    const auto* ba = std::get_if<BoxShape>(&shape_a);
    const auto* bb = std::get_if<BoxShape>(&shape_b);

    auto segment_of = [](const CapsuleShape& cap, const Pose3& pose, Vec3& p0, Vec3& p1) {
        Vec3 axis = rotate(pose.orientation, {0, cap.half_height, 0});
        p0 = pose.position - axis;
        p1 = pose.position + axis;
    };

    if (sa && sb) return sphere_sphere(pose_a.position, sa->radius, pose_b.position, sb->radius);
    if (sa && cb) {
        Vec3 p0, p1;
        segment_of(*cb, pose_b, p0, p1);
        double t;
        Vec3 on_seg = closest_on_segment(p0, p1, pose_a.position, t);
        return sphere_sphere(pose_a.position, sa->radius, on_seg, cb->radius);
    }
    if (ca && sb) {
        auto flipped = collide(shape_b, pose_b, shape_a, pose_a);
        if (flipped) flipped->normal = -flipped->normal;
        return flipped;
    }
    if (ca && cb) {
        Vec3 a0, a1, b0, b1;
        segment_of(*ca, pose_a, a0, a1);
        segment_of(*cb, pose_b, b0, b1);
        return capsule_capsule(a0, a1, ca->radius, b0, b1, cb->radius);
    }
    if (sa && bb) return sphere_box(pose_a.position, sa->radius, *bb, pose_b);
    if (ba && sb) {
        auto flipped = collide(shape_b, pose_b, shape_a, pose_a);
        if (flipped) flipped->normal = -flipped->normal;
        return flipped;
    }
    if (ca && bb) {
        Vec3 p0, p1;
        segment_of(*ca, pose_a, p0, p1);
        return capsule_box(p0, p1, ca->radius, *bb, pose_b);
    }
    if (ba && cb) {
        auto flipped = collide(shape_b, pose_b, shape_a, pose_a);
        if (flipped) flipped->normal = -flipped->normal;
        return flipped;
    }
    // box-box, convex-anything
    return collide_pieces(make_piece(shape_a, pose_a), make_piece(shape_b, pose_b));
}

// Surface gap between a non-mesh shape and one world-space triangle.
inline DistanceResult shape_triangle_distance(const CollisionShape& shape, const Pose3& pose,
                                              const Vec3& a, const Vec3& b, const Vec3& c) {
    using namespace narrow_detail;
    DistanceResult r;
    if (const auto* s = std::get_if<SphereShape>(&shape)) {
        Vec3 cp = closest_on_triangle(a, b, c, pose.position);
        double dist = length(cp - pose.position);
        r.distance = std::max(0.0, dist - s->radius);
        if (dist > 1e-12) {
            Vec3 n = (cp - pose.position) / dist;
            r.point_on_a = pose.position + n * s->radius;
            r.point_on_b = cp;
            r.normal = -n;
        }
    } else if (const auto* cap = std::get_if<CapsuleShape>(&shape)) {
        Vec3 axis = rotate(pose.orientation, {0, cap->half_height, 0});
        Vec3 on_seg, on_tri;
        double dist = std::sqrt(
            closest_segment_triangle(pose.position - axis, pose.position + axis, a, b, c, on_seg, on_tri));
        r.distance = std::max(0.0, dist - cap->radius);
        if (dist > 1e-12) {
            Vec3 n = (on_tri - on_seg) / dist;
            r.point_on_a = on_seg + n * cap->radius;
            r.point_on_b = on_tri;
            r.normal = -n;
        }
    } else {
        GjkResult gjk = gjk_distance(make_piece(shape, pose), triangle_piece(a, b, c));
        r.distance = gjk.overlapping ? 0.0 : std::max(0.0, gjk.distance);
        r.point_on_a = gjk.point_a;
        r.point_on_b = gjk.point_b;
        if (!gjk.overlapping && gjk.distance > 1e-12)
            r.normal = (gjk.point_a - gjk.point_b) / gjk.distance;
    }
    return r;
}

// Surface gap between two posed shapes if it is below `window`; nullopt when
// the shapes are certainly farther apart. Distance 0 means touching or
// overlapping.
inline std::optional<DistanceResult> shape_distance(const CollisionShape& shape_a, const Pose3& pose_a,
                                                    const CollisionShape& shape_b, const Pose3& pose_b,
                                                    double window) {
    using namespace narrow_detail;
    bool mesh_a = is_trimesh(shape_a), mesh_b = is_trimesh(shape_b);
    if (mesh_a && mesh_b) throw UnsupportedPair("trimesh vs trimesh distance is unsupported");
    if (mesh_a) {
        auto flipped = shape_distance(shape_b, pose_b, shape_a, pose_a, window);
        if (flipped) std::swap(flipped->point_on_a, flipped->point_on_b);
        return flipped;
    }
    if (mesh_b) {
        const auto& mesh = std::get<TriMeshShape>(shape_b);
        AABB query = shape_aabb(shape_a, pose_a).inflated(window + 1e-6);
        std::optional<DistanceResult> best;
        for (ObjectId tri_index : mesh_candidates(mesh, pose_b, query)) {
            const auto& tri = mesh.data->triangles[tri_index];
            Vec3 a = pose_b.to_world(mesh.data->vertices[tri[0]]);
            Vec3 b = pose_b.to_world(mesh.data->vertices[tri[1]]);
            Vec3 c = pose_b.to_world(mesh.data->vertices[tri[2]]);
            DistanceResult r = shape_triangle_distance(shape_a, pose_a, a, b, c);
            if (!best || r.distance < best->distance) best = r;
            if (best && best->distance <= 0.0) break;
        }
        if (best && best->distance > window) return std::nullopt;
        return best;
    }

    ConvexPiece pa = make_piece(shape_a, pose_a);
    ConvexPiece pb = make_piece(shape_b, pose_b);
    GjkResult gjk = gjk_distance(pa, pb);
    DistanceResult r;
    if (gjk.overlapping) {
        r.distance = 0.0;
        r.point_on_a = pa.inner_point();
        r.point_on_b = pb.inner_point();
        return r;
    }
    double gap = gjk.distance - (pa.radius + pb.radius);
    if (gap > window) return std::nullopt;
    r.distance = std::max(0.0, gap);
    if (gjk.distance > 1e-12) {
        Vec3 n = (gjk.point_b - gjk.point_a) / gjk.distance;
        r.point_on_a = gjk.point_a + n * pa.radius;
        r.point_on_b = gjk.point_b - n * pb.radius;
        r.normal = -n;
    } else {
        r.point_on_a = gjk.point_a;
        r.point_on_b = gjk.point_b;
    }
    return r;
}

}  // namespace vekit
