#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "vekit/math.hpp"
#include "vekit/mesh_asset.hpp"
#include "vekit/spatial.hpp"

namespace vekit {

struct Pose3 {
    Vec3 position{};
    Quat orientation = Quat::identity();

    Vec3 to_world(const Vec3& local) const { return position + rotate(orientation, local); }
    Vec3 to_local(const Vec3& world) const { return rotate(conjugate(orientation), world - position); }

    bool operator==(const Pose3&) const = default;
};

struct SphereShape {
    double radius = 0.5;
};

// Segment along local Y of length 2*half_height, inflated by radius.
struct CapsuleShape {
    double radius = 0.5;
    double half_height = 0.5;
};

struct BoxShape {
    Vec3 half_extents{0.5, 0.5, 0.5};
};

struct ConvexShape {
    std::vector<Vec3> vertices;  // hull points, body-local
};

// Immutable triangle soup with a BVH over triangle bounds; static bodies only.
struct TriMeshShape {
    struct Data {
        std::vector<Vec3> vertices;
        std::vector<std::array<int, 3>> triangles;
        Bvh bvh;  // ObjectId = triangle index

        static std::shared_ptr<const Data> make(const TriangleMeshData& mesh) {
            auto data = std::make_shared<Data>();
            data->vertices = mesh.vertices;
            data->triangles = mesh.triangles;
            std::vector<IndexedBox> boxes;
            boxes.reserve(mesh.triangles.size());
            for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
                AABB b = AABB::empty();
                for (int corner : mesh.triangles[i]) b.expand(mesh.vertices[corner]);
                boxes.push_back({static_cast<ObjectId>(i), b});
            }
            data->bvh = Bvh::build(boxes);
            return data;
        }
    };

    std::shared_ptr<const Data> data;
};

using CollisionShape = std::variant<SphereShape, CapsuleShape, BoxShape, ConvexShape, TriMeshShape>;

inline bool is_trimesh(const CollisionShape& s) { return std::holds_alternative<TriMeshShape>(s); }

// ---------------------------------------------------------------------------
// Bounds

inline AABB shape_aabb(const CollisionShape& shape, const Pose3& pose) {
    struct Visitor {
        const Pose3& pose;

        AABB operator()(const SphereShape& s) const {
            Vec3 r{s.radius, s.radius, s.radius};
            return {pose.position - r, pose.position + r};
        }
        AABB operator()(const CapsuleShape& c) const {
            Vec3 axis = rotate(pose.orientation, {0, c.half_height, 0});
            Vec3 r{c.radius, c.radius, c.radius};
            AABB box = AABB::empty();
            box.expand(pose.position + axis);
            box.expand(pose.position - axis);
            return {box.min - r, box.max + r};
        }
        AABB operator()(const BoxShape& b) const {
            AABB box = AABB::empty();
            for (int i = 0; i < 8; ++i) {
                Vec3 corner{(i & 1) ? b.half_extents.x : -b.half_extents.x,
                            (i & 2) ? b.half_extents.y : -b.half_extents.y,
                            (i & 4) ? b.half_extents.z : -b.half_extents.z};
                box.expand(pose.to_world(corner));
            }
            return box;
        }
        AABB operator()(const ConvexShape& c) const {
            AABB box = AABB::empty();
            for (const Vec3& v : c.vertices) box.expand(pose.to_world(v));
            return box;
        }
        AABB operator()(const TriMeshShape& m) const {
            AABB box = AABB::empty();
            for (const Vec3& v : m.data->vertices) box.expand(pose.to_world(v));
            return box;
        }
    };
    return std::visit(Visitor{pose}, shape);
}

// ---------------------------------------------------------------------------
// Inertia (body-frame tensors for dynamic bodies)

inline Mat3 inertia_tensor(const SphereShape& s, double mass) {
    double i = 0.4 * mass * s.radius * s.radius;
    return Mat3::diagonal(i, i, i);
}

inline Mat3 inertia_tensor(const BoxShape& b, double mass) {
    Vec3 e = b.half_extents * 2.0;
    double k = mass / 12.0;
    return Mat3::diagonal(k * (e.y * e.y + e.z * e.z), k * (e.x * e.x + e.z * e.z),
                          k * (e.x * e.x + e.y * e.y));
}

inline Mat3 inertia_tensor(const CapsuleShape& c, double mass) {
    double r = c.radius, h = 2.0 * c.half_height;
    double vc = kPi * r * r * h;
    double vs = 4.0 / 3.0 * kPi * r * r * r;
    double mc = mass * vc / (vc + vs);
    double ms = mass * vs / (vc + vs);
    double iy = mc * r * r / 2.0 + ms * 2.0 * r * r / 5.0;
    double ix = mc * (h * h / 12.0 + r * r / 4.0) +
                ms * (2.0 * r * r / 5.0 + h * h / 4.0 + 3.0 * h * r / 8.0);
    return Mat3::diagonal(ix, iy, ix);
}

// Convex hulls fall back to the box tensor of their bounds.
inline Mat3 inertia_tensor(const ConvexShape& c, double mass) {
    AABB box = AABB::empty();
    for (const Vec3& v : c.vertices) box.expand(v);
    return inertia_tensor(BoxShape{box.extents()}, mass);
}

inline Mat3 inertia_tensor(const CollisionShape& shape, double mass) {
    if (const auto* s = std::get_if<SphereShape>(&shape)) return inertia_tensor(*s, mass);
    if (const auto* c = std::get_if<CapsuleShape>(&shape)) return inertia_tensor(*c, mass);
    if (const auto* b = std::get_if<BoxShape>(&shape)) return inertia_tensor(*b, mass);
    if (const auto* h = std::get_if<ConvexShape>(&shape)) return inertia_tensor(*h, mass);
    return Mat3::diagonal(1, 1, 1);  // trimesh never dynamic
}

inline Mat3 inverse_diagonal(const Mat3& m) {
    return Mat3::diagonal(m(0, 0) > 0 ? 1.0 / m(0, 0) : 0.0, m(1, 1) > 0 ? 1.0 / m(1, 1) : 0.0,
                          m(2, 2) > 0 ? 1.0 / m(2, 2) : 0.0);
}

// Convex hull vertices must span 3D space (four affinely independent points).
inline bool hull_is_degenerate(const std::vector<Vec3>& vertices) {
    if (vertices.size() < 4) return true;
    const Vec3& a = vertices[0];
    for (std::size_t i = 1; i < vertices.size(); ++i) {
        Vec3 ab = vertices[i] - a;
        if (length(ab) < 1e-12) continue;
        for (std::size_t j = i + 1; j < vertices.size(); ++j) {
            Vec3 n = cross(ab, vertices[j] - a);
            if (length(n) < 1e-12) continue;
            for (std::size_t k = j + 1; k < vertices.size(); ++k) {
                if (std::abs(dot(n, vertices[k] - a)) > 1e-12 * std::max(1.0, length(n))) return false;
            }
        }
    }
    return true;
}

}  // namespace vekit
