#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"

namespace vekit {

using ObjectId = std::uint32_t;

struct InvalidAABB : Error {
    explicit InvalidAABB(const std::string& msg) : Error(msg) {}
};

struct IndexedBox {
    ObjectId id = 0;
    AABB box;
};

// Inward-facing plane: points with n.x + d >= 0 are inside.
struct Plane {
    Vec3 normal{0, 1, 0};
    double d = 0.0;

    double signed_distance(const Vec3& p) const { return dot(normal, p) + d; }
};

struct Frustum {
    std::array<Plane, 6> planes;  // near, far, left, right, top, bottom

    // Camera convention: looks along -Z in local space, +Y up, +X right.
    static Frustum from_pose(const Vec3& position, const Quat& orientation, double fov_y, double aspect,
                             double near_dist, double far_dist) {
        Frustum f;
        double tan_y = std::tan(0.5 * fov_y);
        double tan_x = tan_y * aspect;
        Vec3 fwd = rotate(orientation, {0, 0, -1});
        Vec3 up = rotate(orientation, {0, 1, 0});
        Vec3 right = rotate(orientation, {1, 0, 0});

        auto through = [&](const Vec3& n, const Vec3& point) { return Plane{n, -dot(n, point)}; };
        f.planes[0] = through(fwd, position + fwd * near_dist);
        f.planes[1] = through(-fwd, position + fwd * far_dist);
        double inv_x = 1.0 / std::sqrt(1.0 + tan_x * tan_x);
        double inv_y = 1.0 / std::sqrt(1.0 + tan_y * tan_y);
        f.planes[2] = through((right + fwd * tan_x) * inv_x, position);   // left
        f.planes[3] = through((right * -1.0 + fwd * tan_x) * inv_x, position);  // right
        f.planes[4] = through((up * -1.0 + fwd * tan_y) * inv_y, position);     // top
        f.planes[5] = through((up + fwd * tan_y) * inv_y, position);      // bottom
        return f;
    }
};

// p-vertex test: a box is out iff it lies entirely behind some plane.
// Boxes touching a plane count as inside; both the indices and the
// brute-force oracle must use this exact convention.
inline bool aabb_outside_plane(const AABB& box, const Plane& plane) {
    Vec3 p{plane.normal.x >= 0 ? box.max.x : box.min.x, plane.normal.y >= 0 ? box.max.y : box.min.y,
           plane.normal.z >= 0 ? box.max.z : box.min.z};
    return plane.signed_distance(p) < 0.0;
}

inline bool frustum_intersects(const Frustum& f, const AABB& box) {
    for (const Plane& plane : f.planes)
        if (aabb_outside_plane(box, plane)) return false;
    return true;
}

// Slab test; returns entry parameter clamped to 0 when the origin is inside.
inline bool ray_hits_aabb(const Vec3& origin, const Vec3& dir, double max_t, const AABB& box,
                          double& t_enter) {
    double t0 = 0.0, t1 = max_t;
    for (int axis = 0; axis < 3; ++axis) {
        double o = origin[axis], d = dir[axis];
        double lo = box.min[axis], hi = box.max[axis];
        if (std::abs(d) < 1e-300) {
            if (o < lo || o > hi) return false;
            continue;
        }
        double inv = 1.0 / d;
        double ta = (lo - o) * inv;
        double tb = (hi - o) * inv;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    t_enter = t0;
    return true;
}

struct QueryStats {
    std::size_t cells_visited = 0;
    std::size_t object_tests = 0;

    std::size_t total() const { return cells_visited + object_tests; }
};

struct RayHit {
    ObjectId id;
    double t_enter;
};

namespace spatial_detail {

inline void check_input(std::span<const IndexedBox> objects) {
    for (const IndexedBox& ob : objects) {
        if (!is_finite(ob.box.min) || !is_finite(ob.box.max) || !ob.box.valid())
            throw InvalidAABB("object " + std::to_string(ob.id) + " has an invalid AABB");
    }
}

inline AABB bounds_of(std::span<const IndexedBox> objects) {
    AABB total = AABB::empty();
    for (const IndexedBox& ob : objects) total.expand(ob.box);
    return total;
}

inline void sort_unique(std::vector<ObjectId>& ids) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
}

inline std::string box_text(const AABB& b) {
    return "(" + format_double(b.min.x) + " " + format_double(b.min.y) + " " + format_double(b.min.z) +
           ")-(" + format_double(b.max.x) + " " + format_double(b.max.y) + " " + format_double(b.max.z) +
           ")";
}

inline void append_ids(std::string& out, const std::vector<ObjectId>& ids) {
    out += " [";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += " ";
        out += std::to_string(ids[i]);
    }
    out += "]";
}

}  // namespace spatial_detail

// ---------------------------------------------------------------------------
// Octree

class Octree {
public:
    struct Cell {
        AABB box;
        std::array<std::int32_t, 8> children{-1, -1, -1, -1, -1, -1, -1, -1};
        std::vector<ObjectId> objects;  // leaves only
        bool leaf = true;
    };

    Octree() = default;

    static Octree build(std::span<const IndexedBox> objects, int max_depth, int leaf_capacity) {
        spatial_detail::check_input(objects);
        Octree tree;
        tree.objects_.assign(objects.begin(), objects.end());
        if (objects.empty()) return tree;
        Cell root;
        root.box = spatial_detail::bounds_of(objects).inflated(1e-6);
        tree.cells_.push_back(root);
        std::vector<std::uint32_t> all(objects.size());
        for (std::uint32_t i = 0; i < objects.size(); ++i) all[i] = i;
        tree.subdivide(0, all, 0, max_depth, std::max(1, leaf_capacity));
        return tree;
    }

    bool empty() const { return cells_.empty(); }
    const std::vector<Cell>& cells() const { return cells_; }
    const IndexedBox& object(std::uint32_t slot) const { return objects_[slot]; }
    std::size_t size() const { return objects_.size(); }

    template <typename CellFilter, typename Emit>
    void traverse(CellFilter&& filter, Emit&& emit, QueryStats* stats) const {
        if (cells_.empty()) return;
        std::vector<std::int32_t> stack{0};
        while (!stack.empty()) {
            std::int32_t idx = stack.back();
            stack.pop_back();
            const Cell& cell = cells_[idx];
            if (stats) ++stats->cells_visited;
            if (!filter(cell.box)) continue;
            if (cell.leaf) {
                for (ObjectId slot : cell.objects) emit(objects_[slot]);
            } else {
                for (std::int32_t child : cell.children)
                    if (child >= 0) stack.push_back(child);
            }
        }
    }

    std::string dump() const {
        std::string out;
        if (!cells_.empty()) dump_cell(out, 0, 0);
        return out;
    }

private:
    void dump_cell(std::string& out, std::int32_t idx, int depth) const {
        const Cell& cell = cells_[idx];
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        out += cell.leaf ? "leaf " : "cell ";
        out += spatial_detail::box_text(cell.box);
        if (cell.leaf) {
            std::vector<ObjectId> ids;
            for (std::uint32_t slot : cell.objects) ids.push_back(objects_[slot].id);
            spatial_detail::append_ids(out, ids);
        }
        out += "\n";
        if (!cell.leaf)
            for (std::int32_t child : cell.children)
                if (child >= 0) dump_cell(out, child, depth + 1);
    }

    void subdivide(std::int32_t cell_idx, const std::vector<std::uint32_t>& slots, int depth, int max_depth,
                   int leaf_capacity) {
        if (static_cast<int>(slots.size()) <= leaf_capacity || depth >= max_depth) {
            cells_[cell_idx].objects.assign(slots.begin(), slots.end());
            cells_[cell_idx].leaf = true;
            return;
        }
        cells_[cell_idx].leaf = false;
        AABB box = cells_[cell_idx].box;
        Vec3 mid = box.center();
        for (int i = 0; i < 8; ++i) {
            AABB child;
            child.min = {(i & 1) ? mid.x : box.min.x, (i & 2) ? mid.y : box.min.y, (i & 4) ? mid.z : box.min.z};
            child.max = {(i & 1) ? box.max.x : mid.x, (i & 2) ? box.max.y : mid.y, (i & 4) ? box.max.z : mid.z};
            std::vector<std::uint32_t> inside;
            for (std::uint32_t slot : slots)
                if (overlaps(objects_[slot].box, child)) inside.push_back(slot);
            if (inside.empty()) continue;
            Cell c;
            c.box = child;
            cells_.push_back(c);
            std::int32_t child_idx = static_cast<std::int32_t>(cells_.size() - 1);
            cells_[cell_idx].children[i] = child_idx;
            subdivide(child_idx, inside, depth + 1, max_depth, leaf_capacity);
        }
    }

    std::vector<Cell> cells_;
    std::vector<IndexedBox> objects_;
};

// ---------------------------------------------------------------------------
// BVH: binary tree, one object per leaf, median split on the longest
// centroid axis.

class Bvh {
public:
    struct Node {
        AABB box;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::uint32_t slot = 0;  // leaves

        bool leaf() const { return left < 0; }
    };

    Bvh() = default;

    static Bvh build(std::span<const IndexedBox> objects) {
        spatial_detail::check_input(objects);
        Bvh tree;
        tree.objects_.assign(objects.begin(), objects.end());
        if (objects.empty()) return tree;
        std::vector<std::uint32_t> slots(objects.size());
        for (std::uint32_t i = 0; i < objects.size(); ++i) slots[i] = i;
        tree.root_ = tree.build_range(slots, 0, slots.size());
        return tree;
    }

    bool empty() const { return nodes_.empty(); }
    std::int32_t root() const { return root_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const IndexedBox& object(std::uint32_t slot) const { return objects_[slot]; }
    std::size_t size() const { return objects_.size(); }

    template <typename CellFilter, typename Emit>
    void traverse(CellFilter&& filter, Emit&& emit, QueryStats* stats) const {
        if (nodes_.empty()) return;
        std::vector<std::int32_t> stack{root_};
        while (!stack.empty()) {
            const Node& node = nodes_[stack.back()];
            stack.pop_back();
            if (stats) ++stats->cells_visited;
            if (!filter(node.box)) continue;
            if (node.leaf()) {
                emit(objects_[node.slot]);
            } else {
                stack.push_back(node.left);
                stack.push_back(node.right);
            }
        }
    }

    std::string dump() const {
        std::string out;
        if (!nodes_.empty()) dump_node(out, root_, 0);
        return out;
    }

private:
    void dump_node(std::string& out, std::int32_t idx, int depth) const {
        const Node& node = nodes_[idx];
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        if (node.leaf()) {
            out += "leaf " + spatial_detail::box_text(node.box);
            out += " [" + std::to_string(objects_[node.slot].id) + "]";
        } else {
            out += "node " + spatial_detail::box_text(node.box);
        }
        out += "\n";
        if (!node.leaf()) {
            dump_node(out, node.left, depth + 1);
            dump_node(out, node.right, depth + 1);
        }
    }

    std::int32_t build_range(std::vector<std::uint32_t>& slots, std::size_t begin, std::size_t end) {
        Node node;
        AABB box = AABB::empty();
        for (std::size_t i = begin; i < end; ++i) box.expand(objects_[slots[i]].box);
        node.box = box;
        if (end - begin == 1) {
            node.slot = slots[begin];
            nodes_.push_back(node);
            return static_cast<std::int32_t>(nodes_.size() - 1);
        }
        AABB centroid_bounds = AABB::empty();
        for (std::size_t i = begin; i < end; ++i) centroid_bounds.expand(objects_[slots[i]].box.center());
        Vec3 spread = centroid_bounds.max - centroid_bounds.min;
        int axis = spread.x >= spread.y ? (spread.x >= spread.z ? 0 : 2) : (spread.y >= spread.z ? 1 : 2);
        std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(slots.begin() + begin, slots.begin() + mid, slots.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) {
                             double ca = objects_[a].box.center()[axis];
                             double cb = objects_[b].box.center()[axis];
                             if (ca != cb) return ca < cb;
                             return objects_[a].id < objects_[b].id;
                         });
        std::int32_t left = build_range(slots, begin, mid);
        std::int32_t right = build_range(slots, mid, end);
        node.left = left;
        node.right = right;
        nodes_.push_back(node);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }

    std::vector<Node> nodes_;
    std::vector<IndexedBox> objects_;
    std::int32_t root_ = -1;
};

// ---------------------------------------------------------------------------
// Axis-aligned BSP (kd-style): internal nodes split at the median centroid
// coordinate of the longest centroid axis; straddling objects go both ways.

class AxisBsp {
public:
    struct Node {
        AABB region;
        int axis = -1;  // -1 for leaves
        double split = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::vector<std::uint32_t> objects;

        bool leaf() const { return axis < 0; }
    };

    AxisBsp() = default;

    static AxisBsp build(std::span<const IndexedBox> objects, int max_depth, int leaf_capacity) {
        spatial_detail::check_input(objects);
        AxisBsp tree;
        tree.objects_.assign(objects.begin(), objects.end());
        if (objects.empty()) return tree;
        std::vector<std::uint32_t> slots(objects.size());
        for (std::uint32_t i = 0; i < objects.size(); ++i) slots[i] = i;
        AABB region = spatial_detail::bounds_of(objects).inflated(1e-6);
        tree.build_node(region, slots, 0, max_depth, std::max(1, leaf_capacity));
        return tree;
    }

    bool empty() const { return nodes_.empty(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const IndexedBox& object(std::uint32_t slot) const { return objects_[slot]; }
    std::size_t size() const { return objects_.size(); }

    template <typename CellFilter, typename Emit>
    void traverse(CellFilter&& filter, Emit&& emit, QueryStats* stats) const {
        if (nodes_.empty()) return;
        std::vector<std::int32_t> stack{0};
        while (!stack.empty()) {
            const Node& node = nodes_[stack.back()];
            stack.pop_back();
            if (stats) ++stats->cells_visited;
            if (!filter(node.region)) continue;
            if (node.leaf()) {
                for (std::uint32_t slot : node.objects) emit(objects_[slot]);
            } else {
                stack.push_back(node.left);
                stack.push_back(node.right);
            }
        }
    }

    std::string dump() const {
        std::string out;
        if (!nodes_.empty()) dump_node(out, 0, 0);
        return out;
    }

private:
    static const char* axis_name(int axis) { return axis == 0 ? "x" : (axis == 1 ? "y" : "z"); }

    void dump_node(std::string& out, std::int32_t idx, int depth) const {
        const Node& node = nodes_[idx];
        out.append(static_cast<std::size_t>(depth) * 2, ' ');
        if (node.leaf()) {
            out += "leaf " + spatial_detail::box_text(node.region);
            std::vector<ObjectId> ids;
            for (std::uint32_t slot : node.objects) ids.push_back(objects_[slot].id);
            spatial_detail::append_ids(out, ids);
        } else {
            out += "split ";
            out += axis_name(node.axis);
            out += "=" + format_double(node.split);
        }
        out += "\n";
        if (!node.leaf()) {
            dump_node(out, node.left, depth + 1);
            dump_node(out, node.right, depth + 1);
        }
    }

    std::int32_t build_node(const AABB& region, std::vector<std::uint32_t>& slots, int depth, int max_depth,
                            int leaf_capacity) {
        std::int32_t idx = static_cast<std::int32_t>(nodes_.size());
        nodes_.emplace_back();
        nodes_[idx].region = region;
        if (static_cast<int>(slots.size()) <= leaf_capacity || depth >= max_depth) {
            nodes_[idx].axis = -1;
            nodes_[idx].objects = slots;
            return idx;
        }
        AABB centroid_bounds = AABB::empty();
        for (std::uint32_t slot : slots) centroid_bounds.expand(objects_[slot].box.center());
        Vec3 spread = centroid_bounds.max - centroid_bounds.min;
        int axis = spread.x >= spread.y ? (spread.x >= spread.z ? 0 : 2) : (spread.y >= spread.z ? 1 : 2);
        std::vector<double> coords;
        coords.reserve(slots.size());
        for (std::uint32_t slot : slots) coords.push_back(objects_[slot].box.center()[axis]);
        std::nth_element(coords.begin(), coords.begin() + coords.size() / 2, coords.end());
        double split = coords[coords.size() / 2];

        std::vector<std::uint32_t> left_slots, right_slots;
        for (std::uint32_t slot : slots) {
            const AABB& b = objects_[slot].box;
            if (b.min[axis] <= split) left_slots.push_back(slot);
            if (b.max[axis] >= split) right_slots.push_back(slot);
        }
        AABB left_region = region, right_region = region;
        left_region.max[axis] = split;
        right_region.min[axis] = split;

        nodes_[idx].axis = axis;
        nodes_[idx].split = split;
        std::int32_t left = build_node(left_region, left_slots, depth + 1, max_depth, leaf_capacity);
        std::int32_t right = build_node(right_region, right_slots, depth + 1, max_depth, leaf_capacity);
        nodes_[idx].left = left;
        nodes_[idx].right = right;
        return idx;
    }

    std::vector<Node> nodes_;
    std::vector<IndexedBox> objects_;
};

// ---------------------------------------------------------------------------
// Queries, generic over the three index kinds.

template <typename Index>
std::vector<ObjectId> query_frustum(const Index& index, const Frustum& frustum,
                                    QueryStats* stats = nullptr) {
    std::vector<ObjectId> out;
    index.traverse([&](const AABB& cell) { return frustum_intersects(frustum, cell); },
                   [&](const IndexedBox& ob) {
                       if (stats) ++stats->object_tests;
                       if (frustum_intersects(frustum, ob.box)) out.push_back(ob.id);
                   },
                   stats);
    spatial_detail::sort_unique(out);
    return out;
}

template <typename Index>
std::vector<RayHit> query_ray(const Index& index, const Vec3& origin, const Vec3& direction, double max_t,
                              QueryStats* stats = nullptr) {
    std::map<ObjectId, double> found;
    index.traverse(
        [&](const AABB& cell) {
            double t;
            return ray_hits_aabb(origin, direction, max_t, cell, t);
        },
        [&](const IndexedBox& ob) {
            if (stats) ++stats->object_tests;
            double t;
            if (ray_hits_aabb(origin, direction, max_t, ob.box, t)) {
                auto [it, inserted] = found.emplace(ob.id, t);
                if (!inserted && t < it->second) it->second = t;
            }
        },
        stats);
    std::vector<RayHit> out;
    out.reserve(found.size());
    for (const auto& [id, t] : found) out.push_back({id, t});
    std::sort(out.begin(), out.end(), [](const RayHit& a, const RayHit& b) {
        if (a.t_enter != b.t_enter) return a.t_enter < b.t_enter;
        return a.id < b.id;
    });
    return out;
}

template <typename Index>
std::vector<ObjectId> query_overlaps(const Index& index, const AABB& box, QueryStats* stats = nullptr) {
    std::vector<ObjectId> out;
    index.traverse([&](const AABB& cell) { return overlaps(cell, box); },
                   [&](const IndexedBox& ob) {
                       if (stats) ++stats->object_tests;
                       if (overlaps(ob.box, box)) out.push_back(ob.id);
                   },
                   stats);
    spatial_detail::sort_unique(out);
    return out;
}

// All unordered pairs of overlapping boxes; touching counts.
template <typename Index>
std::vector<std::pair<ObjectId, ObjectId>> broadphase_pairs(const Index& index,
                                                            QueryStats* stats = nullptr) {
    std::vector<std::pair<ObjectId, ObjectId>> pairs;
    for (std::size_t i = 0; i < index.size(); ++i) {
        const IndexedBox& ob = index.object(static_cast<std::uint32_t>(i));
        for (ObjectId other : query_overlaps(index, ob.box, stats))
            if (other > ob.id) pairs.emplace_back(ob.id, other);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return pairs;
}

}  // namespace vekit
