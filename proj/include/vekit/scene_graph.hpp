#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/mesh_asset.hpp"
#include "vekit/physics.hpp"
#include "vekit/scene_format.hpp"
#include "vekit/shapes.hpp"

namespace vekit {

using NodeId = std::uint32_t;
constexpr NodeId kNoNode = 0xffffffffu;

struct UnknownScene : Error {
    explicit UnknownScene(const std::string& msg) : Error(msg) {}
};
struct ValidationFailed : Error {
    explicit ValidationFailed(const std::string& msg) : Error(msg) {}
};
struct UnknownNode : Error {
    explicit UnknownNode(const std::string& msg) : Error(msg) {}
};
struct InvalidTransform : Error {
    explicit InvalidTransform(const std::string& msg) : Error(msg) {}
};
struct NoBounds : Error {
    explicit NoBounds(const std::string& msg) : Error(msg) {}
};
struct CycleError : Error {
    explicit CycleError(const std::string& msg) : Error(msg) {}
};

// Camera anchor with node references resolved to ids.
struct ResolvedCameraAnchor {
    NodeId source = kNoNode;
    NodeId target = kNoNode;
    double fov_y = kPi / 3.0;
    double aspect = 16.0 / 9.0;
};

struct SceneNode {
    NodeId id = 0;
    std::string name;
    Transform local;
    std::optional<NodeId> parent;
    std::vector<NodeId> children;

    std::optional<EntityDef> entity;
    std::optional<LightDef> light;
    std::optional<ResolvedCameraAnchor> camera;
    std::vector<SoundDef> sounds;
    std::optional<BodyId> physics_body;  // graphics bodies only
};

// Instantiated scene: transform forest plus the physics world it feeds.
class World {
public:
    World() = default;

    static World instantiate(const SceneDocument& doc, std::string_view scene_name,
                             const std::filesystem::path& asset_dir = {}) {
        const SceneDef* scene = doc.find_scene(scene_name);
        if (!scene) throw UnknownScene("no scene named '" + std::string(scene_name) + "' in document");
        FileResolver resolver = asset_dir.empty() ? FileResolver{} : directory_resolver(asset_dir);
        std::vector<Diagnostic> diags = validate(doc, resolver);
        if (has_errors(diags)) {
            std::string msg = "document fails validation:";
            for (const Diagnostic& d : diags)
                if (d.severity == Severity::error) msg += "\n  " + d.path + ": [" + d.code + "] " + d.message;
            throw ValidationFailed(msg);
        }

        World world;
        world.asset_dir_ = asset_dir;
        world.attributes_ = scene->attributes;
        world.physics_ = PhysicsWorld(scene->attributes.gravity);

        struct PendingCamera {
            NodeId node;
            std::string source, target;
            double fov_y, aspect;
        };
        std::vector<PendingCamera> cameras;
        std::vector<std::pair<NodeId, const BodyDef*>> bodies;

        auto build = [&](auto&& self, const NodeDef& def, std::optional<NodeId> parent) -> NodeId {
            NodeId id = static_cast<NodeId>(world.nodes_.size());
            world.nodes_.emplace_back();
            SceneNode& node = world.nodes_.back();
            node.id = id;
            node.name = def.name;
            node.local = {def.position, def.orientation, def.scale};
            node.parent = parent;
            node.entity = def.entity;
            node.light = def.light;
            node.sounds = def.sounds;
            world.by_name_.emplace(def.name, id);
            if (def.camera)
                cameras.push_back({id, def.camera->source_node, def.camera->target_node, def.camera->fov_y,
                                   def.camera->aspect});
            if (def.body) bodies.emplace_back(id, &*def.body);
            for (const NodeDef& child : def.children) {
                NodeId child_id = self(self, child, id);
                world.nodes_[id].children.push_back(child_id);
            }
            return id;
        };
        for (const NodeDef& root : scene->root_nodes) world.roots_.push_back(build(build, root, std::nullopt));

        for (const PendingCamera& cam : cameras) {
            ResolvedCameraAnchor anchor;
            anchor.source = world.by_name_.at(cam.source);
            anchor.target = world.by_name_.at(cam.target);
            anchor.fov_y = cam.fov_y;
            anchor.aspect = cam.aspect;
            world.nodes_[cam.node].camera = anchor;
        }

        // Bodies route into the physics world; actors get no node link.
        for (const auto& [node_id, body_def] : bodies) {
            PhysicsBodyDesc desc;
            desc.kind = body_def->actor.is_static ? BodyKind::Static : BodyKind::Dynamic;
            desc.shape = world.make_shape(body_def->shape);
            Transform wt = world.world_transform(node_id);
            desc.pose = {wt.position, wt.orientation};  // physics ignores node scale
            if (body_def->actor.mass) desc.mass = *body_def->actor.mass;
            desc.skin_width = body_def->actor.skin_width;
            desc.group = body_def->actor.group;
            if (body_def->has_graphics) desc.linked_node = node_id;
            BodyId body_id = world.physics_.add_body(desc);
            if (body_def->has_graphics) world.nodes_[node_id].physics_body = body_id;
        }
        ++world.generation_;
        return world;
    }

    const SceneAttributes& attributes() const { return attributes_; }
    PhysicsWorld& physics() { return physics_; }
    const PhysicsWorld& physics() const { return physics_; }
    std::uint64_t generation() const { return generation_; }
    const std::filesystem::path& asset_dir() const { return asset_dir_; }

    // Single-instance contract for character registries.
    bool registry_bound() const { return registry_bound_; }
    void bind_registry() { registry_bound_ = true; }
    void release_registry() { registry_bound_ = false; }

    std::size_t node_count() const { return nodes_.size(); }
    const std::vector<NodeId>& roots() const { return roots_; }

    const SceneNode& node(NodeId id) const {
        check(id);
        return nodes_[id];
    }

    std::optional<NodeId> find_node(std::string_view name) const {
        auto it = by_name_.find(std::string(name));
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }

    NodeId add_node(const std::string& name, std::optional<NodeId> parent = std::nullopt) {
        if (parent) check(*parent);
        NodeId id = static_cast<NodeId>(nodes_.size());
        nodes_.emplace_back();
        SceneNode& n = nodes_.back();
        n.id = id;
        n.name = name;
        n.parent = parent;
        if (parent) nodes_[*parent].children.push_back(id);
        else roots_.push_back(id);
        by_name_.emplace(name, id);
        ++generation_;
        return id;
    }

    void set_local_transform(NodeId id, const Transform& t) {
        check(id);
        if (!is_finite(t.position) || !is_finite(t.orientation) || !is_finite(t.scale))
            throw InvalidTransform("transform has non-finite components");
        if (!is_unit(t.orientation))
            throw InvalidTransform("orientation quaternion is not unit length");
        if (!(t.scale.x > 0 && t.scale.y > 0 && t.scale.z > 0))
            throw InvalidTransform("scale components must be > 0");
        nodes_[id].local = t;
        ++generation_;
    }

    const Transform& local_transform(NodeId id) const {
        check(id);
        return nodes_[id].local;
    }

    // Root-to-node composition, cached per generation.
    Transform world_transform(NodeId id) const {
        check(id);
        if (cache_.size() != nodes_.size()) cache_.assign(nodes_.size(), CacheEntry{});
        CacheEntry& entry = cache_[id];
        if (entry.stamp == generation_ && generation_ != 0) return entry.world;
        const SceneNode& n = nodes_[id];
        Transform composed = n.parent ? compose(world_transform(*n.parent), n.local) : n.local;
        entry.world = composed;
        entry.stamp = generation_;
        return composed;
    }

    // Moves a subtree under a new parent (or to the roots). Rejects cycles.
    void reparent(NodeId id, std::optional<NodeId> new_parent) {
        check(id);
        if (new_parent) {
            check(*new_parent);
            for (std::optional<NodeId> walk = new_parent; walk; walk = nodes_[*walk].parent)
                if (*walk == id) throw CycleError("reparenting would create a cycle");
        }
        auto detach = [&](std::vector<NodeId>& list) {
            for (std::size_t i = 0; i < list.size(); ++i)
                if (list[i] == id) {
                    list.erase(list.begin() + i);
                    return;
                }
        };
        if (nodes_[id].parent) detach(nodes_[*nodes_[id].parent].children);
        else detach(roots_);
        nodes_[id].parent = new_parent;
        if (new_parent) nodes_[*new_parent].children.push_back(id);
        else roots_.push_back(id);
        ++generation_;
    }

    // Tight world-space box of the node's physics shape or entity mesh.
    AABB world_aabb(NodeId id) const {
        check(id);
        const SceneNode& n = nodes_[id];
        if (n.physics_body) return physics_.body_aabb(*n.physics_body);
        if (n.entity) {
            const TriangleMeshData* mesh = entity_mesh(id);
            if (mesh) {
                Transform wt = world_transform(id);
                AABB box = AABB::empty();
                for (const Vec3& v : mesh->vertices) box.expand(transform_point(wt, v));
                return box;
            }
        }
        throw NoBounds("node '" + n.name + "' carries no bounded shape");
    }

    bool has_bounds(NodeId id) const {
        check(id);
        const SceneNode& n = nodes_[id];
        return n.physics_body.has_value() || (n.entity && entity_mesh(id) != nullptr);
    }

    // After a physics step, push body poses back onto their linked nodes,
    // converting world poses into the parent frame where needed.
    void sync_bodies_to_nodes() {
        bool changed = false;
        for (std::size_t i = 0; i < physics_.body_count(); ++i) {
            const RigidBody& b = physics_.body(static_cast<BodyId>(i));
            if (b.kind != BodyKind::Dynamic || !b.linked_node) continue;
            SceneNode& n = nodes_[*b.linked_node];
            if (n.parent) {
                Transform pw = world_transform(*n.parent);
                Quat inv = conjugate(pw.orientation);
                Vec3 rel = rotate(inv, b.pose.position - pw.position);
                n.local.position = {rel.x / pw.scale.x, rel.y / pw.scale.y, rel.z / pw.scale.z};
                n.local.orientation = inv * b.pose.orientation;
            } else {
                n.local.position = b.pose.position;
                n.local.orientation = b.pose.orientation;
            }
            changed = true;
        }
        if (changed) ++generation_;
    }

private:
    struct CacheEntry {
        std::uint64_t stamp = 0;
        Transform world;
    };

    void check(NodeId id) const {
        if (id >= nodes_.size()) throw UnknownNode("no node with id " + std::to_string(id));
    }

    CollisionShape make_shape(const ShapeDef& def) {
        switch (def.kind) {
            case ShapeKind::cube: return BoxShape{def.half_extents};
            case ShapeKind::sphere: return SphereShape{def.radius};
            case ShapeKind::capsule: return CapsuleShape{def.radius, def.height * 0.5};
            case ShapeKind::convex: {
                TriangleMeshData mesh = load_mesh_asset(asset_dir_ / def.file);
                return ConvexShape{mesh.vertices};
            }
            case ShapeKind::trimesh: {
                TriangleMeshData mesh = load_mesh_asset(asset_dir_ / def.file);
                return TriMeshShape{TriMeshShape::Data::make(mesh)};
            }
        }
        return SphereShape{0.5};
    }

    const TriangleMeshData* entity_mesh(NodeId id) const {
        auto it = mesh_cache_.find(id);
        if (it != mesh_cache_.end()) return it->second ? &*it->second : nullptr;
        std::optional<TriangleMeshData> loaded;
        if (!asset_dir_.empty()) {
            try {
                loaded = load_mesh_asset(asset_dir_ / nodes_[id].entity->mesh_file);
            } catch (const Error&) {
                loaded.reset();  // unreadable entity meshes simply have no bounds
            }
        }
        auto [pos, inserted] = mesh_cache_.emplace(id, std::move(loaded));
        return pos->second ? &*pos->second : nullptr;
    }

    std::vector<SceneNode> nodes_;
    std::vector<NodeId> roots_;
    std::map<std::string, NodeId> by_name_;
    PhysicsWorld physics_;
    SceneAttributes attributes_;
    std::filesystem::path asset_dir_;
    std::uint64_t generation_ = 1;
    bool registry_bound_ = false;
    mutable std::vector<CacheEntry> cache_;
    mutable std::map<NodeId, std::optional<TriangleMeshData>> mesh_cache_;
};

}  // namespace vekit
