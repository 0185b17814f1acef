#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/narrowphase.hpp"
#include "vekit/shapes.hpp"
#include "vekit/spatial.hpp"

namespace vekit {

using BodyId = std::uint32_t;

struct InvalidShape : Error {
    explicit InvalidShape(const std::string& msg) : Error(msg) {}
};
struct InvalidMass : Error {
    explicit InvalidMass(const std::string& msg) : Error(msg) {}
};
struct NonFiniteState : Error {
    explicit NonFiniteState(const std::string& msg) : Error(msg) {}
};
struct GroupOutOfRange : Error {
    explicit GroupOutOfRange(const std::string& msg) : Error(msg) {}
};
struct UnknownBody : Error {
    explicit UnknownBody(const std::string& msg) : Error(msg) {}
};

enum class BodyKind { Static, Dynamic, Kinematic };

struct PhysMaterial {
    double friction = 0.5;     // [0,1]
    double restitution = 0.0;  // [0,1]
};

struct PhysicsBodyDesc {
    BodyKind kind = BodyKind::Static;
    CollisionShape shape = SphereShape{0.5};
    Pose3 pose;
    double mass = 0.0;  // dynamic only
    PhysMaterial material;
    double skin_width = 0.025;
    int group = 0;
    std::optional<std::uint32_t> linked_node;
};

struct RigidBody {
    BodyId id = 0;
    BodyKind kind = BodyKind::Static;
    CollisionShape shape = SphereShape{0.5};
    Pose3 pose;
    Vec3 linear_velocity{};
    Vec3 angular_velocity{};
    double mass = 0.0;
    double inv_mass = 0.0;
    Mat3 inv_inertia_body = Mat3::zero();
    PhysMaterial material;
    double skin_width = 0.025;
    int group = 0;
    std::optional<std::uint32_t> linked_node;
    std::uint64_t pose_writes = 0;  // bumped on every pose mutation

    Mat3 inv_inertia_world() const {
        Mat3 r = to_mat3(pose.orientation);
        return r * inv_inertia_body * transposed(r);
    }
};

struct Contact {
    BodyId body_a = 0;
    BodyId body_b = 0;
    Vec3 point{};
    Vec3 normal{0, 1, 0};  // from a toward b
    double penetration_depth = 0.0;
};

struct HitReport {
    BodyId source = 0;
    BodyId other = 0;
    int other_group = 0;
    Vec3 normal{0, 1, 0};
    Vec3 applied_impulse{};
};

struct SweepHit {
    double t = 1.0;        // fraction of the displacement
    Vec3 normal{0, 1, 0};  // contact normal, from the hit body toward the swept shape
    BodyId other = 0;
    Vec3 point{};  // on the hit body's surface
    // Normal of the touched surface feature (box face / triangle plane);
    // capsules resting on edges report the face they would stand on.
    Vec3 surface_normal{0, 1, 0};
};

struct SolverConfig {
    int iterations = 8;
    double baumgarte = 0.2;   // fraction of penetration corrected per step
    double slop = 0.005;      // meters of tolerated penetration
};

class PhysicsWorld {
public:
    explicit PhysicsWorld(const Vec3& gravity = {0, -9.81, 0}) : gravity_(gravity) {
        group_matrix_.fill(0xffffffffu);  // all pairs enabled by default
    }

    const Vec3& gravity() const { return gravity_; }
    void set_gravity(const Vec3& g) { gravity_ = g; }

    SolverConfig& solver_config() { return config_; }
    const SolverConfig& solver_config() const { return config_; }

    BodyId add_body(const PhysicsBodyDesc& desc) {
        if (desc.group < 0 || desc.group > 31)
            throw GroupOutOfRange("body group " + std::to_string(desc.group) + " outside [0,31]");
        if (is_trimesh(desc.shape) && desc.kind != BodyKind::Static)
            throw InvalidShape("triangle meshes are restricted to static bodies");
        if (const auto* hull = std::get_if<ConvexShape>(&desc.shape)) {
            if (hull_is_degenerate(hull->vertices))
                throw InvalidShape("convex shape needs at least four non-coplanar vertices");
        }
        RigidBody body;
        body.id = static_cast<BodyId>(bodies_.size());
        body.kind = desc.kind;
        body.shape = desc.shape;
        body.pose = desc.pose;
        body.material = desc.material;
        body.skin_width = desc.skin_width;
        body.group = desc.group;
        body.linked_node = desc.linked_node;
        if (desc.kind == BodyKind::Dynamic) {
            if (!(desc.mass > 0.0) || !std::isfinite(desc.mass))
                throw InvalidMass("dynamic body requires a positive finite mass");
            body.mass = desc.mass;
            body.inv_mass = 1.0 / desc.mass;
            body.inv_inertia_body = inverse_diagonal(inertia_tensor(desc.shape, desc.mass));
        }
        bodies_.push_back(std::move(body));
        return bodies_.back().id;
    }

    std::size_t body_count() const { return bodies_.size(); }

    const RigidBody& body(BodyId id) const {
        check(id);
        return bodies_[id];
    }

    void set_linear_velocity(BodyId id, const Vec3& v) {
        check(id);
        if (bodies_[id].kind == BodyKind::Static) return;
        bodies_[id].linear_velocity = v;
    }

    void set_angular_velocity(BodyId id, const Vec3& w) {
        check(id);
        if (bodies_[id].kind == BodyKind::Static) return;
        bodies_[id].angular_velocity = w;
    }

    void set_material(BodyId id, const PhysMaterial& m) {
        check(id);
        bodies_[id].material = m;
    }

    // Kinematic bodies move only through explicit pose writes; dynamic bodies
    // may be teleported. Static poses are immutable.
    void set_pose(BodyId id, const Pose3& pose) {
        check(id);
        RigidBody& b = bodies_[id];
        if (b.kind == BodyKind::Static) return;
        b.pose = pose;
        ++b.pose_writes;
    }

    void replace_shape(BodyId id, const CollisionShape& shape) {
        check(id);
        RigidBody& b = bodies_[id];
        if (is_trimesh(shape) && b.kind != BodyKind::Static)
            throw InvalidShape("triangle meshes are restricted to static bodies");
        b.shape = shape;
        if (b.kind == BodyKind::Dynamic)
            b.inv_inertia_body = inverse_diagonal(inertia_tensor(shape, b.mass));
    }

    void apply_impulse(BodyId id, const Vec3& impulse, const Vec3& point) {
        check(id);
        RigidBody& b = bodies_[id];
        if (b.kind != BodyKind::Dynamic) return;
        b.linear_velocity += impulse * b.inv_mass;
        b.angular_velocity += b.inv_inertia_world() * cross(point - b.pose.position, impulse);
    }

    void set_group_interaction(int g1, int g2, bool enabled) {
        if (g1 < 0 || g1 > 31 || g2 < 0 || g2 > 31)
            throw GroupOutOfRange("groups must lie in [0,31]");
        std::uint32_t bit1 = 1u << g2, bit2 = 1u << g1;
        if (enabled) {
            group_matrix_[g1] |= bit1;
            group_matrix_[g2] |= bit2;
        } else {
            group_matrix_[g1] &= ~bit1;
            group_matrix_[g2] &= ~bit2;
        }
    }

    bool group_enabled(int g1, int g2) const {
        return (group_matrix_[g1] >> g2) & 1u;
    }

    std::uint32_t interaction_mask(int group) const { return group_matrix_[group]; }

    AABB body_aabb(BodyId id) const {
        check(id);
        return shape_aabb(bodies_[id].shape, bodies_[id].pose);
    }

    // Semi-implicit Euler step with sequential-impulse contact resolution.
    // Returns this step's hit reports (ascending pair ids).
    const std::vector<HitReport>& step(double dt) {
        events_.clear();
        if (!(dt > 0.0)) throw Error("step requires dt > 0");
        std::vector<Snapshot> saved = snapshot();
        try {
            for (RigidBody& b : bodies_) {
                if (b.kind != BodyKind::Dynamic) continue;
                b.linear_velocity += gravity_ * dt;
            }
            for (RigidBody& b : bodies_) {
                if (b.kind != BodyKind::Dynamic) continue;
                b.pose.position += b.linear_velocity * dt;
                integrate_orientation(b, dt);
                ++b.pose_writes;
            }

            check_finite(saved);

            std::vector<SolverContact> contacts = find_contacts();
            for (int iter = 0; iter < config_.iterations; ++iter)
                for (SolverContact& c : contacts) velocity_impulse(c);
            for (SolverContact& c : contacts) positional_correction(c);

            check_finite(saved);

            for (const SolverContact& c : contacts) {
                HitReport report;
                report.source = c.contact.body_a;
                report.other = c.contact.body_b;
                report.other_group = bodies_[c.contact.body_b].group;
                report.normal = c.contact.normal;
                report.applied_impulse = c.applied_to_b;
                events_.push_back(report);
            }
        } catch (const NonFiniteState&) {
            throw;
        } catch (...) {
            restore(saved);
            events_.clear();
            throw;
        }
        return events_;
    }

    const std::vector<HitReport>& events() const { return events_; }

    // Deepest contact between the pair, ids attached; see narrowphase collide().
    std::optional<Contact> narrowphase_pair(BodyId a, BodyId b) const {
        check(a);
        check(b);
        auto contact = collide(bodies_[a].shape, bodies_[a].pose, bodies_[b].shape, bodies_[b].pose);
        if (!contact) return std::nullopt;
        Contact out;
        out.body_a = a;
        out.body_b = b;
        out.point = contact->point;
        out.normal = contact->normal;
        out.penetration_depth = contact->depth;
        return out;
    }

    // Public per-contact resolution: velocity impulse (restitution + Coulomb
    // friction) followed by Baumgarte positional correction.
    void resolve(const Contact& contact, double dt) {
        (void)dt;  // the impulse formulation is dt-free; bias uses positional projection
        SolverContact c;
        c.contact = contact;
        velocity_impulse(c);
        positional_correction(c);
    }

    // Earliest time of impact of a swept shape against group-permitted bodies.
    // `contact_offset` is the surface gap treated as touching. Conservative
    // advancement per convex target (trimeshes advance per triangle); a touch
    // only counts as a hit when the motion closes against the surface, so
    // surfaces being slid along do not retrigger.
    std::optional<SweepHit> sweep(const CollisionShape& shape, const Pose3& pose, const Vec3& displacement,
                                  std::uint32_t group_mask, const std::vector<BodyId>& exclude,
                                  double contact_offset = 1e-4) const {
        constexpr double kTolerance = 1e-4;
        double len = length(displacement);
        if (!(len > 1e-12)) return std::nullopt;
        Vec3 dir = displacement / len;

        AABB from = shape_aabb(shape, pose);
        Pose3 end_pose = pose;
        end_pose.position += displacement;
        AABB swept = union_of(from, shape_aabb(shape, end_pose)).inflated(contact_offset + kTolerance);

        std::optional<SweepHit> best;
        // most vertical surface feature containing the contact point; boxes
        // report a face normal so edge contacts classify by what they rest on
        auto classify_surface = [](const CollisionShape& other_shape, const Pose3& other_pose,
                                   const Vec3& point, const Vec3& contact_normal) {
            if (const auto* box = std::get_if<BoxShape>(&other_shape)) {
                Vec3 local = other_pose.to_local(point);
                Vec3 best_normal = contact_normal;
                double best_y = -2.0;
                for (int axis = 0; axis < 3; ++axis) {
                    double h = box->half_extents[axis];
                    double tol = 1e-5 * std::max(1.0, h);
                    for (double side : {1.0, -1.0}) {
                        if (std::abs(local[axis] - side * h) > tol) continue;
                        Vec3 face_local{};
                        face_local[axis] = side;
                        Vec3 face_world = rotate(other_pose.orientation, face_local);
                        if (face_world.y > best_y) {
                            best_y = face_world.y;
                            best_normal = face_world;
                        }
                    }
                }
                return best_normal;
            }
            return contact_normal;
        };

        // distance_fn(pose_t, window) -> gap to one convex target
        auto advance_against = [&](auto&& distance_fn, BodyId other_id, const CollisionShape& other_shape,
                                   const Pose3& other_pose, bool whole_body,
                                   const Vec3* triangle_normal) {
            double t = 0.0;
            Pose3 pose_t = pose;
            for (int iter = 0; iter < 128; ++iter) {
                if (best && t >= best->t) return;  // cannot beat the current earliest hit
                double window = (1.0 - t) * len + contact_offset + kTolerance;
                std::optional<DistanceResult> d = distance_fn(pose_t, window);
                if (!d) return;
                if (d->distance <= contact_offset + kTolerance) {
                    Vec3 normal;
                    Vec3 point = d->point_on_b;
                    if (length_sq(d->normal) > 0.25) {
                        normal = d->normal;
                    } else if (whole_body) {
                        // cores overlap: fall back to the contact normal
                        auto contact = collide(shape, pose_t, other_shape, other_pose);
                        normal = contact ? -contact->normal : -dir;
                        point = contact ? contact->point : pose_t.position;
                    } else if (triangle_normal) {
                        normal = dot(*triangle_normal, dir) > 0.0 ? -*triangle_normal : *triangle_normal;
                    } else {
                        normal = -dir;
                    }
                    // moving away from or parallel to a touched convex surface:
                    // the gap cannot shrink again along a straight path
                    if (-dot(dir, normal) <= 1e-9) return;
                    SweepHit hit;
                    hit.t = t;
                    hit.normal = normal;
                    hit.other = other_id;
                    hit.point = point;
                    if (triangle_normal) {
                        Vec3 tn = *triangle_normal;
                        if (dot(tn, normal) < 0.0) tn = -tn;  // orient toward the swept shape
                        hit.surface_normal = tn;
                    } else {
                        hit.surface_normal = classify_surface(other_shape, other_pose, point, normal);
                    }
                    if (!best || hit.t < best->t) best = hit;
                    return;
                }
                double advance = (d->distance - contact_offset) / len;
                if (advance <= 0.0) advance = kTolerance / len;
                t += advance;
                if (t >= 1.0) return;
                pose_t.position = pose.position + displacement * t;
            }
        };

        for (const RigidBody& b : bodies_) {
            if (!((group_mask >> b.group) & 1u)) continue;
            bool skip = false;
            for (BodyId ex : exclude)
                if (ex == b.id) skip = true;
            if (skip) continue;
            if (!overlaps(swept, shape_aabb(b.shape, b.pose))) continue;

            if (const auto* mesh = std::get_if<TriMeshShape>(&b.shape)) {
                AABB local_query = AABB::empty();
                for (int i = 0; i < 8; ++i) local_query.expand(b.pose.to_local(swept.corner(i)));
                for (ObjectId tri_index : query_overlaps(mesh->data->bvh, local_query)) {
                    const auto& tri = mesh->data->triangles[tri_index];
                    Vec3 ta = b.pose.to_world(mesh->data->vertices[tri[0]]);
                    Vec3 tb = b.pose.to_world(mesh->data->vertices[tri[1]]);
                    Vec3 tc = b.pose.to_world(mesh->data->vertices[tri[2]]);
                    Vec3 tn = normalized(cross(tb - ta, tc - ta));
                    advance_against(
                        [&](const Pose3& pose_t, double) {
                            return std::optional<DistanceResult>(
                                shape_triangle_distance(shape, pose_t, ta, tb, tc));
                        },
                        b.id, b.shape, b.pose, false, &tn);
                }
            } else {
                advance_against(
                    [&](const Pose3& pose_t, double window) {
                        return shape_distance(shape, pose_t, b.shape, b.pose, window);
                    },
                    b.id, b.shape, b.pose, true, nullptr);
            }
        }
        return best;
    }

    // Deepest overlap of a posed shape against group-permitted bodies.
    std::optional<Contact> deepest_overlap(const CollisionShape& shape, const Pose3& pose,
                                           std::uint32_t group_mask,
                                           const std::vector<BodyId>& exclude) const {
        AABB query = shape_aabb(shape, pose).inflated(1e-6);
        std::optional<Contact> best;
        for (const RigidBody& b : bodies_) {
            if (!((group_mask >> b.group) & 1u)) continue;
            bool skip = false;
            for (BodyId ex : exclude)
                if (ex == b.id) skip = true;
            if (skip) continue;
            if (!overlaps(query, shape_aabb(b.shape, b.pose))) continue;
            auto contact = collide(shape, pose, b.shape, b.pose);
            if (!contact) continue;
            if (!best || contact->depth > best->penetration_depth) {
                Contact c;
                c.body_a = 0;
                c.body_b = b.id;
                c.point = contact->point;
                c.normal = contact->normal;
                c.penetration_depth = contact->depth;
                best = c;
            }
        }
        return best;
    }

private:
    struct Snapshot {
        Pose3 pose;
        Vec3 lin, ang;
        std::uint64_t pose_writes;
    };

    struct SolverContact {
        Contact contact;
        Vec3 applied_to_b{};
    };

    void check(BodyId id) const {
        if (id >= bodies_.size()) throw UnknownBody("no body with id " + std::to_string(id));
    }

    std::vector<Snapshot> snapshot() const {
        std::vector<Snapshot> out(bodies_.size());
        for (std::size_t i = 0; i < bodies_.size(); ++i)
            out[i] = {bodies_[i].pose, bodies_[i].linear_velocity, bodies_[i].angular_velocity,
                      bodies_[i].pose_writes};
        return out;
    }

    void check_finite(const std::vector<Snapshot>& saved) {
        for (const RigidBody& b : bodies_) {
            if (b.kind == BodyKind::Static) continue;
            if (!is_finite(b.pose.position) || !is_finite(b.pose.orientation) ||
                !is_finite(b.linear_velocity) || !is_finite(b.angular_velocity)) {
                BodyId id = b.id;
                restore(saved);
                events_.clear();
                throw NonFiniteState("non-finite state on body " + std::to_string(id));
            }
        }
    }

    void restore(const std::vector<Snapshot>& saved) {
        for (std::size_t i = 0; i < saved.size(); ++i) {
            bodies_[i].pose = saved[i].pose;
            bodies_[i].linear_velocity = saved[i].lin;
            bodies_[i].angular_velocity = saved[i].ang;
            bodies_[i].pose_writes = saved[i].pose_writes;
        }
    }

    static void integrate_orientation(RigidBody& b, double dt) {
        const Vec3& w = b.angular_velocity;
        if (length_sq(w) < 1e-30) return;
        Quat dq = Quat{0, w.x, w.y, w.z} * b.pose.orientation;
        Quat q{b.pose.orientation.w + 0.5 * dt * dq.w, b.pose.orientation.x + 0.5 * dt * dq.x,
               b.pose.orientation.y + 0.5 * dt * dq.y, b.pose.orientation.z + 0.5 * dt * dq.z};
        b.pose.orientation = normalized(q);
    }

    std::vector<SolverContact> find_contacts() {
        std::vector<IndexedBox> boxes;
        boxes.reserve(bodies_.size());
        for (const RigidBody& b : bodies_)
            boxes.push_back({b.id, shape_aabb(b.shape, b.pose)});
        Bvh bvh = Bvh::build(boxes);

        std::vector<SolverContact> contacts;
        for (const auto& [a, b] : broadphase_pairs(bvh)) {
            const RigidBody& ba = bodies_[a];
            const RigidBody& bb = bodies_[b];
            if (!group_enabled(ba.group, bb.group)) continue;
            // characters are kinematic capsules; they collide through sweeps,
            // not the contact solver
            if (ba.kind == BodyKind::Kinematic || bb.kind == BodyKind::Kinematic) continue;
            if (ba.kind != BodyKind::Dynamic && bb.kind != BodyKind::Dynamic) continue;
            auto contact = collide(ba.shape, ba.pose, bb.shape, bb.pose);
            if (!contact) continue;
            SolverContact sc;
            sc.contact = {a, b, contact->point, contact->normal, contact->depth};
            contacts.push_back(sc);
        }
        return contacts;
    }

    void velocity_impulse(SolverContact& sc) {
        RigidBody& a = bodies_[sc.contact.body_a];
        RigidBody& b = bodies_[sc.contact.body_b];
        const Vec3& n = sc.contact.normal;
        Vec3 ra = sc.contact.point - a.pose.position;
        Vec3 rb = sc.contact.point - b.pose.position;
        double inv_ma = a.kind == BodyKind::Dynamic ? a.inv_mass : 0.0;
        double inv_mb = b.kind == BodyKind::Dynamic ? b.inv_mass : 0.0;
        Mat3 ia = a.kind == BodyKind::Dynamic ? a.inv_inertia_world() : Mat3::zero();
        Mat3 ib = b.kind == BodyKind::Dynamic ? b.inv_inertia_world() : Mat3::zero();

        auto point_velocity = [&](const RigidBody& body, const Vec3& r) {
            return body.linear_velocity + cross(body.angular_velocity, r);
        };
        Vec3 vrel = point_velocity(b, rb) - point_velocity(a, ra);
        double vn = dot(vrel, n);

        double e = std::min(a.material.restitution, b.material.restitution);
        double kn = inv_ma + inv_mb + dot(n, cross(ia * cross(ra, n), ra)) +
                    dot(n, cross(ib * cross(rb, n), rb));
        if (kn <= 0.0) return;
        double j = -(1.0 + e) * vn / kn;
        if (j < 0.0) j = 0.0;
        if (j > 0.0) {
            Vec3 impulse = n * j;
            a.linear_velocity -= impulse * inv_ma;
            a.angular_velocity -= ia * cross(ra, impulse);
            b.linear_velocity += impulse * inv_mb;
            b.angular_velocity += ib * cross(rb, impulse);
            sc.applied_to_b += impulse;
        }

        // Coulomb friction clamped to mu * j
        double mu = std::min(a.material.friction, b.material.friction);
        if (mu <= 0.0 || j <= 0.0) return;
        vrel = point_velocity(b, rb) - point_velocity(a, ra);
        Vec3 vt = vrel - n * dot(vrel, n);
        double vt_len = length(vt);
        if (vt_len < 1e-12) return;
        Vec3 t = vt / vt_len;
        double kt = inv_ma + inv_mb + dot(t, cross(ia * cross(ra, t), ra)) +
                    dot(t, cross(ib * cross(rb, t), rb));
        if (kt <= 0.0) return;
        double jt = -vt_len / kt;
        jt = std::clamp(jt, -mu * j, mu * j);
        Vec3 friction = t * jt;
        a.linear_velocity -= friction * inv_ma;
        a.angular_velocity -= ia * cross(ra, friction);
        b.linear_velocity += friction * inv_mb;
        b.angular_velocity += ib * cross(rb, friction);
        sc.applied_to_b += friction;
    }

    void positional_correction(const SolverContact& sc) {
        if (config_.baumgarte <= 0.0) return;
        RigidBody& a = bodies_[sc.contact.body_a];
        RigidBody& b = bodies_[sc.contact.body_b];
        double inv_ma = a.kind == BodyKind::Dynamic ? a.inv_mass : 0.0;
        double inv_mb = b.kind == BodyKind::Dynamic ? b.inv_mass : 0.0;
        double inv_sum = inv_ma + inv_mb;
        if (inv_sum <= 0.0) return;
        double excess = sc.contact.penetration_depth - config_.slop;
        if (excess <= 0.0) return;
        Vec3 correction = sc.contact.normal * (config_.baumgarte * excess / inv_sum);
        if (inv_ma > 0.0) {
            a.pose.position -= correction * inv_ma;
            ++a.pose_writes;
        }
        if (inv_mb > 0.0) {
            b.pose.position += correction * inv_mb;
            ++b.pose_writes;
        }
    }

    Vec3 gravity_;
    std::vector<RigidBody> bodies_;
    std::array<std::uint32_t, 32> group_matrix_{};
    SolverConfig config_;
    std::vector<HitReport> events_;
};

}  // namespace vekit
