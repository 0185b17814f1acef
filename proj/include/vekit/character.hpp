#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/physics.hpp"
#include "vekit/scene_graph.hpp"

namespace vekit {

using CharacterId = std::uint32_t;

struct RegistryExists : Error {
    explicit RegistryExists(const std::string& msg) : Error(msg) {}
};
struct InvalidDesc : Error {
    explicit InvalidDesc(const std::string& msg) : Error(msg) {}
};
struct SpawnBlocked : Error {
    explicit SpawnBlocked(const std::string& msg) : Error(msg) {}
};
struct UnknownCharacter : Error {
    explicit UnknownCharacter(const std::string& msg) : Error(msg) {}
};
struct NonFiniteVelocity : Error {
    explicit NonFiniteVelocity(const std::string& msg) : Error(msg) {}
};
struct HeightOutOfBounds : Error {
    explicit HeightOutOfBounds(const std::string& msg) : Error(msg) {}
};

struct CharacterDesc {
    double capsule_radius = 0.3;
    double capsule_height = 1.2;  // cylinder segment, caps excluded
    double mass = 80.0;
    double step_offset = 0.3;
    double slope_limit = kPi / 4.0;  // radians from vertical
    double skin = 0.025;
    int group = 0;
    std::uint32_t walkable_groups = 0xffffffffu;
    double push_strength = 1.0;  // k in the push impulse
    double eye_height = 1.6;
};

struct CharacterState {
    CharacterId id = 0;
    CharacterDesc desc;
    Vec3 position{};  // foot point: lowest point of the capsule
    double yaw = 0.0;
    Vec3 velocity{};             // movement intent consumed by simulate
    double vertical_speed = 0.0;  // gravity accumulator / jump speed
    bool grounded = false;
    double current_height = 1.2;  // crouch-modified cylinder segment
    NodeId linked_node = kNoNode;
    BodyId body = 0;
};

// Push impulse applied to dynamic bodies the character runs into:
// J = k * m * max(0, v . n) * n with n the horizontal contact normal
// pointing from the character into the body.
inline Vec3 compute_push_impulse(double push_strength, double character_mass, const Vec3& velocity,
                                 const Vec3& push_normal) {
    double along = dot(velocity, push_normal);
    if (along <= 0.0) return {};
    return push_normal * (push_strength * character_mass * along);
}

// Kinematic capsule controllers bound to one World. Only one registry may
// exist per world at a time, and the world must stay at its address (no
// moves) while a registry is bound to it.
class ControllerRegistry {
public:
    static ControllerRegistry create(World& world) {
        if (world.registry_bound())
            throw RegistryExists("a controller registry already exists for this world");
        world.bind_registry();
        return ControllerRegistry(&world);
    }

    ControllerRegistry(ControllerRegistry&& other) noexcept
        : world_(other.world_),
          characters_(std::move(other.characters_)),
          callbacks_(std::move(other.callbacks_)),
          next_handle_(other.next_handle_) {
        other.world_ = nullptr;
    }
    ControllerRegistry& operator=(ControllerRegistry&&) = delete;
    ControllerRegistry(const ControllerRegistry&) = delete;
    ControllerRegistry& operator=(const ControllerRegistry&) = delete;

    ~ControllerRegistry() {
        if (world_) world_->release_registry();
    }

    std::size_t size() const { return characters_.size(); }

    CharacterId add_character(const CharacterDesc& desc, const Vec3& spawn_position, double yaw) {
        validate_desc(desc);
        PhysicsWorld& px = world_->physics();

        CharacterState c;
        c.id = static_cast<CharacterId>(characters_.size());
        c.desc = desc;
        c.position = spawn_position;
        c.yaw = yaw;
        c.current_height = desc.capsule_height;

        std::uint32_t mask = px.interaction_mask(desc.group);
        CollisionShape shape = capsule_shape(c);
        Pose3 pose = capsule_pose(c);
        auto overlap = px.deepest_overlap(shape, pose, mask, {});
        if (overlap && overlap->penetration_depth > 1e-9) {
            if (overlap->penetration_depth > desc.skin)
                throw SpawnBlocked("spawn position overlaps body " + std::to_string(overlap->body_b));
            // one depenetration attempt, up to skin
            c.position -= overlap->normal * (overlap->penetration_depth + 1e-4);
            auto again = px.deepest_overlap(capsule_shape(c), capsule_pose(c), mask, {});
            if (again && again->penetration_depth > 1e-9)
                throw SpawnBlocked("spawn position still blocked after depenetration");
        }

        PhysicsBodyDesc body;
        body.kind = BodyKind::Kinematic;
        body.shape = capsule_shape(c);
        body.pose = capsule_pose(c);
        body.skin_width = desc.skin;
        body.group = desc.group;
        c.body = px.add_body(body);

        c.linked_node = world_->add_node("character#" + std::to_string(c.id));
        characters_.push_back(std::move(c));
        CharacterState& stored = characters_.back();
        world_->set_local_transform(stored.linked_node,
                                    {stored.position, Quat::from_yaw(stored.yaw), {1, 1, 1}});
        return stored.id;
    }

    const CharacterState& state(CharacterId id) const {
        check(id);
        return characters_[id];
    }

    void set_velocity(CharacterId id, const Vec3& v) {
        check(id);
        if (!is_finite(v)) throw NonFiniteVelocity("character velocity must be finite");
        characters_[id].velocity = v;
    }

    void set_yaw(CharacterId id, double yaw) {
        check(id);
        if (!std::isfinite(yaw)) throw NonFiniteVelocity("character yaw must be finite");
        characters_[id].yaw = yaw;
    }

    // Vertical launch (jumping); only meaningful while grounded.
    void launch(CharacterId id, double vertical_speed) {
        check(id);
        CharacterState& c = characters_[id];
        if (!c.grounded) return;
        c.vertical_speed = vertical_speed;
        c.grounded = false;
    }

    using HitCallbackFn = std::function<void(const HitReport&)>;

    std::uint32_t add_hit_callback(std::uint32_t group_mask, HitCallbackFn fn) {
        callbacks_.push_back({next_handle_, group_mask, std::move(fn)});
        return next_handle_++;
    }

    void remove_hit_callback(std::uint32_t handle) {
        for (std::size_t i = 0; i < callbacks_.size(); ++i)
            if (callbacks_[i].handle == handle) {
                callbacks_.erase(callbacks_.begin() + i);
                return;
            }
    }

    // Collide-and-slide with auto-stepping and walkable filtering. Returns the
    // hit reports for this character, ascending by the other body's id.
    std::vector<HitReport> simulate(CharacterId id, double dt) {
        check(id);
        if (!(dt > 0.0)) throw Error("simulate requires dt > 0");
        CharacterState& c = characters_[id];
        PhysicsWorld& px = world_->physics();
        const CharacterDesc& d = c.desc;
        std::uint32_t mask = px.interaction_mask(d.group);
        std::vector<BodyId> exclude{c.body};

        bool could_step = c.grounded;
        double g_y = px.gravity().y;
        if (!c.grounded) c.vertical_speed += g_y * dt;
        else if (c.vertical_speed < 0.0) c.vertical_speed = 0.0;

        std::vector<SweepHit> touched;

        // phase 1: movement intent
        slide_phase(c, c.velocity * dt, mask, exclude, could_step, false, touched);
        // phase 2: gravity / vertical motion
        if (std::abs(c.vertical_speed) > 1e-12)
            slide_phase(c, Vec3{0, c.vertical_speed * dt, 0}, mask, exclude, false, true, touched);
        // phase 3: ground probe — support counts within skin (offset) plus a
        // millimeter of travel below the foot
        auto support =
            px.sweep(capsule_shape(c), capsule_pose(c), {0, -1.1e-3, 0}, mask, exclude, d.skin);
        c.grounded = support_walkable(support, d);
        if (c.grounded && c.vertical_speed < 0.0) c.vertical_speed = 0.0;

        px.set_pose(c.body, capsule_pose(c));

        // hit reports and push impulses, one per touched body
        std::vector<HitReport> reports;
        Vec3 v_full = c.velocity + Vec3{0, c.vertical_speed, 0};
        for (const SweepHit& hit : touched) {
            const RigidBody& other = px.body(hit.other);
            HitReport report;
            report.source = c.body;
            report.other = hit.other;
            report.other_group = other.group;
            Vec3 push_n = -hit.normal;  // from the character into the body
            push_n.y = 0.0;
            double len = length(push_n);
            report.normal = len > 1e-9 ? push_n / len : -hit.normal;
            if (other.kind == BodyKind::Dynamic && len > 1e-9) {
                Vec3 impulse = compute_push_impulse(d.push_strength, d.mass, v_full, report.normal);
                px.apply_impulse(hit.other, impulse, hit.point);
                report.applied_impulse = impulse;
            }
            reports.push_back(report);
        }
        std::sort(reports.begin(), reports.end(),
                  [](const HitReport& a, const HitReport& b) { return a.other < b.other; });

        // callbacks observe events after all state writes, in handle order
        for (const Callback& cb : callbacks_)
            for (const HitReport& r : reports)
                if ((cb.group_mask >> r.other_group) & 1u) cb.fn(r);
        return reports;
    }

    // Sync the linked scene node from the controller pose; never touches physics.
    void render(CharacterId id) {
        check(id);
        const CharacterState& c = characters_[id];
        world_->set_local_transform(c.linked_node, {c.position, Quat::from_yaw(c.yaw), {1, 1, 1}});
    }

    // Crouch / stand. Shrinking always succeeds (foot anchored); growing
    // requires clearance and reports false when blocked.
    bool resize_volume(CharacterId id, double new_height) {
        check(id);
        CharacterState& c = characters_[id];
        const CharacterDesc& d = c.desc;
        double lo = 0.4 * d.capsule_height;
        if (new_height < lo - 1e-12 || new_height > d.capsule_height + 1e-12)
            throw HeightOutOfBounds("height " + format_double(new_height) + " outside [" +
                                    format_double(lo) + ", " + format_double(d.capsule_height) + "]");
        if (new_height == c.current_height) return true;
        PhysicsWorld& px = world_->physics();
        if (new_height > c.current_height) {
            CharacterState grown = c;
            grown.current_height = new_height;
            auto overlap = px.deepest_overlap(capsule_shape(grown), capsule_pose(grown),
                                              px.interaction_mask(d.group), {c.body});
            if (overlap && overlap->penetration_depth > 1e-6) return false;
        }
        c.current_height = new_height;
        px.replace_shape(c.body, capsule_shape(c));
        px.set_pose(c.body, capsule_pose(c));
        return true;
    }

    World& world() { return *world_; }

private:
    struct Callback {
        std::uint32_t handle;
        std::uint32_t group_mask;
        HitCallbackFn fn;
    };

    explicit ControllerRegistry(World* world) : world_(world) {}

    void check(CharacterId id) const {
        if (id >= characters_.size()) throw UnknownCharacter("no character with id " + std::to_string(id));
    }

    static void validate_desc(const CharacterDesc& d) {
        if (!(d.capsule_radius > 0) || !(d.capsule_height > 0))
            throw InvalidDesc("capsule dimensions must be > 0");
        if (!(d.mass > 0)) throw InvalidDesc("mass must be > 0");
        if (d.step_offset < 0 || d.step_offset >= d.capsule_height / 2 + d.capsule_radius)
            throw InvalidDesc("step_offset must lie in [0, height/2 + radius)");
        if (d.slope_limit < 0 || d.slope_limit >= kPi / 2)
            throw InvalidDesc("slope_limit must lie in [0, pi/2)");
        if (d.skin <= 0 || d.skin >= d.capsule_radius)
            throw InvalidDesc("skin must lie in (0, radius)");
        if (d.group < 0 || d.group > 31) throw InvalidDesc("group must lie in [0,31]");
        if (d.push_strength < 0) throw InvalidDesc("push_strength must be >= 0");
    }

    static CollisionShape capsule_shape(const CharacterState& c) {
        return CapsuleShape{c.desc.capsule_radius, c.current_height * 0.5};
    }

    static Pose3 capsule_pose(const CharacterState& c) {
        Pose3 pose;
        pose.position = c.position + Vec3{0, c.desc.capsule_radius + c.current_height * 0.5, 0};
        return pose;
    }

    // Walkable parts: gentle enough and in a permitted group; anything else
    // acts as a boundary. Sliding decisions use the contact normal (pressing
    // into the top edge of a tall obstacle must behave like a wall); support
    // decisions use the surface normal (resting on a step edge counts as
    // standing on its top face).
    bool walkable_contact(const SweepHit& hit, const CharacterDesc& d) const {
        if (!((d.walkable_groups >> world_->physics().body(hit.other).group) & 1u)) return false;
        return hit.normal.y >= std::cos(d.slope_limit);
    }

    bool walkable_surface(const SweepHit& hit, const CharacterDesc& d) const {
        if (!((d.walkable_groups >> world_->physics().body(hit.other).group) & 1u)) return false;
        return hit.surface_normal.y >= std::cos(d.slope_limit);
    }

    bool support_walkable(const std::optional<SweepHit>& hit, const CharacterDesc& d) const {
        return hit.has_value() && walkable_surface(*hit, d);
    }

    static void record_touch(std::vector<SweepHit>& touched, const SweepHit& hit) {
        for (const SweepHit& existing : touched)
            if (existing.other == hit.other) return;  // first contact wins
        touched.push_back(hit);
    }

    // Up to four sweep-and-slide iterations of one displacement. Walkable
    // surfaces slide along their plane; steeper ones act as walls and only
    // their horizontal component blocks. Auto-stepping retries blocked
    // horizontal motion from a raised position and re-drops.
    void slide_phase(CharacterState& c, Vec3 displacement, std::uint32_t mask,
                     const std::vector<BodyId>& exclude, bool allow_step, bool gravity_phase,
                     std::vector<SweepHit>& touched) {
        PhysicsWorld& px = world_->physics();
        const CharacterDesc& d = c.desc;
        Vec3 remaining = displacement;
        bool step_tried = false;
        for (int iter = 0; iter < 4 && length(remaining) > 1e-9; ++iter) {
            auto hit = px.sweep(capsule_shape(c), capsule_pose(c), remaining, mask, exclude, d.skin);
            if (!hit) {
                c.position += remaining;
                break;
            }
            record_touch(touched, *hit);
            c.position += remaining * hit->t;
            Vec3 leftover = remaining * (1.0 - hit->t);
            const Vec3& n = hit->normal;
            bool ok = walkable_contact(*hit, d);
            if (gravity_phase) {
                if (c.vertical_speed > 0.0 && n.y < -1e-6) c.vertical_speed = 0.0;  // ceiling
                if (ok && c.vertical_speed < 0.0) c.vertical_speed = 0.0;           // landing
                leftover -= n * dot(leftover, n);
            } else if (ok) {
                leftover -= n * dot(leftover, n);
            } else {
                if (allow_step && !step_tried) {
                    step_tried = true;
                    if (try_auto_step(c, leftover, mask, exclude, touched)) {
                        remaining = {};
                        break;
                    }
                }
                // wall behavior: only the horizontal normal blocks, so steep
                // surfaces never convert intent into height gain
                Vec3 wall{n.x, 0.0, n.z};
                double wl = length(wall);
                wall = wl > 1e-9 ? wall / wl : n;
                leftover -= wall * dot(leftover, wall);
            }
            remaining = leftover;
        }
    }

    // Raise, retry the horizontal remainder, re-drop. The raised forward probe
    // extends a full capsule radius past the frame's displacement and must be
    // completely clear: a step low enough to climb leaves nothing above the
    // raised capsule, while a too-tall blocker still presents a face there.
    bool try_auto_step(CharacterState& c, const Vec3& leftover, std::uint32_t mask,
                       const std::vector<BodyId>& exclude, std::vector<SweepHit>& touched) {
        (void)touched;
        PhysicsWorld& px = world_->physics();
        const CharacterDesc& d = c.desc;
        Vec3 horiz{leftover.x, 0.0, leftover.z};
        double horiz_len = length(horiz);
        if (horiz_len < 1e-9 || d.step_offset <= 0.0) return false;

        CharacterState trial = c;
        auto up_hit = px.sweep(capsule_shape(trial), capsule_pose(trial), {0, d.step_offset, 0}, mask,
                               exclude, d.skin);
        double rise = up_hit ? d.step_offset * up_hit->t : d.step_offset;
        if (rise < 1e-4) return false;
        trial.position.y += rise;

        Vec3 probe = horiz * ((horiz_len + d.capsule_radius + d.skin) / horiz_len);
        if (px.sweep(capsule_shape(trial), capsule_pose(trial), probe, mask, exclude, d.skin))
            return false;  // something still stands above the raised path
        trial.position += horiz;

        double drop = rise + d.skin + 1e-3;
        auto down_hit = px.sweep(capsule_shape(trial), capsule_pose(trial), {0, -drop, 0}, mask, exclude,
                                 d.skin);
        if (!down_hit || !walkable_surface(*down_hit, d)) return false;
        trial.position.y -= drop * down_hit->t;

        c.position = trial.position;
        return true;
    }

    World* world_ = nullptr;
    std::vector<CharacterState> characters_;
    std::vector<Callback> callbacks_;
    std::uint32_t next_handle_ = 1;
};

}  // namespace vekit
