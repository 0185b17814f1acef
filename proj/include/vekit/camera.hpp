#pragma once

#include <optional>
#include <string>

#include "vekit/character.hpp"
#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/scene_graph.hpp"

namespace vekit {

struct BadParams : Error {
    explicit BadParams(const std::string& msg) : Error(msg) {}
};
struct DanglingNode : Error {
    explicit DanglingNode(const std::string& msg) : Error(msg) {}
};

enum class CameraMode { chasing, fixed, first_person };

// Two scene nodes form every rig: the camera node and the target node the
// camera always points at.
struct CameraRig {
    CameraMode mode = CameraMode::chasing;
    NodeId camera_node = kNoNode;
    NodeId target_node = kNoNode;
    CharacterId character = 0;
    Vec3 chase_offset{0, 2, -4};   // chasing, in the character yaw frame
    Vec3 fixed_position{0, 5, 10};  // fixed
    Vec3 eye_offset{0, 1.7, 0};    // first person
    Vec3 up_hint{0, 1, 0};
    Quat last_orientation = Quat::identity();  // look-at fallback state
    bool has_last = false;
};

struct CameraPose {
    Vec3 position{};
    Quat orientation = Quat::identity();
    Vec3 forward{0, 0, -1};
    Vec3 right{1, 0, 0};
    Vec3 up{0, 1, 0};
};

struct CameraParams {
    Vec3 chase_offset{0, 2, -4};
    Vec3 fixed_position{0, 5, 10};
    Vec3 eye_offset{0, 1.7, 0};
    Vec3 up_hint{0, 1, 0};
};

namespace camera_detail {

// Characters face +Z at yaw 0; yaw rotates counterclockwise about +Y.
inline Vec3 yaw_forward(double yaw) { return {std::sin(yaw), 0.0, std::cos(yaw)}; }

// The point the character is looking at: eye height above the feet, two
// meters ahead along the facing direction.
inline Vec3 look_at_point(const CharacterState& c) {
    return c.position + Vec3{0, c.desc.eye_height, 0} + yaw_forward(c.yaw) * 2.0;
}

// Camera looks along -Z in local space; builds the orientation whose -Z maps
// onto `forward`.
inline std::optional<Quat> look_rotation(const Vec3& forward, const Vec3& up_hint) {
    double len = length(forward);
    if (len < 1e-9) return std::nullopt;
    Vec3 back = forward / -len;
    Vec3 right = cross(up_hint, back);
    if (length_sq(right) < 1e-12) return std::nullopt;  // collinear with up
    right = normalized(right);
    Vec3 up = cross(back, right);
    return quat_from_basis(right, up, back);
}

}  // namespace camera_detail

// Creates a rig bound to a character: camera and target scene nodes plus the
// mode parameters.
inline CameraRig attach(World& world, ControllerRegistry& registry, CameraMode mode,
                        CharacterId character, const CameraParams& params = {}) {
    const CharacterState& c = registry.state(character);  // throws UnknownCharacter
    CameraRig rig;
    rig.mode = mode;
    rig.character = character;
    rig.chase_offset = params.chase_offset;
    rig.fixed_position = params.fixed_position;
    rig.eye_offset = params.eye_offset;
    double up_len = length(params.up_hint);
    if (up_len < 1e-9) throw BadParams("up_hint must be non-zero");
    rig.up_hint = params.up_hint / up_len;

    std::string tag = std::to_string(character) + "#" + std::to_string(static_cast<int>(mode));
    rig.target_node = world.add_node("camera_target:" + tag);
    if (mode == CameraMode::first_person) {
        rig.camera_node = c.linked_node;  // the character's node is the camera node
    } else {
        rig.camera_node = world.add_node("camera:" + tag);
    }
    if (mode != CameraMode::first_person && rig.camera_node == rig.target_node)
        throw BadParams("camera and target nodes must differ");
    return rig;
}

// Computes this frame's camera pose. Pure with respect to the world; the rig
// only carries the look-at fallback orientation.
inline CameraPose update(const World& world, ControllerRegistry& registry, CameraRig& rig) {
    if (rig.camera_node >= world.node_count() || rig.target_node >= world.node_count())
        throw DanglingNode("camera rig references a node that no longer exists");
    const CharacterState& c = registry.state(rig.character);

    CameraPose pose;
    switch (rig.mode) {
        case CameraMode::chasing: {
            pose.position = c.position + rotate(Quat::from_yaw(c.yaw), rig.chase_offset);
            Vec3 target = camera_detail::look_at_point(c);
            auto q = camera_detail::look_rotation(target - pose.position, rig.up_hint);
            pose.orientation = q ? *q : (rig.has_last ? rig.last_orientation : Quat::identity());
            break;
        }
        case CameraMode::fixed: {
            pose.position = rig.fixed_position;
            Vec3 target = camera_detail::look_at_point(c);
            auto q = camera_detail::look_rotation(target - pose.position, rig.up_hint);
            pose.orientation = q ? *q : (rig.has_last ? rig.last_orientation : Quat::identity());
            break;
        }
        case CameraMode::first_person: {
            pose.position = c.position + rig.eye_offset;
            pose.orientation = Quat::from_yaw(c.yaw);
            break;
        }
    }
    rig.last_orientation = pose.orientation;
    rig.has_last = true;
    pose.forward = rotate(pose.orientation, {0, 0, -1});
    pose.right = rotate(pose.orientation, {1, 0, 0});
    pose.up = rotate(pose.orientation, {0, 1, 0});
    return pose;
}

}  // namespace vekit
