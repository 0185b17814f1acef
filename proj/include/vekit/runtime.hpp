#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vekit/camera.hpp"
#include "vekit/character.hpp"
#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/physics.hpp"
#include "vekit/scene_graph.hpp"
#include "vekit/sha256.hpp"

namespace vekit {

struct MidFrameMutation : Error {
    explicit MidFrameMutation(const std::string& msg) : Error(msg) {}
};

struct ScriptError : Error {
    int line;
    ScriptError(int line_, const std::string& msg)
        : Error("script:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

struct BindingError : Error {
    int line;
    BindingError(int line_, const std::string& msg)
        : Error("bindings:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

// Module errors rethrown from inside the loop carry the frame index.
struct FrameError : Error {
    long frame;
    FrameError(long frame_, const std::string& msg)
        : Error("frame " + std::to_string(frame_) + ": " + msg), frame(frame_) {}
};

// ---------------------------------------------------------------------------
// Frame listeners

struct FrameCallbacks {
    std::function<void(long)> frame_started;
    std::function<void(long)> frame_ended;
};

// Listeners run in ascending order_key; ties resolve by registration order.
class FrameLoop {
public:
    std::uint32_t register_listener(int order_key, FrameCallbacks callbacks) {
        if (in_frame_) throw MidFrameMutation("cannot register listeners mid-frame");
        std::uint32_t handle = next_handle_++;
        Listener l{handle, order_key, next_seq_++, std::move(callbacks)};
        auto pos = listeners_.begin();
        while (pos != listeners_.end() &&
               (pos->order_key < l.order_key ||
                (pos->order_key == l.order_key && pos->seq < l.seq)))
            ++pos;
        listeners_.insert(pos, std::move(l));
        return handle;
    }

    void remove_listener(std::uint32_t handle) {
        if (in_frame_) throw MidFrameMutation("cannot remove listeners mid-frame");
        for (std::size_t i = 0; i < listeners_.size(); ++i)
            if (listeners_[i].handle == handle) {
                listeners_.erase(listeners_.begin() + i);
                return;
            }
    }

    void frame_started(long frame) {
        in_frame_ = true;
        for (const Listener& l : listeners_)
            if (l.callbacks.frame_started) l.callbacks.frame_started(frame);
        in_frame_ = false;
    }

    void frame_ended(long frame) {
        in_frame_ = true;
        for (const Listener& l : listeners_)
            if (l.callbacks.frame_ended) l.callbacks.frame_ended(frame);
        in_frame_ = false;
    }

    bool mid_frame() const { return in_frame_; }
    std::size_t size() const { return listeners_.size(); }

private:
    struct Listener {
        std::uint32_t handle;
        int order_key;
        std::uint64_t seq;
        FrameCallbacks callbacks;
    };

    std::vector<Listener> listeners_;
    std::uint32_t next_handle_ = 1;
    std::uint64_t next_seq_ = 0;
    bool in_frame_ = false;
};

// ---------------------------------------------------------------------------
// Buffered input script

enum class InputDevice { keyboard, mouse };
enum class InputKind { press, release, move };

struct InputEvent {
    long frame = 0;
    InputDevice device = InputDevice::keyboard;
    InputKind kind = InputKind::press;
    std::string code;
    double value = 0.0;  // move only
};

// Lines: "frame device kind code [value]"; '#' starts a comment line.
// Events must be sorted by frame; line order breaks ties.
inline std::vector<InputEvent> parse_input_script(std::string_view text) {
    std::vector<InputEvent> events;
    int line_no = 0;
    long last_frame = -1;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line(text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos));
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        std::istringstream ss(line);
        std::string frame_tok;
        if (!(ss >> frame_tok) || frame_tok[0] == '#') continue;

        InputEvent ev;
        if (!parse_long(frame_tok, ev.frame) || ev.frame < 0)
            throw ScriptError(line_no, "bad frame index '" + frame_tok + "'");
        if (ev.frame < last_frame) throw ScriptError(line_no, "events must be sorted by frame");
        last_frame = ev.frame;

        std::string device, kind;
        if (!(ss >> device >> kind >> ev.code)) throw ScriptError(line_no, "expected 'frame device kind code'");
        if (device == "keyboard") ev.device = InputDevice::keyboard;
        else if (device == "mouse") ev.device = InputDevice::mouse;
        else throw ScriptError(line_no, "unknown device '" + device + "'");
        if (kind == "press") ev.kind = InputKind::press;
        else if (kind == "release") ev.kind = InputKind::release;
        else if (kind == "move") ev.kind = InputKind::move;
        else throw ScriptError(line_no, "unknown kind '" + kind + "'");
        if (ev.kind == InputKind::move) {
            std::string value;
            if (!(ss >> value) || !parse_double(value, ev.value))
                throw ScriptError(line_no, "move events need a numeric value");
        }
        std::string extra;
        if (ss >> extra) throw ScriptError(line_no, "unexpected trailing token '" + extra + "'");
        events.push_back(std::move(ev));
    }
    return events;
}

// ---------------------------------------------------------------------------
// Key bindings

enum class ActionKind {
    move_forward,
    move_back,
    strafe_left,
    strafe_right,
    jump,
    crouch,
    camera_chasing,
    camera_fixed,
    camera_first_person,
};

struct BoundAction {
    ActionKind kind = ActionKind::move_forward;
    double value = 0.0;  // speed, m/s (moves and jump)
};

struct InputBinding {
    std::map<std::string, BoundAction> keys;
    double max_speed = 0.0;  // 0: use the largest bound move speed

    double speed_limit() const {
        if (max_speed > 0.0) return max_speed;
        double best = 0.0;
        for (const auto& [code, action] : keys)
            if (action.kind <= ActionKind::strafe_right) best = std::max(best, action.value);
        return best;
    }
};

inline InputBinding default_bindings() {
    InputBinding b;
    b.keys["W"] = {ActionKind::move_forward, 2.0};
    b.keys["S"] = {ActionKind::move_back, 2.0};
    b.keys["A"] = {ActionKind::strafe_left, 2.0};
    b.keys["D"] = {ActionKind::strafe_right, 2.0};
    b.keys["SPACE"] = {ActionKind::jump, 4.5};
    b.keys["C"] = {ActionKind::crouch, 0.0};
    b.keys["1"] = {ActionKind::camera_chasing, 0.0};
    b.keys["2"] = {ActionKind::camera_fixed, 0.0};
    b.keys["3"] = {ActionKind::camera_first_person, 0.0};
    return b;
}

// Lines: "key W = move_forward 2.0" or "max_speed = 2.5"; '#' comments.
inline InputBinding parse_bindings(std::string_view text) {
    InputBinding binding;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string line(text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos));
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first) || first[0] == '#') continue;

        if (first == "max_speed") {
            std::string eq, value;
            if (!(ss >> eq >> value) || eq != "=" || !parse_double(value, binding.max_speed) ||
                binding.max_speed <= 0.0)
                throw BindingError(line_no, "expected 'max_speed = <positive number>'");
            continue;
        }
        if (first != "key") throw BindingError(line_no, "expected 'key <code> = <action> [speed]'");
        std::string code, eq, action;
        if (!(ss >> code >> eq >> action) || eq != "=")
            throw BindingError(line_no, "expected 'key <code> = <action> [speed]'");
        BoundAction bound;
        bool needs_speed = true;
        if (action == "move_forward") bound.kind = ActionKind::move_forward;
        else if (action == "move_back") bound.kind = ActionKind::move_back;
        else if (action == "strafe_left") bound.kind = ActionKind::strafe_left;
        else if (action == "strafe_right") bound.kind = ActionKind::strafe_right;
        else if (action == "jump") bound.kind = ActionKind::jump;
        else {
            needs_speed = false;
            if (action == "crouch") bound.kind = ActionKind::crouch;
            else if (action == "camera_chasing") bound.kind = ActionKind::camera_chasing;
            else if (action == "camera_fixed") bound.kind = ActionKind::camera_fixed;
            else if (action == "camera_first_person") bound.kind = ActionKind::camera_first_person;
            else throw BindingError(line_no, "unknown action '" + action + "'");
        }
        if (needs_speed) {
            std::string speed;
            if (!(ss >> speed) || !parse_double(speed, bound.value) || bound.value < 0.0)
                throw BindingError(line_no, "action '" + action + "' needs a speed");
        }
        binding.keys[code] = bound;
    }
    return binding;
}

// ---------------------------------------------------------------------------
// State trace

struct SimConfig {
    double dt = 1.0 / 60.0;
    long frames = 0;
    long trace_stride = 1;
    std::uint64_t seed = 0;  // reserved for randomized demo content
};

struct BodySample {
    BodyId id;
    Vec3 position;
    Quat orientation;
};

struct CharacterSample {
    CharacterId id;
    Vec3 position;
    double yaw;
    bool grounded;
};

struct FrameSample {
    long frame = 0;
    std::vector<BodySample> bodies;
    std::vector<CharacterSample> characters;
    std::optional<CameraPose> camera;
};

struct StateTrace {
    std::vector<FrameSample> samples;
    std::string digest;
    std::vector<std::string> warnings;
    std::size_t dispatched_events = 0;
};

namespace runtime_detail {

inline void append_vec3(std::string& out, const Vec3& v) {
    out += format_double(v.x);
    out += " ";
    out += format_double(v.y);
    out += " ";
    out += format_double(v.z);
}

inline void append_quat(std::string& out, const Quat& q) {
    out += format_double(q.w);
    out += " ";
    out += format_double(q.x);
    out += " ";
    out += format_double(q.y);
    out += " ";
    out += format_double(q.z);
}

inline std::string sample_lines(const FrameSample& sample) {
    std::string out = "F " + std::to_string(sample.frame) + "\n";
    for (const BodySample& b : sample.bodies) {
        out += "B " + std::to_string(b.id) + " ";
        append_vec3(out, b.position);
        out += " ";
        append_quat(out, b.orientation);
        out += "\n";
    }
    for (const CharacterSample& c : sample.characters) {
        out += "C " + std::to_string(c.id) + " ";
        append_vec3(out, c.position);
        out += " " + format_double(c.yaw) + " ";
        out += c.grounded ? "1" : "0";
        out += "\n";
    }
    if (sample.camera) {
        out += "CAM ";
        append_vec3(out, sample.camera->position);
        out += " ";
        append_quat(out, sample.camera->orientation);
        out += "\n";
    }
    return out;
}

inline FrameSample capture_sample(long frame, const World& world, const ControllerRegistry* registry,
                                  const std::optional<CameraPose>& camera) {
    FrameSample sample;
    sample.frame = frame;
    const PhysicsWorld& px = world.physics();
    for (std::size_t i = 0; i < px.body_count(); ++i) {
        const RigidBody& b = px.body(static_cast<BodyId>(i));
        if (b.kind != BodyKind::Dynamic) continue;
        sample.bodies.push_back({b.id, b.pose.position, b.pose.orientation});
    }
    if (registry) {
        for (CharacterId id = 0; id < registry->size(); ++id) {
            const CharacterState& c = registry->state(id);
            sample.characters.push_back({id, c.position, c.yaw, c.grounded});
        }
    }
    sample.camera = camera;
    return sample;
}

}  // namespace runtime_detail

// Trace file: "vetrace 1" header, frame sections, final DIGEST line. The
// digest is SHA-256 over every section line (header excluded).
inline std::string write_trace(const StateTrace& trace) {
    std::string out = "vetrace 1\n";
    for (const FrameSample& sample : trace.samples) out += runtime_detail::sample_lines(sample);
    out += "DIGEST " + trace.digest + "\n";
    return out;
}

// Canonical digest of the current dynamic state: dynamic bodies, characters,
// optional camera pose.
inline std::string hash_state(const World& world, const ControllerRegistry* registry = nullptr,
                              const CameraPose* camera = nullptr) {
    FrameSample sample = runtime_detail::capture_sample(
        0, world, registry, camera ? std::optional<CameraPose>(*camera) : std::nullopt);
    std::string lines;
    // the frame header is loop bookkeeping, not state
    std::string with_frame = runtime_detail::sample_lines(sample);
    lines = with_frame.substr(with_frame.find('\n') + 1);
    return Sha256::hash_hex(lines);
}

// ---------------------------------------------------------------------------
// The deterministic frame loop

// Per-frame phase order:
//   1 buffered input dispatch    5 character render + node sync
//   2 frame_started listeners    6 camera update
//   3 physics step               7 frame_ended listeners
//   4 character simulate         8 trace sample
inline StateTrace run(World& world, ControllerRegistry& registry, CameraRig* rig,
                      const std::vector<InputEvent>& script, const SimConfig& config,
                      const InputBinding& bindings = default_bindings(), FrameLoop* loop = nullptr) {
    if (!(config.dt > 0.0)) throw Error("config.dt must be > 0");
    if (config.trace_stride < 1) throw Error("config.trace_stride must be >= 1");
    for (std::size_t i = 1; i < script.size(); ++i)
        if (script[i].frame < script[i - 1].frame) throw Error("input script must be sorted by frame");

    StateTrace trace;
    Sha256 digest;
    std::map<std::string, bool> held;
    bool crouching = false;
    double yaw = registry.size() > 0 ? registry.state(0).yaw : 0.0;
    std::size_t cursor = 0;

    for (long frame = 0; frame < config.frames; ++frame) {
        try {
            // 1: dispatch this frame's buffered events in script order
            bool jump_pressed = false;
            while (cursor < script.size() && script[cursor].frame == frame) {
                const InputEvent& ev = script[cursor++];
                ++trace.dispatched_events;
                if (ev.device == InputDevice::mouse) {
                    if (ev.kind == InputKind::move && ev.code == "yaw") yaw += ev.value;
                    else
                        trace.warnings.push_back("unbound mouse input '" + ev.code + "' at frame " +
                                                 std::to_string(frame));
                    continue;
                }
                auto binding = bindings.keys.find(ev.code);
                if (binding == bindings.keys.end()) {
                    trace.warnings.push_back("unbound key '" + ev.code + "' at frame " +
                                             std::to_string(frame));
                    continue;
                }
                if (ev.kind == InputKind::press) {
                    if (!held[ev.code]) {
                        if (binding->second.kind == ActionKind::jump) jump_pressed = true;
                        if (rig) {
                            if (binding->second.kind == ActionKind::camera_chasing)
                                rig->mode = CameraMode::chasing;
                            else if (binding->second.kind == ActionKind::camera_fixed)
                                rig->mode = CameraMode::fixed;
                            else if (binding->second.kind == ActionKind::camera_first_person)
                                rig->mode = CameraMode::first_person;
                        }
                    }
                    held[ev.code] = true;
                } else if (ev.kind == InputKind::release) {
                    held[ev.code] = false;
                }
            }

            if (registry.size() > 0) {
                registry.set_yaw(0, yaw);
                // derive the movement intent from held keys, in the yaw frame
                Vec3 forward{std::sin(yaw), 0, std::cos(yaw)};
                Vec3 right{std::cos(yaw), 0, -std::sin(yaw)};
                Vec3 intent{};
                bool crouch_held = false;
                for (const auto& [code, is_down] : held) {
                    if (!is_down) continue;
                    auto it = bindings.keys.find(code);
                    if (it == bindings.keys.end()) continue;
                    switch (it->second.kind) {
                        case ActionKind::move_forward: intent += forward * it->second.value; break;
                        case ActionKind::move_back: intent -= forward * it->second.value; break;
                        case ActionKind::strafe_left: intent -= right * it->second.value; break;
                        case ActionKind::strafe_right: intent += right * it->second.value; break;
                        case ActionKind::crouch: crouch_held = true; break;
                        case ActionKind::jump:
                            if (jump_pressed) registry.launch(0, it->second.value);
                            break;
                        default: break;
                    }
                }
                double limit = bindings.speed_limit();
                double mag = length(intent);
                if (limit > 0.0 && mag > limit) intent = intent * (limit / mag);
                registry.set_velocity(0, intent);

                if (crouch_held != crouching) {
                    const CharacterDesc& d = registry.state(0).desc;
                    double target = crouch_held ? 0.5 * d.capsule_height : d.capsule_height;
                    if (registry.resize_volume(0, target)) crouching = crouch_held;
                }
            }

            // 2: frame start listeners
            if (loop) loop->frame_started(frame);
            // 3: physics
            world.physics().step(config.dt);
            // 4: character simulate, ascending id
            for (CharacterId id = 0; id < registry.size(); ++id) registry.simulate(id, config.dt);
            // 5: push physics poses to nodes, then character render
            world.sync_bodies_to_nodes();
            for (CharacterId id = 0; id < registry.size(); ++id) registry.render(id);
            // 6: camera
            std::optional<CameraPose> pose;
            if (rig) pose = update(world, registry, *rig);
            // 7: frame end listeners
            if (loop) loop->frame_ended(frame);
            // 8: trace sample
            if (frame % config.trace_stride == 0) {
                FrameSample sample = runtime_detail::capture_sample(frame, world, &registry, pose);
                digest.update(runtime_detail::sample_lines(sample));
                trace.samples.push_back(std::move(sample));
            }
        } catch (const FrameError&) {
            throw;
        } catch (const Error& e) {
            throw FrameError(frame, e.what());
        }
    }
    if (config.frames == 0) {
        // zero-frame runs still record the initial state
        FrameSample sample = runtime_detail::capture_sample(0, world, &registry, std::nullopt);
        digest.update(runtime_detail::sample_lines(sample));
        trace.samples.push_back(std::move(sample));
    }
    trace.digest = digest.hex_digest();
    return trace;
}

}  // namespace vekit
