#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vekit/errors.hpp"
#include "vekit/math.hpp"
#include "vekit/xml.hpp"

namespace vekit {

// ---------------------------------------------------------------------------
// Errors

struct SyntaxError : Error {
    int line;
    int column;
    SyntaxError(int line_, int column_, const std::string& msg)
        : Error("syntax:" + std::to_string(line_) + ":" + std::to_string(column_) + ": " + msg),
          line(line_),
          column(column_) {}
};

struct SchemaError : Error {
    std::string path;
    std::string code;
    SchemaError(std::string path_, std::string code_, const std::string& msg)
        : Error(path_ + ": [" + code_ + "] " + msg), path(std::move(path_)), code(std::move(code_)) {}
};

struct ValueError : Error {
    std::string path;
    ValueError(std::string path_, const std::string& msg)
        : Error(path_ + ": " + msg), path(std::move(path_)) {}
};

struct InvalidDocument : Error {
    explicit InvalidDocument(const std::string& msg) : Error(msg) {}
};

struct MappingError : Error {
    std::string node;
    MappingError(std::string node_, const std::string& msg)
        : Error("node '" + node_ + "': " + msg), node(std::move(node_)) {}
};

struct PropertiesError : Error {
    int line;
    PropertiesError(int line_, const std::string& msg)
        : Error("properties:" + std::to_string(line_) + ": " + msg), line(line_) {}
};

// ---------------------------------------------------------------------------
// Document model

enum class EnvironmentMode { indoor, outdoor };
enum class ShadingMode { flat, gouraud, phong };
enum class LightKind { point, directional, spot };

struct SceneAttributes {
    EnvironmentMode environment = EnvironmentMode::outdoor;
    ShadingMode shading = ShadingMode::phong;
    double clip_near = 0.1;
    double clip_far = 1000.0;
    Vec3 ambient{0.0, 0.0, 0.0};
    Vec3 gravity{0.0, -9.81, 0.0};

    bool operator==(const SceneAttributes&) const = default;
};

struct EntityDef {
    std::string mesh_file;
    std::optional<std::string> material;
    bool cast_shadows = true;

    bool operator==(const EntityDef&) const = default;
};

struct LightDef {
    LightKind kind = LightKind::point;
    Vec3 diffuse{1.0, 1.0, 1.0};
    Vec3 direction{0.0, -1.0, 0.0};  // directional/spot only
    double brightness = 1.0;
    double range = 10.0;       // point/spot only
    double inner_angle = 0.0;  // spot only
    double outer_angle = 0.0;

    bool operator==(const LightDef&) const = default;
};

struct CameraAnchorDef {
    std::string source_node;
    std::string target_node;
    double fov_y = kPi / 3.0;
    double aspect = 16.0 / 9.0;

    bool operator==(const CameraAnchorDef&) const = default;
};

struct SoundDef {
    std::string file;
    bool positional = true;
    bool loop = false;
    double gain = 1.0;

    bool operator==(const SoundDef&) const = default;
};

enum class ShapeKind { cube, sphere, capsule, convex, trimesh };

struct ShapeDef {
    ShapeKind kind = ShapeKind::cube;
    Vec3 half_extents{0.5, 0.5, 0.5};  // cube
    double radius = 0.5;               // sphere, capsule
    double height = 1.0;               // capsule cylinder segment, caps excluded
    std::string file;                  // convex, trimesh
    std::vector<std::pair<std::string, std::string>> shape_params;  // opaque, round-tripped

    bool operator==(const ShapeDef&) const = default;
};

struct ActorParams {
    bool is_static = true;
    std::optional<double> mass;  // required iff dynamic; checked by validate
    double skin_width = 0.025;
    int group = 0;

    bool operator==(const ActorParams&) const = default;
};

struct BodyDef {
    bool has_graphics = true;  // body when true, actor when false
    ShapeDef shape;
    ActorParams actor;

    bool operator==(const BodyDef&) const = default;
};

struct NodeDef {
    std::string name;
    Vec3 position{};
    Quat orientation = Quat::identity();
    Vec3 scale{1.0, 1.0, 1.0};
    std::optional<EntityDef> entity;
    std::optional<LightDef> light;
    std::optional<CameraAnchorDef> camera;
    std::vector<SoundDef> sounds;
    std::optional<BodyDef> body;
    std::vector<NodeDef> children;

    bool operator==(const NodeDef&) const = default;
};

struct SceneDef {
    std::string name;
    SceneAttributes attributes;
    std::vector<NodeDef> root_nodes;

    bool operator==(const SceneDef&) const = default;
};

struct SceneDocument {
    std::string format_version = "1.1";
    std::vector<SceneDef> scenes;

    const SceneDef* find_scene(std::string_view name) const {
        for (const SceneDef& s : scenes)
            if (s.name == name) return &s;
        return nullptr;
    }

    bool operator==(const SceneDocument&) const = default;
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity = Severity::error;
    std::string path;
    std::string code;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

// Blender-side logic properties; absent keys fall back to mapping defaults.
struct LogicProperties {
    std::optional<bool> body;
    std::optional<ShapeKind> shape;
    std::optional<bool> is_static;
    std::optional<double> mass;
    std::optional<double> skin;
    std::optional<std::string> file;

    bool operator==(const LogicProperties&) const = default;
};

using PropertiesMap = std::map<std::string, LogicProperties>;

struct ImportResult {
    SceneDocument document;
    std::vector<Diagnostic> warnings;
};

// ---------------------------------------------------------------------------
// Parsing

namespace format_detail {

inline std::string enum_name(EnvironmentMode m) { return m == EnvironmentMode::indoor ? "indoor" : "outdoor"; }
inline std::string enum_name(ShadingMode m) {
    switch (m) {
        case ShadingMode::flat: return "flat";
        case ShadingMode::gouraud: return "gouraud";
        default: return "phong";
    }
}
inline std::string enum_name(LightKind k) {
    switch (k) {
        case LightKind::point: return "point";
        case LightKind::directional: return "directional";
        default: return "spot";
    }
}
inline std::string enum_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::cube: return "cube";
        case ShapeKind::sphere: return "sphere";
        case ShapeKind::capsule: return "capsule";
        case ShapeKind::convex: return "convex";
        default: return "trimesh";
    }
}

inline std::optional<ShapeKind> shape_kind_from(std::string_view s) {
    if (s == "cube") return ShapeKind::cube;
    if (s == "sphere") return ShapeKind::sphere;
    if (s == "capsule") return ShapeKind::capsule;
    if (s == "convex") return ShapeKind::convex;
    if (s == "trimesh") return ShapeKind::trimesh;
    return std::nullopt;
}

struct Cursor {
    const xml::Element* el;
    std::string path;

    Cursor child(const xml::Element& c) const { return {&c, path + "/" + c.name}; }
    Cursor child(const xml::Element& c, const std::string& key) const {
        return {&c, path + "/" + c.name + "[" + key + "]"};
    }
};

inline void check_attrs(const Cursor& c, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : c.el->attributes) {
        bool ok = false;
        for (std::string_view a : allowed)
            if (k == a) ok = true;
        if (!ok) throw SchemaError(c.path, "unknown-attribute", "unknown attribute '" + k + "'");
    }
}

inline const std::string& require_attr(const Cursor& c, std::string_view key) {
    const std::string* v = c.el->attribute(key);
    if (!v)
        throw SchemaError(c.path, "missing-attribute",
                          "missing required attribute '" + std::string(key) + "'");
    return *v;
}

inline double parse_number(const Cursor& c, std::string_view key, const std::string& raw) {
    double v;
    if (!parse_double(raw, v) || !std::isfinite(v))
        throw ValueError(c.path, "attribute '" + std::string(key) + "' is not a finite number: '" + raw + "'");
    return v;
}

inline double number_attr(const Cursor& c, std::string_view key) {
    return parse_number(c, key, require_attr(c, key));
}

inline std::optional<double> optional_number_attr(const Cursor& c, std::string_view key) {
    const std::string* v = c.el->attribute(key);
    if (!v) return std::nullopt;
    return parse_number(c, key, *v);
}

inline bool parse_bool(const Cursor& c, std::string_view key, const std::string& raw) {
    if (raw == "true" || raw == "1") return true;
    if (raw == "false" || raw == "0") return false;
    throw ValueError(c.path, "attribute '" + std::string(key) + "' is not a boolean: '" + raw + "'");
}

inline bool bool_attr(const Cursor& c, std::string_view key) {
    return parse_bool(c, key, require_attr(c, key));
}

inline bool optional_bool_attr(const Cursor& c, std::string_view key, bool fallback) {
    const std::string* v = c.el->attribute(key);
    return v ? parse_bool(c, key, *v) : fallback;
}

inline Vec3 vec3_attrs(const Cursor& c, std::string_view kx, std::string_view ky, std::string_view kz) {
    return {number_attr(c, kx), number_attr(c, ky), number_attr(c, kz)};
}

[[noreturn]] inline void unknown_element(const Cursor& parent, const xml::Element& child) {
    throw SchemaError(parent.path + "/" + child.name, "unknown-element",
                      "element '" + child.name + "' not allowed inside '" + parent.el->name + "'");
}

inline void require_positive(const Cursor& c, std::string_view what, double v) {
    if (!(v > 0.0)) throw ValueError(c.path, std::string(what) + " must be > 0");
}

inline void require_unit_range(const Cursor& c, std::string_view what, double v) {
    if (v < 0.0 || v > 1.0) throw ValueError(c.path, std::string(what) + " must be in [0,1]");
}

inline SceneAttributes parse_environment(const Cursor& env, bool allow_gravity) {
    SceneAttributes attrs;
    check_attrs(env, {});
    bool seen_ambient = false, seen_shading = false, seen_clipping = false, seen_gravity = false,
         seen_mode = false;
    auto once = [&](bool& flag, const Cursor& c) {
        if (flag) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
        flag = true;
    };
    for (const xml::Element& child : env.el->children) {
        Cursor c = env.child(child);
        if (child.name == "ambient") {
            once(seen_ambient, c);
            check_attrs(c, {"r", "g", "b"});
            attrs.ambient = vec3_attrs(c, "r", "g", "b");
            require_unit_range(c, "ambient r", attrs.ambient.x);
            require_unit_range(c, "ambient g", attrs.ambient.y);
            require_unit_range(c, "ambient b", attrs.ambient.z);
        } else if (child.name == "shading") {
            once(seen_shading, c);
            check_attrs(c, {"type"});
            const std::string& t = require_attr(c, "type");
            if (t == "flat") attrs.shading = ShadingMode::flat;
            else if (t == "gouraud") attrs.shading = ShadingMode::gouraud;
            else if (t == "phong") attrs.shading = ShadingMode::phong;
            else throw ValueError(c.path, "unknown shading type '" + t + "'");
        } else if (child.name == "clipping") {
            once(seen_clipping, c);
            check_attrs(c, {"near", "far"});
            attrs.clip_near = number_attr(c, "near");
            attrs.clip_far = number_attr(c, "far");
            require_positive(c, "clipping near", attrs.clip_near);
            require_positive(c, "clipping far", attrs.clip_far);
        } else if (child.name == "gravity" && allow_gravity) {
            once(seen_gravity, c);
            check_attrs(c, {"x", "y", "z"});
            attrs.gravity = vec3_attrs(c, "x", "y", "z");
        } else if (child.name == "mode") {
            once(seen_mode, c);
            check_attrs(c, {"value"});
            const std::string& v = require_attr(c, "value");
            if (v == "indoor") attrs.environment = EnvironmentMode::indoor;
            else if (v == "outdoor") attrs.environment = EnvironmentMode::outdoor;
            else throw ValueError(c.path, "unknown environment mode '" + v + "'");
        } else {
            unknown_element(env, child);
        }
    }
    return attrs;
}

inline LightDef parse_light(const Cursor& light) {
    LightDef def;
    check_attrs(light, {"type"});
    const std::string& t = require_attr(light, "type");
    if (t == "point") def.kind = LightKind::point;
    else if (t == "directional") def.kind = LightKind::directional;
    else if (t == "spot") def.kind = LightKind::spot;
    else throw ValueError(light.path, "unknown light type '" + t + "'");

    bool has_direction = false, has_spot = false;
    bool seen_diffuse = false, seen_brightness = false, seen_range = false;
    for (const xml::Element& child : light.el->children) {
        Cursor c = light.child(child);
        if (child.name == "diffuse") {
            if (seen_diffuse) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_diffuse = true;
            check_attrs(c, {"r", "g", "b"});
            def.diffuse = vec3_attrs(c, "r", "g", "b");
        } else if (child.name == "direction") {
            if (has_direction) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            has_direction = true;
            if (def.kind == LightKind::point)
                throw SchemaError(c.path, "unknown-element", "point lights carry no direction");
            check_attrs(c, {"x", "y", "z"});
            Vec3 d = vec3_attrs(c, "x", "y", "z");
            if (length(d) < 1e-9) throw ValueError(c.path, "light direction must be non-zero");
            // renormalize only when needed so canonical output reparses bit-exactly
            def.direction = std::abs(length(d) - 1.0) > 1e-9 ? normalized(d) : d;
        } else if (child.name == "brightness") {
            if (seen_brightness) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_brightness = true;
            check_attrs(c, {"value"});
            def.brightness = number_attr(c, "value");
            if (def.brightness < 0.0) throw ValueError(c.path, "brightness must be >= 0");
        } else if (child.name == "range") {
            if (seen_range) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_range = true;
            if (def.kind == LightKind::directional)
                throw SchemaError(c.path, "unknown-element", "directional lights carry no range");
            check_attrs(c, {"value"});
            def.range = number_attr(c, "value");
            require_positive(c, "range", def.range);
        } else if (child.name == "spot") {
            if (has_spot) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            has_spot = true;
            if (def.kind != LightKind::spot)
                throw SchemaError(c.path, "unknown-element", "spot angles only allowed on spot lights");
            check_attrs(c, {"inner", "outer"});
            def.inner_angle = number_attr(c, "inner");
            def.outer_angle = number_attr(c, "outer");
            if (def.inner_angle < 0.0 || def.outer_angle < 0.0 || def.inner_angle > def.outer_angle)
                throw ValueError(c.path, "spot angles must satisfy 0 <= inner <= outer");
        } else {
            unknown_element(light, child);
        }
    }
    if ((def.kind == LightKind::directional || def.kind == LightKind::spot) && !has_direction)
        throw SchemaError(light.path, "missing-element", "directional/spot light requires a direction");
    if (def.kind == LightKind::spot && !has_spot)
        throw SchemaError(light.path, "missing-element", "spot light requires spot angles");
    return def;
}

inline ShapeDef parse_shape(const Cursor& shape) {
    ShapeDef def;
    check_attrs(shape, {});
    int variants = 0;
    for (const xml::Element& child : shape.el->children) {
        Cursor c = shape.child(child);
        if (child.name == "cube") {
            ++variants;
            def.kind = ShapeKind::cube;
            check_attrs(c, {"hx", "hy", "hz"});
            def.half_extents = vec3_attrs(c, "hx", "hy", "hz");
            require_positive(c, "cube hx", def.half_extents.x);
            require_positive(c, "cube hy", def.half_extents.y);
            require_positive(c, "cube hz", def.half_extents.z);
        } else if (child.name == "sphere") {
            ++variants;
            def.kind = ShapeKind::sphere;
            check_attrs(c, {"radius"});
            def.radius = number_attr(c, "radius");
            require_positive(c, "sphere radius", def.radius);
        } else if (child.name == "capsule") {
            ++variants;
            def.kind = ShapeKind::capsule;
            check_attrs(c, {"radius", "height"});
            def.radius = number_attr(c, "radius");
            def.height = number_attr(c, "height");
            require_positive(c, "capsule radius", def.radius);
            require_positive(c, "capsule height", def.height);
        } else if (child.name == "convex") {
            ++variants;
            def.kind = ShapeKind::convex;
            check_attrs(c, {"file"});
            def.file = require_attr(c, "file");
            if (def.file.empty()) throw ValueError(c.path, "convex file must be non-empty");
        } else if (child.name == "trimesh") {
            ++variants;
            def.kind = ShapeKind::trimesh;
            check_attrs(c, {"file"});
            def.file = require_attr(c, "file");
            if (def.file.empty()) throw ValueError(c.path, "trimesh file must be non-empty");
        } else if (child.name == "shapeParam") {
            check_attrs(c, {"name", "value"});
            def.shape_params.emplace_back(require_attr(c, "name"), require_attr(c, "value"));
        } else {
            unknown_element(shape, child);
        }
    }
    if (variants != 1)
        throw SchemaError(shape.path, "shape-cardinality",
                          "shape must contain one and only one variant element, found " +
                              std::to_string(variants));
    return def;
}

inline BodyDef parse_body(const Cursor& body) {
    BodyDef def;
    check_attrs(body, {"graphics"});
    def.has_graphics = bool_attr(body, "graphics");
    bool seen_shape = false, seen_actor = false;
    for (const xml::Element& child : body.el->children) {
        Cursor c = body.child(child);
        if (child.name == "shape") {
            if (seen_shape) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_shape = true;
            def.shape = parse_shape(c);
        } else if (child.name == "actorParam") {
            if (seen_actor) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_actor = true;
            check_attrs(c, {"static", "mass", "skin", "group"});
            def.actor.is_static = bool_attr(c, "static");
            def.actor.mass = optional_number_attr(c, "mass");
            if (def.actor.mass && !(*def.actor.mass > 0.0))
                throw ValueError(c.path, "mass must be > 0");
            if (auto skin = optional_number_attr(c, "skin")) {
                if (*skin < 0.0) throw ValueError(c.path, "skin must be >= 0");
                def.actor.skin_width = *skin;
            }
            if (const std::string* g = c.el->attribute("group")) {
                long v;
                if (!parse_long(*g, v)) throw ValueError(c.path, "group is not an integer: '" + *g + "'");
                if (v < 0 || v > 31) throw ValueError(c.path, "group must be in [0,31]");
                def.actor.group = static_cast<int>(v);
            }
        } else {
            unknown_element(body, child);
        }
    }
    if (!seen_shape) throw SchemaError(body.path, "missing-element", "body requires a shape element");
    if (!seen_actor) throw SchemaError(body.path, "missing-element", "body requires an actorParam element");

    // Interpreted shape params fill gaps the actorParam left open; the pairs
    // themselves stay verbatim for round-tripping.
    for (const auto& [name, value] : def.shape.shape_params) {
        Cursor c{body.el, body.path + "/shape/shapeParam[" + name + "]"};
        if (name == "skinWidth" && !body.el->children.empty()) {
            const xml::Element* actor_el = nullptr;
            for (const xml::Element& ch : body.el->children)
                if (ch.name == "actorParam") actor_el = &ch;
            if (actor_el && !actor_el->attribute("skin")) {
                double v;
                if (!parse_double(value, v) || v < 0.0)
                    throw ValueError(c.path, "skinWidth must be a number >= 0");
                def.actor.skin_width = v;
            }
        } else if (name == "group") {
            const xml::Element* actor_el = nullptr;
            for (const xml::Element& ch : body.el->children)
                if (ch.name == "actorParam") actor_el = &ch;
            if (actor_el && !actor_el->attribute("group")) {
                long v;
                if (!parse_long(value, v) || v < 0 || v > 31)
                    throw ValueError(c.path, "group must be an integer in [0,31]");
                def.actor.group = static_cast<int>(v);
            }
        }
    }
    return def;
}

inline NodeDef parse_node(const Cursor& node, bool allow_physics) {
    NodeDef def;
    check_attrs(node, {"name"});
    def.name = require_attr(node, "name");
    if (def.name.empty()) throw ValueError(node.path, "node name must be non-empty");

    bool seen_position = false, seen_rotation = false, seen_scale = false, seen_entity = false,
         seen_light = false, seen_camera = false, seen_body = false;
    for (const xml::Element& child : node.el->children) {
        Cursor c = node.child(child);
        if (child.name == "position") {
            if (seen_position) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_position = true;
            check_attrs(c, {"x", "y", "z"});
            def.position = vec3_attrs(c, "x", "y", "z");
        } else if (child.name == "rotation") {
            if (seen_rotation) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_rotation = true;
            check_attrs(c, {"qw", "qx", "qy", "qz"});
            Quat q{number_attr(c, "qw"), number_attr(c, "qx"), number_attr(c, "qy"), number_attr(c, "qz")};
            if (norm(q) < 1e-9) throw ValueError(c.path, "rotation quaternion must be non-zero");
            def.orientation = std::abs(norm(q) - 1.0) > 1e-9 ? normalized(q) : q;
        } else if (child.name == "scale") {
            if (seen_scale) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_scale = true;
            check_attrs(c, {"x", "y", "z"});
            def.scale = vec3_attrs(c, "x", "y", "z");
            require_positive(c, "scale x", def.scale.x);
            require_positive(c, "scale y", def.scale.y);
            require_positive(c, "scale z", def.scale.z);
        } else if (child.name == "entity") {
            if (seen_entity) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_entity = true;
            check_attrs(c, {"meshFile", "material", "castShadows"});
            EntityDef entity;
            entity.mesh_file = require_attr(c, "meshFile");
            if (entity.mesh_file.empty()) throw ValueError(c.path, "meshFile must be non-empty");
            if (const std::string* m = c.el->attribute("material")) entity.material = *m;
            entity.cast_shadows = optional_bool_attr(c, "castShadows", true);
            def.entity = std::move(entity);
        } else if (child.name == "light") {
            if (seen_light) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_light = true;
            def.light = parse_light(c);
        } else if (child.name == "camera") {
            if (seen_camera) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_camera = true;
            check_attrs(c, {"source", "target", "fovY", "aspect"});
            CameraAnchorDef cam;
            cam.source_node = require_attr(c, "source");
            cam.target_node = require_attr(c, "target");
            cam.fov_y = number_attr(c, "fovY");
            cam.aspect = number_attr(c, "aspect");
            if (!(cam.fov_y > 0.0 && cam.fov_y < kPi)) throw ValueError(c.path, "fovY must be in (0, pi)");
            require_positive(c, "aspect", cam.aspect);
            def.camera = std::move(cam);
        } else if (child.name == "sound") {
            if (!allow_physics)
                unknown_element(node, child);  // plain DotScene has no sound element
            check_attrs(c, {"file", "positional", "loop", "gain"});
            SoundDef snd;
            snd.file = require_attr(c, "file");
            if (snd.file.empty()) throw ValueError(c.path, "sound file must be non-empty");
            snd.positional = optional_bool_attr(c, "positional", true);
            snd.loop = optional_bool_attr(c, "loop", false);
            if (auto g = optional_number_attr(c, "gain")) {
                require_unit_range(c, "gain", *g);
                snd.gain = *g;
            }
            def.sounds.push_back(std::move(snd));
        } else if (child.name == "body") {
            if (!allow_physics) unknown_element(node, child);
            if (seen_body) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_body = true;
            def.body = parse_body(c);
        } else if (child.name == "node") {
            const std::string* cn = child.attribute("name");
            Cursor cc = cn ? node.child(child, *cn) : c;
            def.children.push_back(parse_node(cc, allow_physics));
        } else {
            unknown_element(node, child);
        }
    }
    return def;
}

inline SceneDef parse_scene(const Cursor& scene, bool allow_physics) {
    SceneDef def;
    check_attrs(scene, allow_physics ? std::initializer_list<std::string_view>{"name"}
                                     : std::initializer_list<std::string_view>{"name", "formatVersion"});
    if (const std::string* n = scene.el->attribute("name")) def.name = *n;
    else if (allow_physics) throw SchemaError(scene.path, "missing-attribute", "missing required attribute 'name'");
    else def.name = "scene";
    if (def.name.empty()) throw ValueError(scene.path, "scene name must be non-empty");

    bool seen_env = false, seen_nodes = false;
    for (const xml::Element& child : scene.el->children) {
        Cursor c = scene.child(child);
        if (child.name == "environment") {
            if (seen_env) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_env = true;
            def.attributes = parse_environment(c, allow_physics);
        } else if (child.name == "nodes") {
            if (seen_nodes) throw SchemaError(c.path, "duplicate-element", "element appears more than once");
            seen_nodes = true;
            check_attrs(c, {});
            for (const xml::Element& n : child.children) {
                if (n.name != "node") unknown_element(c, n);
                const std::string* nn = n.attribute("name");
                Cursor nc = nn ? c.child(n, *nn) : c.child(n);
                def.root_nodes.push_back(parse_node(nc, allow_physics));
            }
        } else {
            unknown_element(scene, child);
        }
    }
    return def;
}

}  // namespace format_detail

// Parse an ExDotScene document (root <scenes>, one or more <scene> children).
inline SceneDocument parse_scenes(std::string_view text) {
    xml::Element root;
    try {
        root = xml::parse(text);
    } catch (const xml::ParseError& e) {
        throw SyntaxError(e.line, e.column, e.what());
    }
    using namespace format_detail;
    Cursor rc{&root, root.name};
    if (root.name != "scenes")
        throw SchemaError(rc.path, "bad-root", "expected root element 'scenes', found '" + root.name + "'");
    check_attrs(rc, {"formatVersion"});
    SceneDocument doc;
    doc.format_version = require_attr(rc, "formatVersion");
    for (const xml::Element& child : root.children) {
        if (child.name != "scene") unknown_element(rc, child);
        const std::string* name = child.attribute("name");
        Cursor sc = name ? rc.child(child, *name) : rc.child(child);
        doc.scenes.push_back(parse_scene(sc, true));
    }
    if (doc.scenes.empty())
        throw SchemaError(rc.path, "no-scenes", "document must contain at least one scene");
    return doc;
}

// Parse a plain DotScene document (root <scene>, no physics extension).
inline SceneDef parse_dotscene(std::string_view text) {
    xml::Element root;
    try {
        root = xml::parse(text);
    } catch (const xml::ParseError& e) {
        throw SyntaxError(e.line, e.column, e.what());
    }
    using namespace format_detail;
    Cursor rc{&root, root.name};
    if (root.name != "scene")
        throw SchemaError(rc.path, "bad-root", "expected root element 'scene', found '" + root.name + "'");
    return parse_scene(rc, false);
}

// ---------------------------------------------------------------------------
// Validation

using FileResolver = std::function<bool(const std::string&)>;

inline FileResolver directory_resolver(std::filesystem::path base_dir) {
    return [base = std::move(base_dir)](const std::string& rel) {
        std::error_code ec;
        return std::filesystem::exists(base / rel, ec);
    };
}

namespace format_detail {

inline void collect_names(const NodeDef& node, const std::string& path,
                          std::map<std::string, std::string>& names, std::vector<Diagnostic>& out) {
    std::string here = path + "/node[" + node.name + "]";
    auto [it, inserted] = names.emplace(node.name, here);
    if (!inserted)
        out.push_back({Severity::error, here, "duplicate-node-name",
                       "node name '" + node.name + "' already used at " + it->second});
    for (const NodeDef& child : node.children) collect_names(child, here, names, out);
}

inline void validate_node(const NodeDef& node, const std::string& path,
                          const std::map<std::string, std::string>& names, const FileResolver& resolver,
                          std::vector<Diagnostic>& out) {
    std::string here = path + "/node[" + node.name + "]";
    if (node.camera) {
        if (!names.count(node.camera->source_node))
            out.push_back({Severity::error, here + "/camera", "dangling-node-ref",
                           "camera source node '" + node.camera->source_node + "' does not exist"});
        if (!names.count(node.camera->target_node))
            out.push_back({Severity::error, here + "/camera", "dangling-node-ref",
                           "camera target node '" + node.camera->target_node + "' does not exist"});
        if (node.camera->source_node == node.camera->target_node)
            out.push_back({Severity::error, here + "/camera", "camera-self-ref",
                           "camera source and target must differ"});
    }
    if (node.body) {
        const BodyDef& body = *node.body;
        if (body.has_graphics && !node.entity)
            out.push_back({Severity::error, here + "/body", "body-without-entity",
                           "body with graphics requires the node to carry an entity"});
        if (!body.actor.is_static && !body.actor.mass)
            out.push_back({Severity::error, here + "/body/actorParam", "dynamic-no-mass",
                           "dynamic body requires a mass"});
        if (body.actor.is_static && body.actor.mass)
            out.push_back({Severity::warning, here + "/body/actorParam", "static-with-mass",
                           "mass on a static body is ignored"});
        if ((body.shape.kind == ShapeKind::convex || body.shape.kind == ShapeKind::trimesh) && resolver &&
            !resolver(body.shape.file))
            out.push_back({Severity::error, here + "/body/shape", "mesh-file-unresolved",
                           "shape mesh file '" + body.shape.file + "' does not resolve"});
    }
    for (const NodeDef& child : node.children) validate_node(child, here, names, resolver, out);
}

}  // namespace format_detail

// Collects every problem; never throws. Mesh-file resolution runs only when a
// resolver is supplied.
inline std::vector<Diagnostic> validate(const SceneDocument& doc, const FileResolver& resolver = nullptr) {
    using namespace format_detail;
    std::vector<Diagnostic> out;
    std::map<std::string, std::string> scene_names;
    for (const SceneDef& scene : doc.scenes) {
        std::string path = "scenes/scene[" + scene.name + "]";
        auto [it, inserted] = scene_names.emplace(scene.name, path);
        if (!inserted)
            out.push_back({Severity::error, path, "duplicate-scene-name",
                           "scene name '" + scene.name + "' already used"});
        if (scene.attributes.clip_far <= scene.attributes.clip_near)
            out.push_back({Severity::error, path + "/environment/clipping", "clip-order",
                           "clip far must exceed clip near"});
        std::map<std::string, std::string> names;
        for (const NodeDef& node : scene.root_nodes) collect_names(node, path + "/nodes", names, out);
        for (const NodeDef& node : scene.root_nodes)
            validate_node(node, path + "/nodes", names, resolver, out);
    }
    return out;
}

inline bool has_errors(const std::vector<Diagnostic>& diags) {
    for (const Diagnostic& d : diags)
        if (d.severity == Severity::error) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Serialization

namespace format_detail {

inline xml::Element vec3_element(const char* name, const char* kx, const char* ky, const char* kz,
                                 const Vec3& v) {
    xml::Element el;
    el.name = name;
    el.attributes = {{kx, format_double(v.x)}, {ky, format_double(v.y)}, {kz, format_double(v.z)}};
    return el;
}

inline xml::Element serialize_node(const NodeDef& node) {
    xml::Element el;
    el.name = "node";
    el.attributes.emplace_back("name", node.name);
    el.children.push_back(vec3_element("position", "x", "y", "z", node.position));
    xml::Element rot;
    rot.name = "rotation";
    rot.attributes = {{"qw", format_double(node.orientation.w)},
                      {"qx", format_double(node.orientation.x)},
                      {"qy", format_double(node.orientation.y)},
                      {"qz", format_double(node.orientation.z)}};
    el.children.push_back(std::move(rot));
    el.children.push_back(vec3_element("scale", "x", "y", "z", node.scale));

    if (node.entity) {
        xml::Element ent;
        ent.name = "entity";
        ent.attributes.emplace_back("meshFile", node.entity->mesh_file);
        if (node.entity->material) ent.attributes.emplace_back("material", *node.entity->material);
        ent.attributes.emplace_back("castShadows", node.entity->cast_shadows ? "true" : "false");
        el.children.push_back(std::move(ent));
    }
    if (node.light) {
        const LightDef& light = *node.light;
        xml::Element lt;
        lt.name = "light";
        lt.attributes.emplace_back("type", enum_name(light.kind));
        lt.children.push_back(vec3_element("diffuse", "r", "g", "b", light.diffuse));
        if (light.kind != LightKind::point)
            lt.children.push_back(vec3_element("direction", "x", "y", "z", light.direction));
        xml::Element br;
        br.name = "brightness";
        br.attributes.emplace_back("value", format_double(light.brightness));
        lt.children.push_back(std::move(br));
        if (light.kind != LightKind::directional) {
            xml::Element rg;
            rg.name = "range";
            rg.attributes.emplace_back("value", format_double(light.range));
            lt.children.push_back(std::move(rg));
        }
        if (light.kind == LightKind::spot) {
            xml::Element sp;
            sp.name = "spot";
            sp.attributes = {{"inner", format_double(light.inner_angle)},
                             {"outer", format_double(light.outer_angle)}};
            lt.children.push_back(std::move(sp));
        }
        el.children.push_back(std::move(lt));
    }
    if (node.camera) {
        xml::Element cam;
        cam.name = "camera";
        cam.attributes = {{"source", node.camera->source_node},
                          {"target", node.camera->target_node},
                          {"fovY", format_double(node.camera->fov_y)},
                          {"aspect", format_double(node.camera->aspect)}};
        el.children.push_back(std::move(cam));
    }
    for (const SoundDef& snd : node.sounds) {
        xml::Element s;
        s.name = "sound";
        s.attributes = {{"file", snd.file},
                        {"positional", snd.positional ? "true" : "false"},
                        {"loop", snd.loop ? "true" : "false"},
                        {"gain", format_double(snd.gain)}};
        el.children.push_back(std::move(s));
    }
    if (node.body) {
        const BodyDef& body = *node.body;
        xml::Element b;
        b.name = "body";
        b.attributes.emplace_back("graphics", body.has_graphics ? "true" : "false");
        xml::Element shape;
        shape.name = "shape";
        xml::Element variant;
        switch (body.shape.kind) {
            case ShapeKind::cube:
                variant = vec3_element("cube", "hx", "hy", "hz", body.shape.half_extents);
                break;
            case ShapeKind::sphere:
                variant.name = "sphere";
                variant.attributes.emplace_back("radius", format_double(body.shape.radius));
                break;
            case ShapeKind::capsule:
                variant.name = "capsule";
                variant.attributes = {{"radius", format_double(body.shape.radius)},
                                      {"height", format_double(body.shape.height)}};
                break;
            case ShapeKind::convex:
                variant.name = "convex";
                variant.attributes.emplace_back("file", body.shape.file);
                break;
            case ShapeKind::trimesh:
                variant.name = "trimesh";
                variant.attributes.emplace_back("file", body.shape.file);
                break;
        }
        shape.children.push_back(std::move(variant));
        for (const auto& [name, value] : body.shape.shape_params) {
            xml::Element p;
            p.name = "shapeParam";
            p.attributes = {{"name", name}, {"value", value}};
            shape.children.push_back(std::move(p));
        }
        b.children.push_back(std::move(shape));
        xml::Element actor;
        actor.name = "actorParam";
        actor.attributes.emplace_back("static", body.actor.is_static ? "true" : "false");
        if (body.actor.mass) actor.attributes.emplace_back("mass", format_double(*body.actor.mass));
        actor.attributes.emplace_back("skin", format_double(body.actor.skin_width));
        actor.attributes.emplace_back("group", std::to_string(body.actor.group));
        b.children.push_back(std::move(actor));
        el.children.push_back(std::move(b));
    }
    for (const NodeDef& child : node.children) el.children.push_back(serialize_node(child));
    return el;
}

inline xml::Element serialize_scene(const SceneDef& scene) {
    xml::Element el;
    el.name = "scene";
    el.attributes.emplace_back("name", scene.name);
    xml::Element env;
    env.name = "environment";
    env.children.push_back(vec3_element("ambient", "r", "g", "b", scene.attributes.ambient));
    xml::Element shading;
    shading.name = "shading";
    shading.attributes.emplace_back("type", enum_name(scene.attributes.shading));
    env.children.push_back(std::move(shading));
    xml::Element clipping;
    clipping.name = "clipping";
    clipping.attributes = {{"near", format_double(scene.attributes.clip_near)},
                           {"far", format_double(scene.attributes.clip_far)}};
    env.children.push_back(std::move(clipping));
    env.children.push_back(vec3_element("gravity", "x", "y", "z", scene.attributes.gravity));
    xml::Element mode;
    mode.name = "mode";
    mode.attributes.emplace_back("value", enum_name(scene.attributes.environment));
    env.children.push_back(std::move(mode));
    el.children.push_back(std::move(env));

    xml::Element nodes;
    nodes.name = "nodes";
    for (const NodeDef& node : scene.root_nodes) nodes.children.push_back(serialize_node(node));
    el.children.push_back(std::move(nodes));
    return el;
}

}  // namespace format_detail

// Emits canonical ExDotScene XML: document element order, fixed attribute
// order, shortest round-trip numbers. Byte-deterministic for equal documents.
inline std::string serialize_scenes(const SceneDocument& doc) {
    std::vector<Diagnostic> diags = validate(doc);
    if (has_errors(diags)) {
        std::string msg = "document fails validation:";
        for (const Diagnostic& d : diags)
            if (d.severity == Severity::error) msg += "\n  " + d.path + ": [" + d.code + "] " + d.message;
        throw InvalidDocument(msg);
    }
    xml::Element root;
    root.name = "scenes";
    root.attributes.emplace_back("formatVersion", doc.format_version);
    for (const SceneDef& scene : doc.scenes)
        root.children.push_back(format_detail::serialize_scene(scene));
    return xml::write(root);
}

// ---------------------------------------------------------------------------
// Properties sidecar and DotScene import

// Line format: "node-name.key = value"; '#' starts a comment line. The key is
// everything after the LAST dot so node names may contain dots.
inline PropertiesMap parse_properties(std::string_view text) {
    PropertiesMap props;
    int line_no = 0;
    std::size_t pos = 0;
    auto trim = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    };
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw PropertiesError(line_no, "expected 'node.key = value'");
        std::string_view lhs = trim(line.substr(0, eq));
        std::string_view value = trim(line.substr(eq + 1));
        std::size_t dot = lhs.rfind('.');
        if (dot == std::string_view::npos || dot == 0)
            throw PropertiesError(line_no, "expected 'node.key' before '='");
        std::string node(lhs.substr(0, dot));
        std::string key(lhs.substr(dot + 1));
        LogicProperties& p = props[node];

        auto as_bool = [&](std::string_view v) -> bool {
            if (v == "true" || v == "1") return true;
            if (v == "false" || v == "0") return false;
            throw PropertiesError(line_no, "value of '" + key + "' is not a boolean");
        };
        auto as_number = [&](std::string_view v) -> double {
            double d;
            if (!parse_double(v, d) || !std::isfinite(d))
                throw PropertiesError(line_no, "value of '" + key + "' is not a finite number");
            return d;
        };
        if (key == "body") p.body = as_bool(value);
        else if (key == "shape") {
            auto kind = format_detail::shape_kind_from(value);
            if (!kind) throw PropertiesError(line_no, "unknown shape '" + std::string(value) + "'");
            p.shape = *kind;
        } else if (key == "static") p.is_static = as_bool(value);
        else if (key == "mass") {
            double m = as_number(value);
            if (!(m > 0.0)) throw PropertiesError(line_no, "mass must be > 0");
            p.mass = m;
        } else if (key == "skin") {
            double s = as_number(value);
            if (s < 0.0) throw PropertiesError(line_no, "skin must be >= 0");
            p.skin = s;
        } else if (key == "file") {
            if (value.empty()) throw PropertiesError(line_no, "file must be non-empty");
            p.file = std::string(value);
        } else {
            throw PropertiesError(line_no, "unknown property key '" + key + "'");
        }
    }
    return props;
}

namespace format_detail {

inline void apply_properties(NodeDef& node, const PropertiesMap& props, std::vector<Diagnostic>& warnings,
                             std::vector<std::string>& matched) {
    auto it = props.find(node.name);
    if (it != props.end()) {
        matched.push_back(node.name);
        const LogicProperties& p = it->second;
        BodyDef body;
        body.has_graphics = p.body.value_or(true);
        if (body.has_graphics && !node.entity)
            throw MappingError(node.name, "body=true requires the node to carry an entity");

        ShapeKind kind = p.shape.value_or(ShapeKind::cube);
        body.shape.kind = kind;
        switch (kind) {
            case ShapeKind::cube:
                // Node scale applied to a unit cube; the properties carry no dimensions.
                body.shape.half_extents = node.scale * 0.5;
                break;
            case ShapeKind::sphere:
                body.shape.radius = 0.5 * std::max({node.scale.x, node.scale.y, node.scale.z});
                break;
            case ShapeKind::capsule:
                // Unit capsule: radius 0.5, cylinder height 1, axis along Y.
                body.shape.radius = 0.5 * std::max(node.scale.x, node.scale.z);
                body.shape.height = node.scale.y;
                break;
            case ShapeKind::convex:
            case ShapeKind::trimesh:
                if (!p.file)
                    throw MappingError(node.name, "shape=" + enum_name(kind) + " requires a file property");
                body.shape.file = *p.file;
                break;
        }

        body.actor.is_static = p.is_static.value_or(true);
        if (body.actor.is_static) {
            if (p.mass)
                warnings.push_back({Severity::warning, "node[" + node.name + "]", "static-with-mass",
                                    "mass given for static object, dropped"});
        } else {
            if (!p.mass) throw MappingError(node.name, "dynamic object requires a mass property");
            body.actor.mass = p.mass;
        }
        if (p.skin) body.actor.skin_width = *p.skin;
        node.body = std::move(body);
    }
    for (NodeDef& child : node.children) apply_properties(child, props, warnings, matched);
}

}  // namespace format_detail

// Reproduces the exporter mapping: logic properties decide whether a node
// becomes a body or an actor and which shape backs it.
inline ImportResult import_dotscene(std::string_view dotscene_text, const PropertiesMap& properties) {
    SceneDef scene = parse_dotscene(dotscene_text);
    ImportResult result;
    std::vector<std::string> matched;
    for (NodeDef& node : scene.root_nodes)
        format_detail::apply_properties(node, properties, result.warnings, matched);
    for (const auto& [name, p] : properties) {
        bool found = false;
        for (const std::string& m : matched)
            if (m == name) found = true;
        if (!found)
            result.warnings.push_back({Severity::warning, "node[" + name + "]", "unknown-node",
                                       "properties name a node that does not exist, ignored"});
    }
    result.document.format_version = "1.1";
    result.document.scenes.push_back(std::move(scene));
    return result;
}

// ---------------------------------------------------------------------------
// File helpers

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return buf.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline SceneDocument parse_scenes_file(const std::filesystem::path& path) {
    return parse_scenes(read_text_file(path));
}

}  // namespace vekit
