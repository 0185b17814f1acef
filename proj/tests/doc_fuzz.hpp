#pragma once

#include <string>

#include "test_support.hpp"
#include "vekit/scene_format.hpp"

namespace vetest {

// Random but always-valid documents for round-trip property tests.
inline vekit::SceneDocument fuzz_document(std::uint64_t seed) {
    using namespace vekit;
    Rng rng(seed);
    SceneDocument doc;
    int counter = 0;

    int scene_count = rng.uniform_int(1, 3);
    for (int s = 0; s < scene_count; ++s) {
        SceneDef scene;
        scene.name = "scene" + std::to_string(s);
        scene.attributes.environment = rng.uniform_int(0, 1) ? EnvironmentMode::indoor : EnvironmentMode::outdoor;
        scene.attributes.shading = static_cast<ShadingMode>(rng.uniform_int(0, 2));
        scene.attributes.clip_near = rng.uniform(0.01, 1.0);
        scene.attributes.clip_far = scene.attributes.clip_near + rng.uniform(1.0, 2000.0);
        scene.attributes.ambient = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
        scene.attributes.gravity = rng.vec3(-20, 20);

        std::vector<std::string> node_names;
        // recursive builder
        auto build = [&](auto&& self, int depth) -> NodeDef {
            NodeDef node;
            node.name = "n" + std::to_string(counter++);
            node_names.push_back(node.name);
            node.position = rng.vec3(-100, 100);
            node.orientation = rng.quat();
            node.scale = {rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5)};
            if (rng.uniform_int(0, 2) == 0) {
                EntityDef ent;
                ent.mesh_file = "meshes/m" + std::to_string(rng.uniform_int(0, 9)) + ".mesh";
                if (rng.uniform_int(0, 1)) ent.material = "mat" + std::to_string(rng.uniform_int(0, 5));
                ent.cast_shadows = rng.uniform_int(0, 1) != 0;
                node.entity = ent;
            }
            if (rng.uniform_int(0, 3) == 0) {
                LightDef light;
                light.kind = static_cast<LightKind>(rng.uniform_int(0, 2));
                light.diffuse = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
                light.brightness = rng.uniform(0, 4);
                if (light.kind != LightKind::point)
                    light.direction = normalized(rng.vec3(-1, 1) + Vec3{0.01, 0.01, 0.01});
                if (light.kind != LightKind::directional) light.range = rng.uniform(0.5, 60);
                if (light.kind == LightKind::spot) {
                    light.inner_angle = rng.uniform(0.0, 0.7);
                    light.outer_angle = light.inner_angle + rng.uniform(0.0, 0.7);
                }
                node.light = light;
            }
            if (rng.uniform_int(0, 3) == 0) {
                SoundDef snd;
                snd.file = "sounds/s" + std::to_string(rng.uniform_int(0, 9)) + ".ogg";
                snd.positional = rng.uniform_int(0, 1) != 0;
                snd.loop = rng.uniform_int(0, 1) != 0;
                snd.gain = rng.uniform(0, 1);
                node.sounds.push_back(snd);
            }
            if (rng.uniform_int(0, 2) == 0) {
                BodyDef body;
                body.has_graphics = node.entity.has_value() && rng.uniform_int(0, 1) != 0;
                body.shape.kind = static_cast<ShapeKind>(rng.uniform_int(0, 4));
                switch (body.shape.kind) {
                    case ShapeKind::cube:
                        body.shape.half_extents = {rng.uniform(0.1, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 3)};
                        break;
                    case ShapeKind::sphere:
                        body.shape.radius = rng.uniform(0.1, 3);
                        break;
                    case ShapeKind::capsule:
                        body.shape.radius = rng.uniform(0.1, 1.5);
                        body.shape.height = rng.uniform(0.2, 3);
                        break;
                    case ShapeKind::convex:
                    case ShapeKind::trimesh:
                        body.shape.file = "meshes/hull" + std::to_string(rng.uniform_int(0, 5)) + ".mesh";
                        break;
                }
                if (rng.uniform_int(0, 2) == 0)
                    body.shape.shape_params.emplace_back("tag" + std::to_string(rng.uniform_int(0, 3)),
                                                         "v" + std::to_string(rng.uniform_int(0, 99)));
                body.actor.is_static = body.shape.kind == ShapeKind::trimesh || rng.uniform_int(0, 1) != 0;
                if (!body.actor.is_static) body.actor.mass = rng.uniform(0.5, 200);
                body.actor.skin_width = rng.uniform(0.0, 0.1);
                body.actor.group = rng.uniform_int(0, 31);
                node.body = body;
            }
            if (depth < 3 && rng.uniform_int(0, 2) == 0) {
                int kids = rng.uniform_int(1, 3);
                for (int k = 0; k < kids; ++k) node.children.push_back(self(self, depth + 1));
            }
            return node;
        };

        int roots = rng.uniform_int(1, 4);
        for (int r = 0; r < roots; ++r) scene.root_nodes.push_back(build(build, 0));

        // one valid camera anchor referencing existing nodes
        if (node_names.size() >= 2 && rng.uniform_int(0, 1)) {
            CameraAnchorDef cam;
            cam.source_node = node_names[0];
            cam.target_node = node_names[node_names.size() - 1];
            cam.fov_y = rng.uniform(0.2, 3.0);
            cam.aspect = rng.uniform(0.5, 3.0);
            scene.root_nodes[0].camera = cam;
        }
        doc.scenes.push_back(std::move(scene));
    }
    return doc;
}

}  // namespace vetest
