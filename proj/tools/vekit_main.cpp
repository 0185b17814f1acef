// vekit: validate, inspect, convert, simulate, and benchmark ExDotScene
// virtual environments from the command line.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vekit/vekit.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiagnostics = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

const char* severity_name(vekit::Severity s) {
    return s == vekit::Severity::error ? "ERROR" : "WARNING";
}

void print_diagnostics(const std::vector<vekit::Diagnostic>& diags) {
    for (const vekit::Diagnostic& d : diags)
        std::cout << severity_name(d.severity) << " " << d.path << " " << d.code << " " << d.message
                  << "\n";
}

int cmd_validate(const std::string& scene_path) {
    std::string text;
    try {
        text = vekit::read_text_file(scene_path);
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    vekit::SceneDocument doc;
    try {
        doc = vekit::parse_scenes(text);
    } catch (const vekit::SyntaxError& e) {
        std::cout << "ERROR input syntax " << e.what() << "\n";
        return kExitDiagnostics;
    } catch (const vekit::SchemaError& e) {
        std::cout << "ERROR " << e.path << " " << e.code << " " << e.what() << "\n";
        return kExitDiagnostics;
    } catch (const vekit::ValueError& e) {
        std::cout << "ERROR " << e.path << " value " << e.what() << "\n";
        return kExitDiagnostics;
    }
    auto resolver = vekit::directory_resolver(std::filesystem::path(scene_path).parent_path());
    auto diags = vekit::validate(doc, resolver);
    print_diagnostics(diags);
    return vekit::has_errors(diags) ? kExitDiagnostics : kExitOk;
}

void describe_node(const vekit::NodeDef& node, int depth) {
    std::string line(static_cast<std::size_t>(depth) * 2, ' ');
    line += "node " + node.name;
    if (node.entity) line += " [entity " + node.entity->mesh_file + "]";
    if (node.light) {
        const char* kind = node.light->kind == vekit::LightKind::point
                               ? "point"
                               : node.light->kind == vekit::LightKind::directional ? "directional"
                                                                                   : "spot";
        line += std::string(" [light ") + kind + "]";
    }
    if (node.camera) line += " [camera ->" + node.camera->target_node + "]";
    if (!node.sounds.empty()) line += " [sounds " + std::to_string(node.sounds.size()) + "]";
    if (node.body) {
        const vekit::BodyDef& b = *node.body;
        line += b.has_graphics ? " [body " : " [actor ";
        switch (b.shape.kind) {
            case vekit::ShapeKind::cube: line += "cube"; break;
            case vekit::ShapeKind::sphere: line += "sphere"; break;
            case vekit::ShapeKind::capsule: line += "capsule"; break;
            case vekit::ShapeKind::convex: line += "convex"; break;
            case vekit::ShapeKind::trimesh: line += "trimesh"; break;
        }
        line += b.actor.is_static ? " static" : " dynamic";
        line += " group=" + std::to_string(b.actor.group) + "]";
    }
    std::cout << line << "\n";
    for (const vekit::NodeDef& child : node.children) describe_node(child, depth + 1);
}

int cmd_inspect(const std::string& scene_path, const std::string& only_scene) {
    vekit::SceneDocument doc;
    try {
        doc = vekit::parse_scenes_file(scene_path);
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const vekit::Error& e) {
        std::cout << "ERROR " << e.what() << "\n";
        return kExitDiagnostics;
    }
    if (!only_scene.empty() && !doc.find_scene(only_scene)) {
        std::cerr << "no scene named '" << only_scene << "'\n";
        return kExitRuntime;
    }
    std::cout << "document formatVersion=" << doc.format_version << " scenes=" << doc.scenes.size()
              << "\n";
    for (const vekit::SceneDef& scene : doc.scenes) {
        if (!only_scene.empty() && scene.name != only_scene) continue;
        int nodes = 0, bodies = 0, actors = 0, lights = 0, cameras = 0, sounds = 0;
        auto count = [&](auto&& self, const vekit::NodeDef& n) -> void {
            ++nodes;
            if (n.body) (n.body->has_graphics ? bodies : actors)++;
            if (n.light) ++lights;
            if (n.camera) ++cameras;
            sounds += static_cast<int>(n.sounds.size());
            for (const auto& c : n.children) self(self, c);
        };
        for (const auto& root : scene.root_nodes) count(count, root);
        std::cout << "scene " << scene.name << " nodes=" << nodes << " bodies=" << bodies
                  << " actors=" << actors << " lights=" << lights << " cameras=" << cameras
                  << " sounds=" << sounds << "\n";
        const vekit::SceneAttributes& a = scene.attributes;
        std::cout << "  environment mode="
                  << (a.environment == vekit::EnvironmentMode::indoor ? "indoor" : "outdoor")
                  << " clip=" << vekit::format_double(a.clip_near) << ".."
                  << vekit::format_double(a.clip_far) << " gravity=("
                  << vekit::format_double(a.gravity.x) << " " << vekit::format_double(a.gravity.y) << " "
                  << vekit::format_double(a.gravity.z) << ")\n";
        for (const vekit::NodeDef& root : scene.root_nodes) describe_node(root, 1);
    }
    return kExitOk;
}

int cmd_convert(const std::string& in_path, const std::string& props_path, const std::string& out_path) {
    std::string dotscene_text, props_text;
    try {
        dotscene_text = vekit::read_text_file(in_path);
        props_text = vekit::read_text_file(props_path);
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    try {
        vekit::PropertiesMap props = vekit::parse_properties(props_text);
        vekit::ImportResult result = vekit::import_dotscene(dotscene_text, props);
        print_diagnostics(result.warnings);
        std::string out_text = vekit::serialize_scenes(result.document);
        // converted output must re-validate cleanly
        vekit::SceneDocument back = vekit::parse_scenes(out_text);
        if (vekit::has_errors(vekit::validate(back))) {
            std::cout << "ERROR output failed-revalidation converted document has errors\n";
            return kExitDiagnostics;
        }
        vekit::write_text_file(out_path, out_text);
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const vekit::MappingError& e) {
        std::cout << "ERROR node[" << e.node << "] mapping " << e.what() << "\n";
        return kExitDiagnostics;
    } catch (const vekit::Error& e) {
        std::cout << "ERROR " << e.what() << "\n";
        return kExitDiagnostics;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& scene_path, const std::string& script_path, long frames, double dt,
                 const std::string& trace_path, const std::string& bindings_path) {
    std::string scene_text, script_text;
    try {
        scene_text = vekit::read_text_file(scene_path);
        script_text = vekit::read_text_file(script_path);
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    }
    try {
        vekit::SceneDocument doc = vekit::parse_scenes(scene_text);
        std::filesystem::path asset_dir = std::filesystem::path(scene_path).parent_path();
        auto diags = vekit::validate(doc, vekit::directory_resolver(asset_dir));
        if (vekit::has_errors(diags)) {
            print_diagnostics(diags);
            return kExitDiagnostics;
        }
        std::vector<vekit::InputEvent> script = vekit::parse_input_script(script_text);
        vekit::InputBinding bindings =
            bindings_path.empty() ? vekit::default_bindings()
                                  : vekit::parse_bindings(vekit::read_text_file(bindings_path));

        vekit::World world = vekit::World::instantiate(doc, doc.scenes.front().name, asset_dir);
        vekit::ControllerRegistry registry = vekit::ControllerRegistry::create(world);

        vekit::CharacterDesc desc;
        desc.capsule_radius = 0.3;
        desc.capsule_height = 1.2;
        desc.mass = 80.0;
        desc.step_offset = 0.3;
        desc.slope_limit = vekit::kPi / 4.0;
        desc.skin = 0.025;
        desc.group = 1;
        desc.push_strength = 0.05;
        vekit::Vec3 spawn{0, 0, 0};
        if (auto spawn_node = world.find_node("spawn"))
            spawn = world.world_transform(*spawn_node).position;
        registry.add_character(desc, spawn, 0.0);

        vekit::CameraParams cam_params;
        cam_params.chase_offset = {0, 2, -4};
        vekit::CameraRig rig = vekit::attach(world, registry, vekit::CameraMode::chasing, 0, cam_params);

        vekit::SimConfig config;
        config.dt = dt;
        config.frames = frames;
        vekit::StateTrace trace = vekit::run(world, registry, &rig, script, config, bindings);
        for (const std::string& w : trace.warnings) std::cout << "WARNING " << w << "\n";
        if (!trace_path.empty()) vekit::write_text_file(trace_path, vekit::write_trace(trace));
        std::cout << "DIGEST " << trace.digest << "\n";
        return kExitOk;
    } catch (const vekit::FrameError& e) {
        std::cerr << "simulation failed at " << e.what() << "\n";
        return kExitRuntime;
    } catch (const vekit::IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const vekit::Error& e) {
        std::cout << "ERROR " << e.what() << "\n";
        return kExitDiagnostics;
    }
}

int cmd_cullbench(const std::string& scene_path, long random_count, const std::string& index_kind,
                  long trials, std::uint64_t seed) {
    using namespace vekit;
    std::vector<IndexedBox> boxes;
    try {
        if (!scene_path.empty()) {
            SceneDocument doc = parse_scenes_file(scene_path);
            std::filesystem::path asset_dir = std::filesystem::path(scene_path).parent_path();
            World world = World::instantiate(doc, doc.scenes.front().name, asset_dir);
            for (NodeId id = 0; id < world.node_count(); ++id)
                if (world.has_bounds(id)) boxes.push_back({id, world.world_aabb(id)});
            // node-less actors occupy space too; index them past the node ids
            for (std::size_t i = 0; i < world.physics().body_count(); ++i) {
                const RigidBody& b = world.physics().body(static_cast<BodyId>(i));
                if (!b.linked_node)
                    boxes.push_back(
                        {static_cast<ObjectId>(world.node_count() + i), world.physics().body_aabb(b.id)});
            }
        } else {
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> pos(0.0, 100.0);
            std::uniform_real_distribution<double> size(0.05, 4.0);
            for (long i = 0; i < random_count; ++i) {
                Vec3 lo{pos(rng), pos(rng), pos(rng)};
                Vec3 ext{size(rng), size(rng), size(rng)};
                boxes.push_back({static_cast<ObjectId>(i), {lo, lo + ext}});
            }
        }
    } catch (const IoError& e) {
        std::cerr << e.what() << "\n";
        return kExitRuntime;
    } catch (const Error& e) {
        std::cout << "ERROR " << e.what() << "\n";
        return kExitDiagnostics;
    }

    Octree octree;
    Bvh bvh;
    AxisBsp bsp;
    auto build_t0 = std::chrono::steady_clock::now();
    if (index_kind == "octree") octree = Octree::build(boxes, 10, 8);
    else if (index_kind == "bvh") bvh = Bvh::build(boxes);
    else bsp = AxisBsp::build(boxes, 12, 8);
    auto build_t1 = std::chrono::steady_clock::now();

    std::cout << "index " << index_kind << " objects " << boxes.size() << "\n";
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> fov(0.4, 1.6);
    std::uniform_real_distribution<double> far_dist(30.0, 200.0);

    long agreed = 0;
    double query_seconds = 0.0;
    for (long t = 0; t < trials; ++t) {
        Vec3 eye{pos(rng), pos(rng), pos(rng)};
        Quat q = Quat::from_yaw(angle(rng)) * Quat::from_axis_angle({1, 0, 0}, angle(rng) * 0.25);
        Frustum frustum = Frustum::from_pose(eye, q, fov(rng), 16.0 / 9.0, 0.1, far_dist(rng));

        QueryStats stats;
        auto q0 = std::chrono::steady_clock::now();
        std::vector<ObjectId> visible;
        if (index_kind == "octree") visible = query_frustum(octree, frustum, &stats);
        else if (index_kind == "bvh") visible = query_frustum(bvh, frustum, &stats);
        else visible = query_frustum(bsp, frustum, &stats);
        auto q1 = std::chrono::steady_clock::now();
        query_seconds += std::chrono::duration<double>(q1 - q0).count();

        // brute force: every indexed box against the same six planes
        std::vector<ObjectId> expect;
        for (const IndexedBox& ob : boxes)
            if (frustum_intersects(frustum, ob.box)) expect.push_back(ob.id);
        std::sort(expect.begin(), expect.end());

        bool agree = visible == expect;
        agreed += agree ? 1 : 0;
        std::cout << "trial " << t << " visible " << visible.size() << " visits " << stats.total()
                  << " agree " << (agree ? "yes" : "NO") << "\n";
    }
    std::cout << "agreement " << agreed << "/" << trials << "\n";
    std::cerr << "build " << std::chrono::duration<double>(build_t1 - build_t0).count() << " s, queries "
              << query_seconds << " s\n";
    return agreed == trials ? kExitOk : kExitDiagnostics;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vekit - physics-extended scene toolkit"};
    app.require_subcommand(1);

    std::string scene_path, dotscene_path, props_path, out_path, script_path, trace_path, bindings_path,
        only_scene;
    std::string index_kind = "octree";
    long frames = 600, random_count = 0, trials = 10;
    double dt = 1.0 / 60.0;
    std::uint64_t seed = 0;

    CLI::App* validate = app.add_subcommand("validate", "check a scene file and print diagnostics");
    validate->add_option("scene", scene_path, "ExDotScene file")->required();

    CLI::App* inspect = app.add_subcommand("inspect", "summarize scenes, nodes and attachments");
    inspect->add_option("file", scene_path, "ExDotScene file")->required();
    inspect->add_option("--scene", only_scene, "restrict to one scene by name");

    CLI::App* convert = app.add_subcommand("convert", "DotScene + logic properties -> ExDotScene");
    convert->add_option("dotscene", dotscene_path, "plain DotScene file")->required();
    convert->add_option("props", props_path, "logic properties sidecar")->required();
    convert->add_option("-o,--output", out_path, "output ExDotScene path")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "run the deterministic frame loop");
    simulate->add_option("scene", scene_path, "ExDotScene file")->required();
    simulate->add_option("--script", script_path, "input event script")->required();
    simulate->add_option("--frames", frames, "frame count")->required();
    simulate->add_option("--dt", dt, "fixed timestep seconds");
    simulate->add_option("--trace", trace_path, "write the state trace here");
    simulate->add_option("--bindings", bindings_path, "key binding file");

    CLI::App* cullbench = app.add_subcommand("cullbench", "frustum culling vs brute force");
    auto* opt_scene = cullbench->add_option("--scene", scene_path, "scene to index");
    auto* opt_random = cullbench->add_option("--random", random_count, "index N random boxes");
    cullbench->add_option("--index", index_kind, "octree|bvh|bsp")
        ->check(CLI::IsMember({"octree", "bvh", "bsp"}));
    cullbench->add_option("--trials", trials, "number of random frustums");
    cullbench->add_option("--seed", seed, "random seed");
    opt_scene->excludes(opt_random);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
        app.exit(e);
        return kExitUsage;
    }

    if (validate->parsed()) return cmd_validate(scene_path);
    if (inspect->parsed()) return cmd_inspect(scene_path, only_scene);
    if (convert->parsed()) return cmd_convert(dotscene_path, props_path, out_path);
    if (simulate->parsed())
        return cmd_simulate(scene_path, script_path, frames, dt, trace_path, bindings_path);
    if (cullbench->parsed()) {
        if (scene_path.empty() && random_count <= 0) {
            std::cerr << "cullbench needs --scene or --random N\n";
            return kExitUsage;
        }
        return cmd_cullbench(scene_path, random_count, index_kind, trials, seed);
    }
    return kExitUsage;
}
