#include <doctest.h>

#include "oracles.hpp"
#include "test_support.hpp"
#include "vekit/physics.hpp"

using namespace vekit;

static PhysicsBodyDesc dynamic_sphere(const Vec3& pos, double r, double mass) {
    PhysicsBodyDesc d;
    d.kind = BodyKind::Dynamic;
    d.shape = SphereShape{r};
    d.pose.position = pos;
    d.mass = mass;
    return d;
}

static PhysicsBodyDesc static_box(const Vec3& pos, const Vec3& half) {
    PhysicsBodyDesc d;
    d.kind = BodyKind::Static;
    d.shape = BoxShape{half};
    d.pose.position = pos;
    return d;
}

TEST_CASE("add_body validations") {
    PhysicsWorld world;
    TriangleMeshData mesh = load_mesh_asset(vetest::data_dir() / "scenes" / "meshes" / "floor.mesh");
    PhysicsBodyDesc tri;
    tri.kind = BodyKind::Static;
    tri.shape = TriMeshShape{TriMeshShape::Data::make(mesh)};
    CHECK_NOTHROW(world.add_body(tri));
    CHECK(world.body(0).kind == BodyKind::Static);

    tri.kind = BodyKind::Dynamic;
    tri.mass = 1.0;
    CHECK_THROWS_AS(world.add_body(tri), InvalidShape);

    PhysicsBodyDesc bad_mass = dynamic_sphere({0, 0, 0}, 1, 0.0);
    CHECK_THROWS_AS(world.add_body(bad_mass), InvalidMass);

    PhysicsBodyDesc flat;
    flat.kind = BodyKind::Static;
    flat.shape = ConvexShape{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}}};  // coplanar
    CHECK_THROWS_AS(world.add_body(flat), InvalidShape);

    PhysicsBodyDesc bad_group = static_box({0, 0, 0}, {1, 1, 1});
    bad_group.group = 32;
    CHECK_THROWS_AS(world.add_body(bad_group), GroupOutOfRange);
}

TEST_CASE("solid sphere inverse inertia") {
    PhysicsWorld world;
    BodyId id = world.add_body(dynamic_sphere({0, 0, 0}, 0.7, 2.0));
    double expected = 1.0 / (0.4 * 2.0 * 0.7 * 0.7);
    const Mat3& inv = world.body(id).inv_inertia_body;
    CHECK(inv(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(inv(1, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(inv(2, 2) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("capsule inertia matches a Monte Carlo volume integral") {
    const double r = 0.4, hh = 0.6, mass = 3.0;
    Mat3 tensor = inertia_tensor(CapsuleShape{r, hh}, mass);
    // rejection-sample the capsule volume, accumulate the inertia integrand
    vetest::Rng rng(99);
    const int want = 200000;
    double sxx = 0, syy = 0;
    int kept = 0;
    double top = hh + r;
    while (kept < want) {
        Vec3 p{rng.uniform(-r, r), rng.uniform(-top, top), rng.uniform(-r, r)};
        double cy = std::clamp(p.y, -hh, hh);
        double d2 = p.x * p.x + (p.y - cy) * (p.y - cy) + p.z * p.z;
        if (d2 > r * r) continue;
        ++kept;
        sxx += p.y * p.y + p.z * p.z;
        syy += p.x * p.x + p.z * p.z;
    }
    double ixx = mass * sxx / want, iyy = mass * syy / want;
    CHECK(tensor(0, 0) == doctest::Approx(ixx).epsilon(0.02));
    CHECK(tensor(1, 1) == doctest::Approx(iyy).epsilon(0.02));
}

TEST_CASE("free fall single step matches hand-evaluated semi-implicit Euler") {
    PhysicsWorld world;
    BodyId id = world.add_body(dynamic_sphere({0, 10, 0}, 0.5, 1.0));
    const double dt = 1.0 / 60.0;
    world.step(dt);
    double v_expect = -9.81 * dt;
    double dx_expect = v_expect * dt;
    CHECK(std::abs(world.body(id).linear_velocity.y - v_expect) < 1e-12);
    CHECK(std::abs(world.body(id).pose.position.y - (10.0 + dx_expect)) < 1e-12);
    CHECK(world.body(id).linear_velocity.x == 0.0);
}

TEST_CASE("static bodies never move under gravity") {
    PhysicsWorld world;
    BodyId floor = world.add_body(static_box({0, -1, 0}, {10, 1, 10}));
    world.add_body(dynamic_sphere({0, 3, 0}, 0.5, 1.0));
    Pose3 before = world.body(floor).pose;
    for (int i = 0; i < 120; ++i) world.step(1.0 / 60.0);
    CHECK(world.body(floor).pose == before);
    CHECK(world.body(floor).pose_writes == 0);
    CHECK(world.body(floor).linear_velocity == Vec3{});
}

TEST_CASE("sphere narrowphase basics: distance 1.5 and touching") {
    PhysicsWorld world;
    BodyId a = world.add_body(dynamic_sphere({0, 0, 0}, 1.0, 1.0));
    BodyId b = world.add_body(dynamic_sphere({1.5, 0, 0}, 1.0, 1.0));
    auto contact = world.narrowphase_pair(a, b);
    REQUIRE(contact.has_value());
    CHECK(contact->normal.x == doctest::Approx(1.0));
    CHECK(contact->penetration_depth == doctest::Approx(0.5));

    PhysicsWorld world2;
    BodyId c = world2.add_body(dynamic_sphere({0, 0, 0}, 1.0, 1.0));
    BodyId d = world2.add_body(dynamic_sphere({2.0, 0, 0}, 1.0, 1.0));
    auto touching = world2.narrowphase_pair(c, d);
    REQUIRE(touching.has_value());  // touching counts
    CHECK(touching->penetration_depth == doctest::Approx(0.0));

    BodyId e = world2.add_body(dynamic_sphere({4.1, 0, 0}, 1.0, 1.0));
    CHECK_FALSE(world2.narrowphase_pair(d, e).has_value());
}

TEST_CASE("capsule vs box depth agrees with the sampling oracle") {
    vetest::Rng rng(314);
    const double r = 0.5, hh = 0.5;
    const Vec3 half{0.5, 0.5, 0.5};
    CollisionShape capsule = CapsuleShape{r, hh};
    CollisionShape box = BoxShape{half};
    Pose3 box_pose;  // unit box at origin
    int contacts_checked = 0, deep_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        CAPTURE(trial);
        Pose3 cap_pose;
        cap_pose.position = rng.vec3(-1.6, 1.6);
        cap_pose.orientation = rng.quat();

        // oracle works in box-local space (identity box)
        Vec3 axis = rotate(cap_pose.orientation, {0, hh, 0});
        Vec3 s0 = cap_pose.position - axis, s1 = cap_pose.position + axis;
        double core_dist = vetest::oracle_segment_box_distance(s0, s1, half);

        auto contact = collide(capsule, cap_pose, box, box_pose);
        if (core_dist > r + 1e-7) {
            CHECK_FALSE(contact.has_value());
        } else if (core_dist > 1e-6 && core_dist < r - 1e-7) {
            REQUIRE(contact.has_value());
            double expect = r - core_dist;
            CHECK(std::abs(contact->depth - expect) < 1e-6);
            ++contacts_checked;
        } else if (core_dist <= 1e-9) {
            REQUIRE(contact.has_value());
            double pen = vetest::oracle_segment_box_penetration(s0, s1, half);
            CHECK(std::abs(contact->depth - (r + pen)) < 1e-6);
            ++deep_checked;
        }
    }
    CHECK(contacts_checked > 20);  // the pose distribution must exercise shallow contacts
    CHECK(deep_checked > 5);
}

TEST_CASE("box vs box penetration agrees with the 15-axis SAT oracle") {
    vetest::Rng rng(2718);
    int overlapping_checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        CAPTURE(trial);
        Vec3 ha{rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
        Vec3 hb{rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0)};
        Pose3 pa, pb;
        pa.position = rng.vec3(-0.5, 0.5);
        pa.orientation = rng.quat();
        pb.position = rng.vec3(-1.5, 1.5);
        pb.orientation = rng.quat();
        bool separated;
        double sat = vetest::oracle_box_box_sat(pa, ha, pb, hb, separated);
        auto contact = collide(CollisionShape{BoxShape{ha}}, pa, CollisionShape{BoxShape{hb}}, pb);
        if (separated) {
            CHECK_FALSE(contact.has_value());
        } else {
            REQUIRE(contact.has_value());
            CHECK(std::abs(contact->depth - sat) < 1e-6);
            ++overlapping_checked;
        }
    }
    CHECK(overlapping_checked > 30);
}

TEST_CASE("narrowphase symmetry: swapped arguments flip the normal") {
    vetest::Rng rng(55);
    std::vector<CollisionShape> shapes{SphereShape{0.6}, CapsuleShape{0.4, 0.5}, BoxShape{{0.5, 0.3, 0.7}},
                                       ConvexShape{{{0.5, 0, 0},
                                                    {-0.4, 0.4, 0},
                                                    {-0.4, -0.4, 0.3},
                                                    {0, 0.1, -0.5},
                                                    {0.2, 0.3, 0.4}}}};
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        CAPTURE(trial);
        const CollisionShape& sa = shapes[rng.uniform_int(0, 3)];
        const CollisionShape& sb = shapes[rng.uniform_int(0, 3)];
        Pose3 pa, pb;
        pa.position = rng.vec3(-1, 1);
        pa.orientation = rng.quat();
        pb.position = rng.vec3(-1, 1);
        pb.orientation = rng.quat();
        auto ab = collide(sa, pa, sb, pb);
        auto ba = collide(sb, pb, sa, pa);
        CHECK(ab.has_value() == ba.has_value());
        if (ab && ba) {
            CHECK(std::abs(ab->depth - ba->depth) < 1e-9);
            CHECK(length(ab->normal + ba->normal) < 1e-9);
            CHECK(std::abs(length(ab->normal) - 1.0) < 1e-9);
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("resolve: equal-mass elastic head-on exchange") {
    PhysicsWorld world;
    world.set_gravity({0, 0, 0});
    BodyId a = world.add_body(dynamic_sphere({-1, 0, 0}, 0.6, 3.0));
    BodyId b = world.add_body(dynamic_sphere({0.1, 0, 0}, 0.6, 3.0));
    world.set_material(a, {0.0, 1.0});
    world.set_material(b, {0.0, 1.0});
    world.set_linear_velocity(a, {1, 0, 0});
    world.set_linear_velocity(b, {-1, 0, 0});
    auto contact = world.narrowphase_pair(a, b);
    REQUIRE(contact.has_value());
    world.solver_config().baumgarte = 0.0;
    world.resolve(*contact, 1.0 / 60.0);
    CHECK(std::abs(world.body(a).linear_velocity.x - (-1.0)) < 1e-9);
    CHECK(std::abs(world.body(b).linear_velocity.x - 1.0) < 1e-9);
}

TEST_CASE("resolve: e=0 zeroes relative normal velocity") {
    PhysicsWorld world;
    world.set_gravity({0, 0, 0});
    BodyId a = world.add_body(dynamic_sphere({-0.5, 0, 0}, 0.6, 2.0));
    BodyId b = world.add_body(dynamic_sphere({0.5, 0, 0}, 0.6, 2.0));
    world.set_linear_velocity(a, {1, 0, 0});
    world.set_linear_velocity(b, {-1, 0, 0});
    auto contact = world.narrowphase_pair(a, b);
    REQUIRE(contact.has_value());
    world.solver_config().baumgarte = 0.0;
    world.resolve(*contact, 1.0 / 60.0);
    double rel = world.body(b).linear_velocity.x - world.body(a).linear_velocity.x;
    CHECK(std::abs(rel) < 1e-9);
}

TEST_CASE("resolve: restitution against a static body") {
    PhysicsWorld world;
    world.set_gravity({0, 0, 0});
    BodyId wall = world.add_body(static_box({1.5, 0, 0}, {1, 4, 4}));
    BodyId ball = world.add_body(dynamic_sphere({0, 0, 0}, 0.6, 1.0));
    world.set_material(wall, {0.0, 0.5});
    world.set_material(ball, {0.0, 0.9});  // e = min(0.5, 0.9) = 0.5
    world.set_linear_velocity(ball, {2, 0, 0});
    auto contact = world.narrowphase_pair(ball, wall);
    REQUIRE(contact.has_value());
    world.solver_config().baumgarte = 0.0;
    world.resolve(*contact, 1.0 / 60.0);
    CHECK(std::abs(world.body(ball).linear_velocity.x - (-1.0)) < 1e-6);
    CHECK(world.body(wall).linear_velocity == Vec3{});
}

TEST_CASE("momentum is conserved by resolve with correction disabled") {
    vetest::Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        CAPTURE(trial);
        PhysicsWorld world;
        world.set_gravity({0, 0, 0});
        world.solver_config().baumgarte = 0.0;
        double m1 = rng.uniform(0.5, 10), m2 = rng.uniform(0.5, 10);
        BodyId a = world.add_body(dynamic_sphere(rng.vec3(-0.2, 0.2), 0.7, m1));
        BodyId b = world.add_body(dynamic_sphere(rng.vec3(-0.2, 0.2) + Vec3{1.0, 0, 0}, 0.7, m2));
        world.set_material(a, {rng.uniform(0, 1), rng.uniform(0, 1)});
        world.set_material(b, {rng.uniform(0, 1), rng.uniform(0, 1)});
        world.set_linear_velocity(a, rng.vec3(-3, 3));
        world.set_linear_velocity(b, rng.vec3(-3, 3));
        auto contact = world.narrowphase_pair(a, b);
        if (!contact) continue;
        Vec3 before = world.body(a).linear_velocity * m1 + world.body(b).linear_velocity * m2;
        world.resolve(*contact, 1.0 / 60.0);
        Vec3 after = world.body(a).linear_velocity * m1 + world.body(b).linear_velocity * m2;
        CHECK(length(after - before) < 1e-9);
    }
}

TEST_CASE("restitution bound: separating speed <= e * closing speed") {
    vetest::Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        CAPTURE(trial);
        PhysicsWorld world;
        world.set_gravity({0, 0, 0});
        world.solver_config().baumgarte = 0.0;
        BodyId a = world.add_body(dynamic_sphere({-0.45, 0, 0}, 0.5, rng.uniform(0.5, 5)));
        BodyId b = world.add_body(dynamic_sphere({0.45, 0, 0}, 0.5, rng.uniform(0.5, 5)));
        double e = rng.uniform(0, 1);
        world.set_material(a, {0.0, e});
        world.set_material(b, {0.0, e});
        world.set_linear_velocity(a, rng.vec3(-2, 2));
        world.set_linear_velocity(b, rng.vec3(-2, 2));
        auto contact = world.narrowphase_pair(a, b);
        REQUIRE(contact.has_value());
        Vec3 n = contact->normal;
        double closing = dot(world.body(b).linear_velocity - world.body(a).linear_velocity, n);
        world.resolve(*contact, 1.0 / 60.0);
        double separating = dot(world.body(b).linear_velocity - world.body(a).linear_velocity, n);
        if (closing < 0.0) CHECK(separating <= e * (-closing) + 1e-6);
    }
}

TEST_CASE("resting sphere settles within skin + slop") {
    PhysicsWorld world;
    world.add_body(static_box({0, -1, 0}, {10, 1, 10}));  // top face at y = 0
    BodyId ball = world.add_body(dynamic_sphere({0, 0.5, 0}, 0.5, 1.0));
    for (int i = 0; i < 600; ++i) world.step(1.0 / 60.0);
    double penetration = 0.5 - world.body(ball).pose.position.y;
    CHECK(penetration <= 0.025 + 0.005);
    CHECK(penetration >= 0.0);  // it must rest on the floor, not hover away
    CHECK(std::abs(world.body(ball).linear_velocity.y) < 0.05);
}

TEST_CASE("step returns hit reports in ascending pair order") {
    PhysicsWorld world;
    world.add_body(static_box({0, -1, 0}, {10, 1, 10}));
    BodyId b1 = world.add_body(dynamic_sphere({0, 0.45, 0}, 0.5, 1.0));
    BodyId b2 = world.add_body(dynamic_sphere({3, 0.45, 0}, 0.5, 1.0));
    auto reports = world.step(1.0 / 60.0);
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].source == 0);
    CHECK(reports[0].other == b1);
    CHECK(reports[1].other == b2);
    CHECK(reports[0].other_group == 0);
    // floor pushes the spheres up: impulse on b is along the contact normal
    CHECK(reports[0].applied_impulse.y > 0.0);
}

TEST_CASE("group filter: disabled pairs do not collide") {
    PhysicsWorld world;
    PhysicsBodyDesc floor = static_box({0, -1, 0}, {10, 1, 10});
    floor.group = 2;
    world.add_body(floor);
    PhysicsBodyDesc ball = dynamic_sphere({0, 0.4, 0}, 0.5, 1.0);
    ball.group = 1;
    BodyId b = world.add_body(ball);

    world.set_group_interaction(1, 2, false);
    for (int i = 0; i < 60; ++i) world.step(1.0 / 60.0);
    CHECK(world.body(b).pose.position.y < -0.5);  // fell through
    CHECK(world.events().empty());

    SUBCASE("re-enabling restores contact on the next step") {
        PhysicsWorld w2;
        PhysicsBodyDesc f2 = static_box({0, -1, 0}, {10, 1, 10});
        f2.group = 2;
        w2.add_body(f2);
        PhysicsBodyDesc d2 = dynamic_sphere({0, 0.45, 0}, 0.5, 1.0);
        d2.group = 1;
        BodyId id2 = w2.add_body(d2);
        w2.set_group_interaction(1, 2, false);
        w2.step(1.0 / 60.0);
        CHECK(w2.events().empty());
        w2.set_group_interaction(1, 2, true);
        w2.step(1.0 / 60.0);
        REQUIRE(w2.events().size() == 1);
        CHECK(w2.events()[0].other == id2);
    }

    SUBCASE("self-group pairs can be disabled") {
        PhysicsWorld w3;
        w3.set_gravity({0, 0, 0});
        PhysicsBodyDesc s1 = dynamic_sphere({-0.4, 0, 0}, 0.5, 1.0);
        PhysicsBodyDesc s2 = dynamic_sphere({0.4, 0, 0}, 0.5, 1.0);
        s1.group = s2.group = 3;
        w3.add_body(s1);
        w3.add_body(s2);
        w3.set_group_interaction(3, 3, false);
        w3.step(1.0 / 60.0);
        CHECK(w3.events().empty());
    }
}

TEST_CASE("with all pairs disabled, stepping is pure ballistic integration") {
    PhysicsWorld world;
    for (int g1 = 0; g1 < 32; ++g1)
        for (int g2 = g1; g2 < 32; ++g2) world.set_group_interaction(g1, g2, false);
    world.add_body(static_box({0, -1, 0}, {20, 1, 20}));
    BodyId b = world.add_body(dynamic_sphere({0, 5, 0}, 0.5, 2.0));
    world.set_linear_velocity(b, {1.5, 2.0, -0.5});

    // closed-form oracle evaluated independently
    const double dt = 1.0 / 60.0;
    Vec3 v{1.5, 2.0, -0.5};
    Vec3 x{0, 5, 0};
    for (int i = 0; i < 90; ++i) {
        v += Vec3{0, -9.81, 0} * dt;
        x += v * dt;
    }
    for (int i = 0; i < 90; ++i) world.step(dt);
    CHECK(length(world.body(b).pose.position - x) < 1e-12);
    CHECK(length(world.body(b).linear_velocity - v) < 1e-12);
}

TEST_CASE("determinism: identical worlds produce bit-identical trajectories") {
    auto build = [] {
        PhysicsWorld w;
        w.add_body(static_box({0, -1, 0}, {10, 1, 10}));
        for (int i = 0; i < 5; ++i) {
            PhysicsBodyDesc d = dynamic_sphere({i * 0.4 - 1.0, 2.0 + 0.3 * i, 0.1 * i}, 0.3, 1.0 + i);
            d.material = {0.4, 0.3};
            w.add_body(d);
        }
        return w;
    };
    PhysicsWorld w1 = build(), w2 = build();
    for (int i = 0; i < 240; ++i) {
        const auto& e1 = w1.step(1.0 / 60.0);
        const auto& e2 = w2.step(1.0 / 60.0);
        REQUIRE(e1.size() == e2.size());
    }
    for (BodyId id = 0; id < 6; ++id) {
        CHECK(w1.body(id).pose.position == w2.body(id).pose.position);
        CHECK(w1.body(id).pose.orientation == w2.body(id).pose.orientation);
        CHECK(w1.body(id).linear_velocity == w2.body(id).linear_velocity);
    }
}

TEST_CASE("non-finite state aborts the step and restores the world") {
    PhysicsWorld world;
    BodyId b = world.add_body(dynamic_sphere({0, 5, 0}, 0.5, 1.0));
    world.set_linear_velocity(b, {std::nan(""), 0, 0});
    Vec3 before = world.body(b).pose.position;
    CHECK_THROWS_AS(world.step(1.0 / 60.0), NonFiniteState);
    CHECK(world.body(b).pose.position == before);
    CHECK(world.events().empty());
}

TEST_CASE("sweep: time of impact against a wall") {
    PhysicsWorld world;
    world.add_body(static_box({3.0, 0, 0}, {0.5, 4, 4}));  // face at x = 2.5
    CollisionShape capsule = CapsuleShape{0.5, 0.5};
    Pose3 pose;  // capsule surface at x = 0.5, 2 m from the wall

    auto hit = world.sweep(capsule, pose, {4, 0, 0}, 0xffffffffu, {});
    REQUIRE(hit.has_value());
    CHECK(std::abs(hit->t - 0.5) < 1e-3);
    CHECK(hit->normal.x == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(hit->other == 0);

    SUBCASE("displacement away from everything") {
        CHECK_FALSE(world.sweep(capsule, pose, {-4, 0, 0}, 0xffffffffu, {}).has_value());
    }
    SUBCASE("start already touching reports t = 0") {
        Pose3 close;
        close.position = {1.99, 0, 0};  // gap 0.01 < skin 0.025
        auto touch = world.sweep(capsule, close, {1, 0, 0}, 0xffffffffu, {}, 0.025);
        REQUIRE(touch.has_value());
        CHECK(touch->t == 0.0);
        CHECK(touch->normal.x == doctest::Approx(-1.0).epsilon(1e-6));
    }
    SUBCASE("group mask excludes bodies") {
        CHECK_FALSE(world.sweep(capsule, pose, {4, 0, 0}, ~1u, {}).has_value());
    }
    SUBCASE("exclusion list skips bodies") {
        CHECK_FALSE(world.sweep(capsule, pose, {4, 0, 0}, 0xffffffffu, {0}).has_value());
    }
}

TEST_CASE("trimesh contacts: sphere and box rest on a mesh floor") {
    TriangleMeshData mesh = load_mesh_asset(vetest::data_dir() / "scenes" / "meshes" / "floor.mesh");
    auto data = TriMeshShape::Data::make(mesh);

    PhysicsWorld world;
    PhysicsBodyDesc floor;
    floor.kind = BodyKind::Static;
    floor.shape = TriMeshShape{data};
    world.add_body(floor);
    BodyId ball = world.add_body(dynamic_sphere({1, 0.45, 1}, 0.5, 1.0));
    PhysicsBodyDesc crate;
    crate.kind = BodyKind::Dynamic;
    crate.shape = BoxShape{{0.25, 0.25, 0.25}};
    crate.pose.position = {-2, 0.26, -2};
    crate.mass = 10.0;
    BodyId box_id = world.add_body(crate);

    for (int i = 0; i < 300; ++i) world.step(1.0 / 60.0);
    CHECK(world.body(ball).pose.position.y > 0.45);
    CHECK(world.body(ball).pose.position.y < 0.55);
    CHECK(world.body(box_id).pose.position.y > 0.20);
    CHECK(world.body(box_id).pose.position.y < 0.30);

    // trimesh vs trimesh is unsupported
    PhysicsWorld w2;
    BodyId m1 = w2.add_body(floor);
    floor.pose.position = {0, 0.5, 0};
    BodyId m2 = w2.add_body(floor);
    CHECK_THROWS_AS(w2.narrowphase_pair(m1, m2), UnsupportedPair);
}

TEST_CASE("capsule vs trimesh distance supports conservative advancement") {
    TriangleMeshData mesh = load_mesh_asset(vetest::data_dir() / "scenes" / "meshes" / "floor.mesh");
    CollisionShape floor = TriMeshShape{TriMeshShape::Data::make(mesh)};
    CollisionShape capsule = CapsuleShape{0.3, 0.6};
    Pose3 cap_pose;
    cap_pose.position = {0, 2.0, 0};  // lowest point at y = 1.1
    Pose3 floor_pose;
    auto d = shape_distance(capsule, cap_pose, floor, floor_pose, 10.0);
    REQUIRE(d.has_value());
    CHECK(d->distance == doctest::Approx(1.1).epsilon(1e-9));
    CHECK(d->point_on_b.y == doctest::Approx(0.0));
    // beyond the window the query reports nothing
    CHECK_FALSE(shape_distance(capsule, cap_pose, floor, floor_pose, 0.5).has_value());
}
