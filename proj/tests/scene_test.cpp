#include <gtest/gtest.h>

#include "egosearch/scene.hpp"
#include "oracles.hpp"

using namespace egosearch;

namespace {

SceneParams empty_params() {
  SceneParams p;
  p.furniture_min = p.furniture_max = 0;
  p.cabinet_min = p.cabinet_max = 0;
  p.partition_min = p.partition_max = 0;
  return p;
}

SceneParams busy_params() {
  SceneParams p;
  p.furniture_min = p.furniture_max = 8;
  p.cabinet_min = p.cabinet_max = 2;
  return p;
}

Box box(double x, double y, double hx, double hy, double hz = 1.0, double yaw = 0.0) {
  return Box{Vec3(x, y, hz), Vec3(hx, hy, hz), yaw};
}

Scene room_with(std::vector<Box> furniture, double res = 0.1) {
  return Scene(Bounds{}, {}, std::move(furniture), {}, TargetObject{Vec3(0, 0, 0.1), 0.1}, res, 0.3, 1.8);
}

}  // namespace

TEST(Generate, EmptyRoomHasOnlyWalls) {
  const Scene s = generate_scene(1, empty_params());
  EXPECT_EQ(s.walls().size(), 4u);
  EXPECT_TRUE(s.furniture().empty());
  EXPECT_TRUE(s.cabinets().empty());
  EXPECT_EQ(s.bounds().width(), 10.0);
}

TEST(Generate, Deterministic) {
  EXPECT_EQ(generate_scene(7, SceneParams{}), generate_scene(7, SceneParams{}));
  EXPECT_FALSE(generate_scene(7, SceneParams{}) == generate_scene(8, SceneParams{}));
}

TEST(Generate, FreeSpaceIsConnected) {
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL, 1000ULL, 1001ULL}) {
    const Scene s = generate_scene(seed, busy_params());
    EXPECT_EQ(oracle::free_components(s), 1) << "seed " << seed;
    EXPECT_EQ(count_free_components(s), 1);
    EXPECT_EQ(s.furniture().size(), 8u);
    EXPECT_EQ(s.cabinets().size(), 2u);
  }
}

TEST(Generate, BoxesInsideBoundsAndTargetClear) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    const Scene s = generate_scene(seed, SceneParams{});
    const Bounds& b = s.bounds();
    for (const Box& f : s.furniture()) {
      for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) {
          const Vec2 corner = f.center.head<2>() + rotate(Vec2(sx * f.half.x(), sy * f.half.y()), f.yaw);
          EXPECT_GE(corner.x(), b.x_min - 1e-9);
          EXPECT_LE(corner.x(), b.x_max + 1e-9);
          EXPECT_GE(corner.y(), b.y_min - 1e-9);
          EXPECT_LE(corner.y(), b.y_max + 1e-9);
        }
      }
    }
    for (const Box& solid : s.solids()) EXPECT_FALSE(box_contains(solid, s.target().position));
  }
}

TEST(Generate, CabinetInteriorInsideShell) {
  const Scene s = generate_scene(3, busy_params());
  for (const Cabinet& c : s.cabinets()) {
    for (double sx : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        for (double sz : {-1.0, 1.0}) {
          const Vec2 xy = c.interior_zone.center.head<2>() +
                          rotate(Vec2(sx * c.interior_zone.half.x(), sy * c.interior_zone.half.y()), c.interior_zone.yaw);
          const Vec3 p(xy.x(), xy.y(), c.interior_zone.center.z() + sz * c.interior_zone.half.z());
          EXPECT_TRUE(box_contains(c.shell, p));
        }
      }
    }
  }
}

TEST(FreePose, EmptyRoomSamplesAreFree) {
  const Scene s = generate_scene(1, empty_params());
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const Pose2 p = sample_free_pose(s, rng, 0.3);
    EXPECT_FALSE(check_collision(s, Cylinder{Vec2(p.x, p.y), 0.3, 1.8}).collides);
    EXPECT_GE(p.yaw, 0.0);
    EXPECT_LT(p.yaw, kTwoPi);
  }
}

TEST(FreePose, FurnishedThousandSamples) {
  const Scene s = generate_scene(3, busy_params());
  Rng rng(4);
  int collisions = 0;
  for (int i = 0; i < 1000; ++i) {
    const Pose2 p = sample_free_pose(s, rng, 0.3);
    collisions += check_collision(s, Cylinder{Vec2(p.x, p.y), 0.3, 1.8}).collides ? 1 : 0;
  }
  EXPECT_EQ(collisions, 0);
}

TEST(FreePose, FilledRoomThrows) {
  const Scene s = room_with({box(0, 0, 5, 5)});
  Rng rng(1);
  EXPECT_THROW(sample_free_pose(s, rng, 0.3), SceneError);
}

TEST(FreePose, ClearanceBelowRadiusThrows) {
  const Scene s = generate_scene(1, empty_params());
  Rng rng(1);
  EXPECT_THROW(sample_free_pose(s, rng, 0.1), SceneError);
}

TEST(Target, ExcludeCabinetsNeverInside) {
  const SceneParams p = busy_params();
  const Scene s = generate_scene(3, p);
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t = sample_target_location(s, rng, TargetMode::ExcludeCabinets, p);
    for (const Cabinet& c : s.cabinets()) ASSERT_FALSE(box_contains(c.interior_zone, t));
    const Surface surf = classify_target(s, t, s.target().radius);
    ASSERT_TRUE(surf == Surface::Floor || surf == Surface::Furniture);
    for (const Box& solid : s.solids()) ASSERT_FALSE(box_contains(solid, t, -1e-9));
  }
}

TEST(Target, EverywhereReachesCabinets) {
  SceneParams p = busy_params();
  p.cabinet_min = p.cabinet_max = 1;
  const Scene s = generate_scene(3, p);
  ASSERT_EQ(s.cabinets().size(), 1u);
  Rng rng(10);
  int inside = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t = sample_target_location(s, rng, TargetMode::Everywhere, p);
    inside += box_contains(s.cabinets()[0].interior_zone, t) ? 1 : 0;
  }
  EXPECT_GT(inside, 0);
  EXPECT_LT(inside, 1000);
}

TEST(Target, EmptyRoomOnFloor) {
  const SceneParams p = empty_params();
  const Scene s = generate_scene(1, p);
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec3 t = sample_target_location(s, rng, TargetMode::Everywhere, p);
    EXPECT_DOUBLE_EQ(t.z(), s.target().radius);
  }
}

TEST(Collision, InsideWallAndFarAway) {
  const Scene s = room_with({box(2, 0, 0.1, 1.0)});
  EXPECT_TRUE(check_collision(s, Cylinder{Vec2(2, 0), 0.3, 1.8}).collides);
  EXPECT_FALSE(check_collision(s, Cylinder{Vec2(-3, -3), 0.3, 1.8}).collides);
}

TEST(Collision, TangentIsNotOverlap) {
  // Box face at x = 1.75; a 0.25 m cylinder centred at x = 1.5 just touches it.
  // Values are exact in binary so the distance is exactly the radius.
  const Scene s = room_with({box(2, 0, 0.25, 1.0)});
  EXPECT_FALSE(check_collision(s, Cylinder{Vec2(1.5, 0), 0.25, 1.8}).collides);
  EXPECT_TRUE(check_collision(s, Cylinder{Vec2(1.5 + 1e-9, 0), 0.25, 1.8}).collides);
}

TEST(Collision, RotatedBoxCorner) {
  // Square rotated 45 degrees: corner at distance sqrt(2)*0.5 from the centre.
  const Scene s = room_with({box(0, 0, 0.5, 0.5, 1.0, kPi / 4)});
  const double corner = std::sqrt(2.0) * 0.5;
  EXPECT_FALSE(check_collision(s, Cylinder{Vec2(corner + 0.3 + 1e-6, 0), 0.3, 1.8}).collides);
  EXPECT_TRUE(check_collision(s, Cylinder{Vec2(corner + 0.3 - 1e-6, 0), 0.3, 1.8}).collides);
}

TEST(Collision, HeightIntervalMatters) {
  // A shelf floating at 2.0..2.2 m does not touch a 1.8 m cylinder.
  const Scene s = room_with({Box{Vec3(0, 0, 2.1), Vec3(0.5, 0.5, 0.1), 0.0}});
  EXPECT_FALSE(check_collision(s, Cylinder{Vec2(0, 0), 0.3, 1.8}).collides);
  EXPECT_TRUE(check_collision(s, Cylinder{Vec2(0, 0), 0.3, 2.5}).collides);
}

TEST(ShortestPath, EmptyRoomDiagonal) {
  const Scene s = generate_scene(1, empty_params());
  const double d = shortest_path_length(s, Vec2(0, 0), Vec2(3, 4));
  EXPECT_GE(d, 5.0 - 1e-12);
  EXPECT_LE(d, 5.0 + s.nav_resolution());
  EXPECT_EQ(shortest_path_length(s, Vec2(1, 1), Vec2(1, 1)), 0.0);
}

TEST(ShortestPath, AroundWallMatchesGridOracle) {
  // 2 m wall across the middle of an otherwise empty room.
  const Scene s = room_with({box(0, 0, 0.05, 1.0, 1.25)});
  const Vec2 a(-1.5, 0), b(1.5, 0);
  const auto ca = s.cell_of(a), cb = s.cell_of(b);
  EXPECT_NEAR(grid_distance(s, ca, cb), oracle::grid_dijkstra(s, ca, cb), 1e-9);
  const double d = shortest_path_length(s, a, b);
  EXPECT_GT(d, 3.0);
  EXPECT_LE(d, grid_distance(s, ca, cb) + 2 * std::sqrt(2.0) * s.nav_resolution());
  // Going around the wall end (y = 1 + radius) bounds the path from below.
  EXPECT_GE(d, 2.0 * std::hypot(1.5, 1.3) - 1e-9);
}

TEST(ShortestPath, SymmetricAndTriangle) {
  const Scene s = generate_scene(1001, SceneParams{});
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const Pose2 p = sample_free_pose(s, rng, 0.3), q = sample_free_pose(s, rng, 0.3), r = sample_free_pose(s, rng, 0.3);
    const Vec2 a(p.x, p.y), b(q.x, q.y), c(r.x, r.y);
    EXPECT_EQ(shortest_path_length(s, a, b), shortest_path_length(s, b, a));
    EXPECT_GE(shortest_path_length(s, a, b), (a - b).norm() - 1e-12);
    EXPECT_LE(shortest_path_length(s, a, c),
              shortest_path_length(s, a, b) + shortest_path_length(s, b, c) + s.nav_resolution());
  }
}

TEST(ShortestPath, UnreachableThrows) {
  // Wall splits the room in two.
  const Scene s = room_with({box(0, 0, 0.1, 5.0, 1.25)});
  EXPECT_THROW(shortest_path_length(s, Vec2(-2, 0), Vec2(2, 0)), SceneError);
}

TEST(Grid, DistanceMatchesDijkstraOnGeneratedScenes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scene s = generate_scene(500 + seed, SceneParams{});
    Rng rng(seed);
    for (int k = 0; k < 3; ++k) {
      const Pose2 p = sample_free_pose(s, rng, 0.3), q = sample_free_pose(s, rng, 0.3);
      const auto a = s.cell_of(Vec2(p.x, p.y)), b = s.cell_of(Vec2(q.x, q.y));
      EXPECT_NEAR(grid_distance(s, a, b), oracle::grid_dijkstra(s, a, b), 1e-9);
    }
  }
}
