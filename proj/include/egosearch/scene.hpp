#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egosearch/geometry.hpp"
#include "egosearch/rng.hpp"

namespace egosearch {

class SceneError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Axis-aligned plan-view rectangle.
struct Bounds {
  double x_min = -5.0, y_min = -5.0, x_max = 5.0, y_max = 5.0;
  double width() const { return x_max - x_min; }
  double depth() const { return y_max - y_min; }
  bool operator==(const Bounds&) const = default;
};

// Open-fronted storage box. The shell's local +x face is open.
struct Cabinet {
  Box shell;
  double wall = 0.03;
  Box interior_zone;

  bool operator==(const Cabinet&) const = default;
};

// Five solid panels (floor, top, back, two sides) of a cabinet shell.
std::vector<Box> cabinet_panels(const Cabinet& c);

struct TargetObject {
  Vec3 position = Vec3::Zero();
  double radius = 0.1;
  bool operator==(const TargetObject&) const = default;
};

enum class TargetMode { ExcludeCabinets, Everywhere };

const char* to_string(TargetMode m);
TargetMode target_mode_from_string(const std::string& s);

struct SceneParams {
  Bounds bounds;
  int furniture_min = 4;
  int furniture_max = 8;
  int cabinet_min = 0;
  int cabinet_max = 2;
  int partition_min = 0;
  int partition_max = 1;
  double wall_height = 2.5;
  double wall_thickness = 0.1;
  double agent_radius = 0.3;
  double agent_height = 1.8;
  double nav_resolution = 0.1;
  double target_radius = 0.1;
  // Placement must leave a free standing spot within this planar distance.
  double reach_distance = 0.45;
  int max_retries = 100;
};

// Result of a plan-view cylinder overlap query.
struct CollisionResult {
  bool collides = false;
  int contact_count = 0;
};

struct Cylinder {
  Vec2 center = Vec2::Zero();
  double radius = 0.3;
  double height = 1.8;
  double base = 0.0;
};

struct Pose2 {
  double x = 0.0, y = 0.0, yaw = 0.0;
};

// Static world. Immutable after construction; derived caches (solid list,
// navigation grid) are rebuilt from the defining fields.
class Scene {
 public:
  Scene() = default;
  Scene(Bounds bounds, std::vector<Box> walls, std::vector<Box> furniture,
        std::vector<Cabinet> cabinets, TargetObject target,
        double nav_resolution, double agent_radius, double agent_height);

  const Bounds& bounds() const { return bounds_; }
  const std::vector<Box>& walls() const { return walls_; }
  const std::vector<Box>& furniture() const { return furniture_; }
  const std::vector<Cabinet>& cabinets() const { return cabinets_; }
  const TargetObject& target() const { return target_; }
  double nav_resolution() const { return nav_resolution_; }
  double agent_radius() const { return agent_radius_; }
  double agent_height() const { return agent_height_; }

  // Every solid box: walls, furniture, and cabinet panels.
  const std::vector<Box>& solids() const { return solids_; }

  Scene with_target(const TargetObject& t) const;

  // Navigation grid over `bounds`, cells free when an agent-radius cylinder
  // centred on the cell does not collide.
  int grid_cols() const { return cols_; }
  int grid_rows() const { return rows_; }
  bool cell_free(int col, int row) const {
    return free_[static_cast<std::size_t>(row) * cols_ + col] != 0;
  }
  Vec2 cell_center(int col, int row) const;
  // Cell containing p (clamped to the grid).
  std::pair<int, int> cell_of(const Vec2& p) const;
  int free_cell_count() const { return free_count_; }

  bool operator==(const Scene& o) const;

 private:
  void rebuild();

  Bounds bounds_;
  std::vector<Box> walls_;
  std::vector<Box> furniture_;
  std::vector<Cabinet> cabinets_;
  TargetObject target_;
  double nav_resolution_ = 0.1;
  double agent_radius_ = 0.3;
  double agent_height_ = 1.8;

  std::vector<Box> solids_;
  int cols_ = 0, rows_ = 0, free_count_ = 0;
  std::vector<std::uint8_t> free_;
};

CollisionResult check_collision(const Scene& scene, const Cylinder& cyl);

// True when an agent-radius disc can sweep straight from a to b.
bool segment_clear(const Scene& scene, const Vec2& a, const Vec2& b,
                   double radius, double height);

// Number of 4-connected components among free navigation cells.
int count_free_components(const Scene& scene);

Scene generate_scene(std::uint64_t seed, const SceneParams& params);

Pose2 sample_free_pose(const Scene& scene, Rng& rng, double clearance);

Vec3 sample_target_location(const Scene& scene, Rng& rng, TargetMode mode,
                            const SceneParams& params);

// Which surface a target position rests on.
enum class Surface { Floor, Furniture, CabinetInterior, None };
Surface classify_target(const Scene& scene, const Vec3& p, double radius);

// Grid distance between two free cells, 8-connected with diagonal cost
// sqrt(2) * resolution. Throws SceneError if unreachable.
double grid_distance(const Scene& scene, std::pair<int, int> from,
                     std::pair<int, int> to);

// Nearest free cell to p (breadth-first over rings).
std::optional<std::pair<int, int>> nearest_free_cell(const Scene& scene,
                                                     const Vec2& p);

// Shortest collision-free planar path length between two free points.
double shortest_path_length(const Scene& scene, const Vec2& from,
                            const Vec2& to);

}  // namespace egosearch
