#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "clutter/rng.hpp"
#include "clutter/scan.hpp"

namespace clutter::sim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Segment {
  Point2 a;
  Point2 b;
  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Box {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool contains_strict(Point2 p) const { return p.x > min_x && p.x < max_x && p.y > min_y && p.y < max_y; }
  bool overlaps(const Box& o) const {
    return min_x < o.max_x && o.min_x < max_x && min_y < o.max_y && o.min_y < max_y;
  }
  Box inflated(double margin) const { return {min_x - margin, min_y - margin, max_x + margin, max_y + margin}; }
  friend bool operator==(const Box&, const Box&) = default;
};

// Segment soup for one room. `walkable` bounds the region where sensor poses
// may be drawn and `solids` lists closed obstacles a pose may not sit inside;
// both are consulted only by the free-space test.
struct Scene {
  std::vector<Segment> segments;
  ClassLabel label = ClassLabel::corridor;
  Box extent;
  Box walkable;
  std::vector<Box> solids;
  // Headings (radians) the room's main axes offer to a sensor.
  std::vector<double> axis_headings;

  friend bool operator==(const Scene&, const Scene&) = default;
};

struct SensorPose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double height_m = 0.0;
};

struct NoiseConfig {
  bool enabled = true;
  double sigma = 0.01;
};

struct SimConfig {
  std::array<std::size_t, kClassCount> per_class{};
  std::uint64_t seed = 42;
  NoiseConfig noise;
};

inline constexpr double kMaxExtentSide = 60.0;
inline constexpr double kStepTread = 0.3;
inline constexpr double kPoseClearance = 0.3;

// Closed rectangular room [0,w]x[0,h] with no clutter.
Scene make_box_room(double width, double height, ClassLabel label = ClassLabel::shared_space);

Scene generate_scene(ClassLabel label, Rng& rng);

// Distance along `direction` (unit vector) to the nearest segment, clipped to
// [kMinRange, kMaxRange]; kMaxRange when nothing is hit.
double cast_ray(const Scene& scene, Point2 origin, Point2 direction);

bool in_free_space(const Scene& scene, Point2 p);

// Rejection-samples a free-space position; heading follows one of the room's
// axes with up to +/-10 degrees of jitter; height is drawn from {0,1,2,3} m.
SensorPose sample_pose(const Scene& scene, Rng& rng);

// Throws InvalidPoseError when the pose is not in free space.
Scan simulate_scan(const Scene& scene, const SensorPose& pose, const NoiseConfig& noise, Rng& rng);

// Row r is generated from the substream (seed, r); rows are ordered by class
// in canonical order.
Dataset generate_dataset(const SimConfig& config);

}  // namespace clutter::sim
