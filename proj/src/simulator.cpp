#include "clutter/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "clutter/errors.hpp"

namespace clutter::sim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
Point2 sub(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

void add_segment(Scene& s, double x0, double y0, double x1, double y1) {
  s.segments.push_back({{x0, y0}, {x1, y1}});
}

void add_box(Scene& s, const Box& b, bool solid = true) {
  add_segment(s, b.min_x, b.min_y, b.max_x, b.min_y);
  add_segment(s, b.max_x, b.min_y, b.max_x, b.max_y);
  add_segment(s, b.max_x, b.max_y, b.min_x, b.max_y);
  add_segment(s, b.min_x, b.max_y, b.min_x, b.min_y);
  if (solid) s.solids.push_back(b);
}

void finalize_extent(Scene& s) {
  Box e{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
        std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const auto& seg : s.segments) {
    for (Point2 p : {seg.a, seg.b}) {
      e.min_x = std::min(e.min_x, p.x);
      e.min_y = std::min(e.min_y, p.y);
      e.max_x = std::max(e.max_x, p.x);
      e.max_y = std::max(e.max_y, p.y);
    }
  }
  s.extent = e;
}

// Long horizontal wall at height y from x=0..length, broken by door recesses
// that step `outward` (sign of the recess direction in y).
void add_wall_with_recesses(Scene& s, double length, double y, double outward, Rng& rng) {
  constexpr double kDoorWidth = 0.9;
  double x = 0.0;
  double next = rng.uniform(1.0, 3.0);
  while (next + kDoorWidth < length - 0.5) {
    const double depth = rng.uniform(0.10, 0.15);
    const bool present = rng.bernoulli(0.7);
    if (present) {
      const double yr = y + outward * depth;
      add_segment(s, x, y, next, y);
      add_segment(s, next, y, next, yr);
      add_segment(s, next, yr, next + kDoorWidth, yr);
      add_segment(s, next + kDoorWidth, yr, next + kDoorWidth, y);
      x = next + kDoorWidth;
    }
    next += kDoorWidth + rng.uniform(2.5, 6.0);
  }
  add_segment(s, x, y, length, y);
}

Scene corridor(Rng& rng) {
  Scene s;
  s.label = ClassLabel::corridor;
  const double length = rng.uniform(10.0, 40.0);
  const double width = rng.uniform(1.5, 3.0);
  add_wall_with_recesses(s, length, 0.0, -1.0, rng);
  add_wall_with_recesses(s, length, width, +1.0, rng);
  add_segment(s, 0.0, 0.0, 0.0, width);
  add_segment(s, length, 0.0, length, width);
  // Mid-corridor, near the centre line.
  s.walkable = {2.5, 0.5 * width - 0.25, length - 2.5, 0.5 * width + 0.25};
  s.axis_headings = {0.0, kPi};
  return s;
}

Scene staircase(Rng& rng) {
  Scene s;
  s.label = ClassLabel::staircase;
  const double length = rng.uniform(6.0, 10.0);
  const double width = rng.uniform(2.8, 4.0);
  add_box(s, {0.0, 0.0, length, width}, false);

  // Flight along +x on the low-y side: one edge per tread.
  const double flight_w = width * rng.uniform(0.45, 0.55);
  const double start = rng.uniform(1.2, 2.0);
  const int max_steps = static_cast<int>((length - 0.5 - start) / kStepTread);
  const int steps = std::min(rng.uniform_int(10, 16), max_steps);
  for (int k = 0; k <= steps; ++k) {
    const double x = start + k * kStepTread;
    add_segment(s, x, 0.0, x, flight_w);
  }
  const double run_end = start + steps * kStepTread;
  s.solids.push_back({start, 0.0, run_end, flight_w});

  // Balusters on the open side of the flight and a wall-mounted handrail.
  for (int k = 0; k <= steps; k += 2) {
    const double x = start + k * kStepTread;
    add_box(s, {x - 0.02, flight_w + 0.03, x + 0.02, flight_w + 0.07});
  }
  add_segment(s, start, width - 0.08, run_end, width - 0.08);

  // On the landing at the foot of the flight, facing up the stairs.
  s.walkable = {0.3, 0.3, start - 0.3, width - 0.3};
  s.axis_headings = {0.0};
  return s;
}

Scene restroom(Rng& rng) {
  Scene s;
  s.label = ClassLabel::restroom;
  const double a = rng.uniform(3.0, 6.0);
  const double b = rng.uniform(3.0, 6.0);
  add_box(s, {0.0, 0.0, a, b}, false);

  const double pitch = rng.uniform(1.1, 1.3);
  const double first = rng.uniform(0.1, 0.3);
  const double depth = rng.uniform(1.4, 1.6);
  const int partitions = std::max(2, static_cast<int>((a - first - 0.1) / pitch));
  double left = 0.0;
  for (int k = 1; k <= partitions; ++k) {
    const double x = std::min(first + k * pitch, a - 0.05);
    add_segment(s, x, 0.0, x, depth);
    // Stall front; an open door leaves a gap in the middle.
    if (rng.bernoulli(0.8)) {
      const double mid = 0.5 * (left + x);
      add_segment(s, left, depth, mid - 0.3, depth);
      add_segment(s, mid + 0.3, depth, x, depth);
    } else {
      add_segment(s, left, depth, x, depth);
    }
    left = x;
  }
  s.solids.push_back({0.0, 0.0, left, depth});

  const int sinks = rng.uniform_int(1, 3);
  double sx = rng.uniform(0.5, 1.0);
  for (int k = 0; k < sinks && sx + 0.5 < a - 0.3; ++k) {
    add_box(s, {sx, b - 0.45, sx + 0.5, b});
    sx += 0.8;
  }

  // Aisle in front of the stall row, facing the stalls.
  s.walkable = {0.3, depth + 0.4, a - 0.3, std::min(depth + 1.0, b - 0.75)};
  s.axis_headings = {-0.5 * kPi};
  return s;
}

Scene shared_space(Rng& rng) {
  Scene s;
  s.label = ClassLabel::shared_space;
  const double a = rng.uniform(8.0, 20.0);
  const double b = rng.uniform(8.0, 20.0);
  add_box(s, {0.0, 0.0, a, b}, false);

  std::vector<Box> footprints;
  const int clusters = rng.uniform_int(5, 15);
  for (int c = 0; c < clusters; ++c) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double w = rng.uniform(0.8, 2.0);
      const double h = rng.uniform(0.6, 1.2);
      const double cx = rng.uniform(1.2 + 0.5 * w, a - 1.2 - 0.5 * w);
      const double cy = rng.uniform(1.2 + 0.5 * h, b - 1.2 - 0.5 * h);
      const Box table{cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
      const Box footprint = table.inflated(0.6);
      if (std::any_of(footprints.begin(), footprints.end(), [&](const Box& f) { return f.overlaps(footprint); })) {
        continue;
      }
      footprints.push_back(footprint);
      add_box(s, table);
      // Chairs on up to four sides.
      const double gap = 0.15;
      const double cs = 0.4;
      if (rng.bernoulli(0.6)) add_box(s, {cx - cs / 2, table.max_y + gap, cx + cs / 2, table.max_y + gap + cs});
      if (rng.bernoulli(0.6)) add_box(s, {cx - cs / 2, table.min_y - gap - cs, cx + cs / 2, table.min_y - gap});
      if (rng.bernoulli(0.4)) add_box(s, {table.max_x + gap, cy - cs / 2, table.max_x + gap + cs, cy + cs / 2});
      if (rng.bernoulli(0.4)) add_box(s, {table.min_x - gap - cs, cy - cs / 2, table.min_x - gap, cy + cs / 2});
      break;
    }
  }
  const int pillars = rng.uniform_int(0, 2);
  for (int p = 0; p < pillars; ++p) {
    const double px = rng.uniform(2.0, a - 2.0);
    const double py = rng.uniform(2.0, b - 2.0);
    const Box pillar{px - 0.2, py - 0.2, px + 0.2, py + 0.2};
    if (std::none_of(footprints.begin(), footprints.end(), [&](const Box& f) { return f.overlaps(pillar); })) {
      add_box(s, pillar);
    }
  }

  // Central half of the floor, away from the walls.
  s.walkable = {0.25 * a, 0.25 * b, 0.75 * a, 0.75 * b};
  s.axis_headings = {0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  return s;
}

double point_segment_distance(Point2 p, const Segment& s) {
  const Point2 d = sub(s.b, s.a);
  const double len2 = d.x * d.x + d.y * d.y;
  double t = len2 > 0.0 ? ((p.x - s.a.x) * d.x + (p.y - s.a.y) * d.y) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p.x - (s.a.x + t * d.x), p.y - (s.a.y + t * d.y));
}

}  // namespace

Scene make_box_room(double width, double height, ClassLabel label) {
  Scene s;
  s.label = label;
  add_box(s, {0.0, 0.0, width, height}, false);
  s.walkable = {0.0, 0.0, width, height};
  s.axis_headings = {0.0, 0.5 * kPi, kPi, 1.5 * kPi};
  finalize_extent(s);
  return s;
}

Scene generate_scene(ClassLabel label, Rng& rng) {
  Scene s;
  switch (label) {
    case ClassLabel::corridor: s = corridor(rng); break;
    case ClassLabel::staircase: s = staircase(rng); break;
    case ClassLabel::restroom: s = restroom(rng); break;
    case ClassLabel::shared_space: s = shared_space(rng); break;
  }
  finalize_extent(s);
  return s;
}

double cast_ray(const Scene& scene, Point2 origin, Point2 direction) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : scene.segments) {
    const Point2 e = sub(seg.b, seg.a);
    const double denom = cross(direction, e);
    if (std::abs(denom) < 1e-15) continue;
    const Point2 w = sub(seg.a, origin);
    const double t = cross(w, e) / denom;
    const double u = cross(w, direction) / denom;
    if (t > 0.0 && u >= 0.0 && u <= 1.0 && t < best) best = t;
  }
  return clip_range(best);
}

bool in_free_space(const Scene& scene, Point2 p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
  if (!scene.walkable.contains_strict(p)) return false;
  for (const auto& solid : scene.solids) {
    if (solid.inflated(kPoseClearance).contains_strict(p)) return false;
  }
  return std::all_of(scene.segments.begin(), scene.segments.end(),
                     [&](const Segment& s) { return point_segment_distance(p, s) > kPoseClearance; });
}

SensorPose sample_pose(const Scene& scene, Rng& rng) {
  const Box& w = scene.walkable;
  Point2 p{0.5 * (w.min_x + w.max_x), 0.5 * (w.min_y + w.max_y)};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Point2 candidate{rng.uniform(w.min_x, w.max_x), rng.uniform(w.min_y, w.max_y)};
    if (in_free_space(scene, candidate)) {
      p = candidate;
      break;
    }
  }
  if (!in_free_space(scene, p)) throw InvalidPoseError("no free-space pose found in scene");
  const auto axis = scene.axis_headings.empty()
                        ? 0.0
                        : scene.axis_headings[static_cast<std::size_t>(rng.below(scene.axis_headings.size()))];
  const double heading = axis + rng.uniform(-10.0, 10.0) * kDeg;
  const double height = static_cast<double>(rng.uniform_int(0, 3));
  return {p.x, p.y, heading, height};
}

Scan simulate_scan(const Scene& scene, const SensorPose& pose, const NoiseConfig& noise, Rng& rng) {
  if (!std::isfinite(pose.heading) || !in_free_space(scene, {pose.x, pose.y})) {
    throw InvalidPoseError("sensor pose (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) +
                           ") is not in the scene's free space");
  }
  std::vector<double> ranges(kBeamCount);
  for (std::size_t k = 0; k < kBeamCount; ++k) {
    const double theta = pose.heading + beam_angle(k);
    double r = cast_ray(scene, {pose.x, pose.y}, {std::cos(theta), std::sin(theta)});
    if (noise.enabled && noise.sigma > 0.0) r += noise.sigma * rng.normal();
    ranges[k] = r;
  }
  return validate_scan(ranges, pose.height_m);
}

Dataset generate_dataset(const SimConfig& config) {
  std::size_t total = 0;
  for (auto n : config.per_class) total += n;
  if (total == 0) throw DataError("simulation needs at least one row");
  if (config.noise.sigma < 0.0 || !std::isfinite(config.noise.sigma)) {
    throw DataError("noise sigma must be finite and non-negative");
  }
  const Rng root(config.seed);
  std::vector<LabeledScan> rows;
  rows.reserve(total);
  std::uint64_t row = 0;
  for (auto label : kAllLabels) {
    for (std::size_t i = 0; i < config.per_class[static_cast<std::size_t>(label_index(label))]; ++i, ++row) {
      Rng rng = root.split(row);
      const Scene scene = generate_scene(label, rng);
      const SensorPose pose = sample_pose(scene, rng);
      rows.push_back({simulate_scan(scene, pose, config.noise, rng), label});
    }
  }
  return Dataset(std::move(rows), "synthetic seed=" + std::to_string(config.seed));
}

}  // namespace clutter::sim
