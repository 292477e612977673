#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "clutter/dataset_io.hpp"
#include "clutter/errors.hpp"
#include "clutter/simulator.hpp"
#include "oracles.hpp"

using namespace clutter;
using namespace oracles;
using namespace clutter::sim;

namespace {

Point2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

}  // namespace

TEST_CASE("analytic square room") {
  const Scene room = make_box_room(10.0, 10.0);
  CHECK(std::abs(cast_ray(room, {5, 5}, {1, 0}) - 5.0) <= 1e-9);
  CHECK(std::abs(cast_ray(room, {5, 5}, unit(std::numbers::pi / 4)) - 5.0 * std::sqrt(2.0)) <= 1e-9);
  CHECK(std::abs(cast_ray(room, {5, 5}, {0, -1}) - 5.0) <= 1e-9);
  const Scene huge = make_box_room(100.0, 100.0);
  CHECK(cast_ray(huge, {50, 50}, {1, 0}) == 30.0);
  Scene lone;
  lone.segments.push_back({{1, -1}, {1, 1}});
  CHECK(cast_ray(lone, {0, 0}, {-1, 0}) == 30.0);
  CHECK(std::abs(cast_ray(lone, {0, 0}, {1, 0}) - 1.0) <= 1e-12);
}

TEST_CASE("cast_ray agrees with the brute-force oracle on 1000 random triples") {
  Rng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    Scene scene;
    Point2 origin;
    if (t % 2 == 0) {
      Rng scene_rng = rng.split(static_cast<std::uint64_t>(t));
      scene = generate_scene(label_from_index(t % 4), scene_rng);
      const SensorPose pose = sample_pose(scene, scene_rng);
      origin = {pose.x, pose.y};
    } else {
      const int n = rng.uniform_int(1, 30);
      for (int i = 0; i < n; ++i) {
        scene.segments.push_back({{rng.uniform(-20, 20), rng.uniform(-20, 20)}, {rng.uniform(-20, 20), rng.uniform(-20, 20)}});
      }
      origin = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
    }
    const Point2 dir = unit(rng.uniform(-std::numbers::pi, std::numbers::pi));
    const double got = cast_ray(scene, origin, dir);
    const double want = brute_force_ray(scene.segments, origin, dir);
    worst = std::max(worst, std::abs(got - want));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("scene grammar invariants") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (auto label : kAllLabels) {
      Rng rng(seed * 31 + static_cast<std::uint64_t>(label_index(label)));
      const Scene s = generate_scene(label, rng);
      CHECK(s.label == label);
      CHECK(s.segments.size() >= 4);
      CHECK(s.extent.width() <= kMaxExtentSide);
      CHECK(s.extent.height() <= kMaxExtentSide);
      for (const auto& seg : s.segments) {
        for (Point2 p : {seg.a, seg.b}) {
          CHECK(p.x >= s.extent.min_x);
          CHECK(p.x <= s.extent.max_x);
          CHECK(p.y >= s.extent.min_y);
          CHECK(p.y <= s.extent.max_y);
        }
      }
    }
  }
}

TEST_CASE("corridors are elongated") {
  for (std::uint64_t seed = 7; seed < 107; ++seed) {
    Rng rng(seed);
    const Scene s = generate_scene(ClassLabel::corridor, rng);
    const double lo = std::min(s.extent.width(), s.extent.height());
    const double hi = std::max(s.extent.width(), s.extent.height());
    CHECK(hi / lo >= 3.0);
    CHECK(lo >= 1.5);
    CHECK(lo <= 3.0 + 0.3);  // door recesses add at most 0.15 per side
    CHECK(hi >= 10.0);
    CHECK(hi <= 40.0);
  }
}

TEST_CASE("restrooms have at least two stall partitions") {
  for (std::uint64_t seed = 7; seed < 107; ++seed) {
    Rng rng(seed);
    const Scene s = generate_scene(ClassLabel::restroom, rng);
    CHECK(s.extent.width() >= 3.0);
    CHECK(s.extent.width() <= 6.0);
    CHECK(s.extent.height() >= 3.0);
    CHECK(s.extent.height() <= 6.0);
    // Partitions: vertical segments leaving the y = 0 wall at an interior x.
    int partitions = 0;
    for (const auto& seg : s.segments) {
      if (seg.a.x == seg.b.x && seg.a.y == 0.0 && seg.b.y > 1.0 && seg.a.x > 0.0 && seg.a.x < s.extent.max_x) {
        ++partitions;
      }
    }
    CHECK(partitions >= 2);
  }
}

TEST_CASE("shared spaces are large and furnished") {
  for (std::uint64_t seed = 7; seed < 57; ++seed) {
    Rng rng(seed);
    const Scene s = generate_scene(ClassLabel::shared_space, rng);
    CHECK(s.extent.width() >= 8.0);
    CHECK(s.extent.width() <= 20.0);
    CHECK(s.extent.height() >= 8.0);
    CHECK(s.extent.height() <= 20.0);
    CHECK(s.solids.size() >= 5);
  }
}

TEST_CASE("staircase step edges are 0.3 m apart") {
  Rng rng(7);
  const Scene s = generate_scene(ClassLabel::staircase, rng);
  std::vector<double> xs;
  for (const auto& seg : s.segments) {
    if (seg.a.x == seg.b.x && seg.a.y == 0.0 && seg.a.x > 0.0 && seg.a.x < s.extent.max_x) xs.push_back(seg.a.x);
  }
  std::sort(xs.begin(), xs.end());
  REQUIRE(xs.size() >= 8);
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(xs[i] - xs[i - 1] == doctest::Approx(0.3).epsilon(1e-9));
}

TEST_CASE("scene generation is deterministic") {
  for (auto label : kAllLabels) {
    Rng a(99);
    Rng b(99);
    CHECK(generate_scene(label, a) == generate_scene(label, b));
  }
}

TEST_CASE("poses lie in free space") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const Scene s = generate_scene(label_from_index(static_cast<long long>(seed % 4)), rng);
    const SensorPose p = sample_pose(s, rng);
    CHECK(in_free_space(s, {p.x, p.y}));
    CHECK(p.height_m >= 0.0);
    CHECK(p.height_m <= 3.0);
    CHECK(p.height_m == std::floor(p.height_m));
  }
}

TEST_CASE("simulated scans") {
  const Scene room = make_box_room(10.0, 10.0);
  const SensorPose pose{5.0, 5.0, 0.0, 1.0};
  Rng rng(1);
  const Scan clean = simulate_scan(room, pose, {false, 0.01}, rng);
  // Beam 135 looks along the heading, beams 45 and 225 are perpendicular.
  CHECK(std::abs(clean[135] - 5.0) <= 1e-9);
  CHECK(std::abs(clean[45] - 5.0) <= 1e-9);
  CHECK(std::abs(clean[225] - 5.0) <= 1e-9);
  CHECK(clean.height_m() == 1.0);
  for (std::size_t k = 0; k < kBeamCount; ++k) {
    const double theta = pose.heading + beam_angle(k);
    CHECK(clean[k] == cast_ray(room, {pose.x, pose.y}, unit(theta)));
  }

  Rng noisy_rng(5);
  const Scan noisy = simulate_scan(room, pose, {true, 0.01}, noisy_rng);
  double mad = 0.0;
  for (std::size_t k = 0; k < kBeamCount; ++k) mad += std::abs(noisy[k] - clean[k]);
  mad /= static_cast<double>(kBeamCount);
  CHECK(mad >= 0.004);
  CHECK(mad <= 0.012);

  Rng r2(1);
  CHECK_THROWS_AS(simulate_scan(room, {-1.0, 5.0, 0.0, 0.0}, {}, r2), InvalidPoseError);
  CHECK_THROWS_AS(simulate_scan(room, {5.0, 5.0, std::nan(""), 0.0}, {}, r2), InvalidPoseError);
}

TEST_CASE("generate_dataset counts and determinism") {
  SimConfig one;
  one.per_class = {1, 1, 1, 1};
  one.seed = 42;
  const Dataset d = generate_dataset(one);
  REQUIRE(d.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(label_index(d[i].label) == static_cast<int>(i));
  CHECK(write_dataset_text(generate_dataset(one)) == write_dataset_text(d));

  SimConfig big;
  big.per_class = {100, 100, 100, 100};
  big.seed = 42;
  const DatasetSummary s = summarize(generate_dataset(big));
  for (auto c : s.counts) CHECK(c == 100);

  SimConfig other = one;
  other.seed = 43;
  CHECK(write_dataset_text(generate_dataset(other)) != write_dataset_text(d));

  SimConfig none;
  CHECK_THROWS_AS(generate_dataset(none), DataError);
  SimConfig bad = one;
  bad.noise.sigma = -1.0;
  CHECK_THROWS_AS(generate_dataset(bad), DataError);
}

TEST_CASE("rows do not depend on the other classes' counts") {
  // Row r draws from substream r, so growing a later class leaves earlier rows unchanged.
  SimConfig a;
  a.per_class = {3, 0, 0, 0};
  SimConfig b;
  b.per_class = {3, 2, 0, 5};
  const Dataset da = generate_dataset(a);
  const Dataset db = generate_dataset(b);
  for (std::size_t i = 0; i < 3; ++i) CHECK(da[i] == db[i]);
}
