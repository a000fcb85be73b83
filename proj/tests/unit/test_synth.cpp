#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "ffn/errors.hpp"
#include "ffn/metrics.hpp"
#include "ffn/synth.hpp"

using namespace ffn;

namespace {

SynthConfig small_config(std::uint64_t seed) {
  SynthConfig c;
  c.dims = {48, 48, 28};
  c.min_objects = 3;
  c.max_objects = 5;
  c.tube_length_min = 20;
  c.tube_length_max = 40;
  c.seed = seed;
  return c;
}

bool labels_26_separated(const SegmentationVolume& vol) {
  for (int z = 0; z < vol.dims.z; ++z)
    for (int y = 0; y < vol.dims.y; ++y)
      for (int x = 0; x < vol.dims.x; ++x) {
        const std::uint32_t own = vol.labels[linear_index({x, y, z}, vol.dims)];
        if (own == 0) continue;
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const Vec3i p{x + dx, y + dy, z + dz};
              if (!inside(p, vol.dims)) continue;
              const std::uint32_t other = vol.labels[linear_index(p, vol.dims)];
              if (other != 0 && other != own) return false;
            }
      }
  return true;
}

}  // namespace

TEST_CASE("zero objects yields noise-only background") {
  SynthConfig c = small_config(7);
  c.min_objects = 0;
  c.max_objects = 0;
  const World w = generate_world(c);
  CHECK(w.skeletons.empty());
  CHECK(std::all_of(w.labels.labels.begin(), w.labels.labels.end(),
                    [](std::uint32_t v) { return v == 0; }));
  for (float v : w.image.voxels) {
    CHECK(v >= c.background_level - c.noise_amplitude - 1e-6f);
    CHECK(v <= c.background_level + c.noise_amplitude + 1e-6f);
  }
}

TEST_CASE("same seed reproduces the world bit for bit") {
  const SynthConfig c = small_config(1234);
  const World a = generate_world(c);
  const World b = generate_world(c);
  const World d = generate_world(c);
  CHECK(a.image.voxels == b.image.voxels);
  CHECK(a.labels.labels == b.labels.labels);
  CHECK(b.image.voxels == d.image.voxels);
  REQUIRE(a.skeletons.size() == b.skeletons.size());
  for (std::size_t i = 0; i < a.skeletons.size(); ++i) {
    CHECK(a.skeletons[i].edges == b.skeletons[i].edges);
    REQUIRE(a.skeletons[i].nodes.size() == b.skeletons[i].nodes.size());
    for (std::size_t n = 0; n < a.skeletons[i].nodes.size(); ++n)
      CHECK(a.skeletons[i].nodes[n].pos == b.skeletons[i].nodes[n].pos);
  }

  SynthConfig other = c;
  other.seed = 4321;
  CHECK(generate_world(other).image.voxels != a.image.voxels);
}

TEST_CASE("worlds satisfy the generator post-conditions") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
    const World w = generate_world(small_config(seed));

    // Object count within range, label ids dense from 1.
    REQUIRE(w.skeletons.size() >= 3);
    REQUIRE(w.skeletons.size() <= 5);
    std::set<std::uint32_t> present;
    for (std::uint32_t v : w.labels.labels)
      if (v != 0) present.insert(v);
    CHECK(present.size() == w.skeletons.size());
    for (std::size_t i = 0; i < w.skeletons.size(); ++i) {
      CHECK(w.skeletons[i].id == static_cast<int>(i) + 1);
      CHECK(present.count(static_cast<std::uint32_t>(i + 1)) == 1);
    }

    // Dark gap: voxels of distinct labels are never 26-adjacent.
    CHECK(labels_26_separated(w.labels));

    // Every skeleton is a chain whose nodes sit on its own label.
    for (const Skeleton& s : w.skeletons) {
      CHECK(is_forest(s));
      REQUIRE(s.nodes.size() >= 2);
      CHECK(s.edges.size() == s.nodes.size() - 1);
      for (const SkeletonNode& n : s.nodes) {
        REQUIRE(inside(n.pos, w.labels.dims));
        CHECK(w.labels.labels[linear_index(n.pos, w.labels.dims)] ==
              static_cast<std::uint32_t>(s.id));
      }
    }

    // Intensities stay in range and match the three-level model.
    const SynthConfig c = small_config(seed);
    for (std::size_t i = 0; i < w.image.voxels.size(); ++i) {
      const float v = w.image.voxels[i];
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
      if (w.labels.labels[i] != 0)
        CHECK(std::abs(v - c.interior_level) <= c.noise_amplitude + 1e-6f);
    }

    // Evaluating the skeletons against their own label volume closes the loop.
    const EvaluationReport report = edge_accuracy(adjust_omitted(
        classify_edges(w.skeletons, w.labels), w.skeletons, w.labels));
    CHECK(report.edge_accuracy_pct == doctest::Approx(100.0));
    CHECK(report.merged_pct == doctest::Approx(0.0));
  }
}

TEST_CASE("background voxels touching an object are darkened") {
  const World w = generate_world(small_config(99));
  const SynthConfig c = small_config(99);
  int checked = 0;
  for (int z = 1; z + 1 < w.labels.dims.z; ++z)
    for (int y = 1; y + 1 < w.labels.dims.y; ++y)
      for (int x = 1; x + 1 < w.labels.dims.x; ++x) {
        const std::size_t idx = linear_index({x, y, z}, w.labels.dims);
        if (w.labels.labels[idx] != 0) continue;
        const bool touches =
            w.labels.labels[linear_index({x + 1, y, z}, w.labels.dims)] != 0 ||
            w.labels.labels[linear_index({x - 1, y, z}, w.labels.dims)] != 0;
        if (!touches) continue;
        CHECK(std::abs(w.image.voxels[idx] - c.boundary_darkness) <=
              c.noise_amplitude + 1e-6f);
        ++checked;
      }
  CHECK(checked > 50);
}

TEST_CASE("z step scale zero keeps tube centerlines in one plane") {
  SynthConfig c = small_config(5);
  c.tube_probability = 1.0;
  c.z_step_scale = 0.0;
  const World w = generate_world(c);
  for (const Skeleton& s : w.skeletons) {
    for (const SkeletonNode& n : s.nodes) CHECK(n.pos.z == s.nodes[0].pos.z);
  }
}

TEST_CASE("impossible placements raise a validation error") {
  SynthConfig c;
  c.dims = {16, 16, 16};
  c.min_objects = 60;
  c.max_objects = 60;
  c.tube_probability = 0.0;
  c.blob_radius_min = 3.0;
  c.blob_radius_max = 3.0;
  c.placement_retries = 8;
  CHECK_THROWS_AS(generate_world(c), ValidationError);

  SynthConfig tiny = small_config(1);
  tiny.dims = {8, 8, 8};
  CHECK_THROWS_AS(generate_world(tiny), ValidationError);

  SynthConfig bad = small_config(1);
  bad.max_objects = bad.min_objects - 1;
  CHECK_THROWS_AS(generate_world(bad), ValidationError);
}

TEST_CASE("rasterize stamps balls and rejects overlap") {
  Skeleton s;
  s.id = 3;
  s.nodes = {{1, {2, 2, 2}}, {2, {5, 2, 2}}};
  s.edges = {{1, 2}};

  SUBCASE("radius zero marks exactly the node voxels") {
    const auto vol = rasterize_gt_labels(std::span(&s, 1), {8, 8, 8}, 0);
    std::size_t marked = 0;
    for (std::uint32_t v : vol.labels) marked += (v != 0);
    CHECK(marked == 2);
    CHECK(vol.labels[linear_index({2, 2, 2}, vol.dims)] == 3u);
    CHECK(vol.labels[linear_index({5, 2, 2}, vol.dims)] == 3u);
  }

  SUBCASE("radius one stamps the six-neighbourhood") {
    Skeleton one;
    one.id = 1;
    one.nodes = {{1, {4, 4, 4}}};
    const auto vol = rasterize_gt_labels(std::span(&one, 1), {9, 9, 9}, 1);
    std::size_t marked = 0;
    for (std::uint32_t v : vol.labels) marked += (v != 0);
    CHECK(marked == 7);
    CHECK(vol.labels[linear_index({5, 4, 4}, vol.dims)] == 1u);
    CHECK(vol.labels[linear_index({4, 4, 3}, vol.dims)] == 1u);
    CHECK(vol.labels[linear_index({5, 5, 4}, vol.dims)] == 0u);
  }

  SUBCASE("nearby skeletons with a fat radius collide") {
    Skeleton t;
    t.id = 4;
    t.nodes = {{1, {6, 2, 2}}};
    const Skeleton both[] = {s, t};
    CHECK_THROWS_AS(rasterize_gt_labels(both, {12, 8, 8}, 2), ValidationError);
    CHECK_NOTHROW(rasterize_gt_labels(both, {12, 8, 8}, 0));
  }

  SUBCASE("nodes outside the volume are rejected") {
    Skeleton out = s;
    out.nodes.push_back({9, {7, 7, 9}});
    CHECK_THROWS_AS(rasterize_gt_labels(std::span(&out, 1), {8, 8, 8}, 0),
                    ValidationError);
  }

  SUBCASE("label zero is reserved") {
    Skeleton zero = s;
    zero.id = 0;
    CHECK_THROWS_AS(rasterize_gt_labels(std::span(&zero, 1), {8, 8, 8}, 0),
                    ValidationError);
  }
}

TEST_CASE("rasterizing generated skeletons reuses the generator ids") {
  const World w = generate_world(small_config(11));
  const auto vol = rasterize_gt_labels(w.skeletons, w.labels.dims, 1);
  for (const Skeleton& s : w.skeletons)
    for (const SkeletonNode& n : s.nodes)
      CHECK(vol.labels[linear_index(n.pos, vol.dims)] ==
            static_cast<std::uint32_t>(s.id));
}
