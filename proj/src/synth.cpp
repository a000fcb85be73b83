/* Copyright 2026 The Floodfill Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "ffn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

struct Vec3d {
  double x = 0, y = 0, z = 0;
};

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double uniform_in(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(rng);
}

Vec3d random_direction(std::mt19937_64& rng) {
  for (;;) {
    Vec3d d{2 * unit_uniform(rng) - 1, 2 * unit_uniform(rng) - 1,
            2 * unit_uniform(rng) - 1};
    const double n = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
    if (n > 0.1 && n <= 1.0) return {d.x / n, d.y / n, d.z / n};
  }
}

void validate_config(const SynthConfig& c) {
  if (c.dims.x <= 0 || c.dims.y <= 0 || c.dims.z <= 0)
    throw ValidationError("synth dims must be positive");
  if (c.min_objects < 0 || c.max_objects < c.min_objects)
    throw ValidationError("synth object count range invalid");
  if (c.tube_probability < 0.0 || c.tube_probability > 1.0)
    throw ValidationError("tube_probability outside [0,1]");
  if (c.tube_radius_min <= 0 || c.tube_radius_max < c.tube_radius_min ||
      c.blob_radius_min <= 0 || c.blob_radius_max < c.blob_radius_min)
    throw ValidationError("synth radius ranges invalid");
  if (c.tube_length_min < 1 || c.tube_length_max < c.tube_length_min)
    throw ValidationError("tube length range invalid");
  if (c.min_gap < 0 || c.boundary_width < 0 || c.placement_retries < 1)
    throw ValidationError("synth gap/shell/retry settings invalid");
  if (c.noise_amplitude < 0 || c.interior_level < 0 || c.interior_level > 1 ||
      c.background_level < 0 || c.background_level > 1 ||
      c.boundary_darkness < 0 || c.boundary_darkness > 1)
    throw ValidationError("synth intensity settings invalid");
  const double max_r = std::max(c.tube_radius_max, c.blob_radius_max);
  const int need = 2 * (static_cast<int>(std::ceil(max_r)) + c.min_gap + 1);
  if (c.max_objects > 0 &&
      (c.dims.x <= need || c.dims.y <= need || c.dims.z <= need))
    throw ValidationError("synth dims too small for the configured radii");
}

// Voxels of the ball |p - center| <= r, clipped to the volume.
void ball_voxels(Vec3d center, double r, Vec3i dims,
                 std::vector<std::size_t>& out) {
  const int x0 = std::max(0, static_cast<int>(std::floor(center.x - r)));
  const int x1 = std::min(dims.x - 1, static_cast<int>(std::ceil(center.x + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(center.y - r)));
  const int y1 = std::min(dims.y - 1, static_cast<int>(std::ceil(center.y + r)));
  const int z0 = std::max(0, static_cast<int>(std::floor(center.z - r)));
  const int z1 = std::min(dims.z - 1, static_cast<int>(std::ceil(center.z + r)));
  for (int z = z0; z <= z1; ++z)
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double dx = x - center.x, dy = y - center.y, dz = z - center.z;
        if (dx * dx + dy * dy + dz * dz <= r * r)
          out.push_back(linear_index({x, y, z}, dims));
      }
}

struct Candidate {
  std::vector<std::size_t> voxels;  // sorted, unique
  Skeleton skeleton;
};

Candidate make_tube(const SynthConfig& c, std::mt19937_64& rng) {
  const double r = uniform_in(rng, c.tube_radius_min, c.tube_radius_max);
  const int steps = c.tube_length_min +
                    static_cast<int>(rng() % static_cast<std::uint64_t>(
                                         c.tube_length_max - c.tube_length_min + 1));
  const double lo[3] = {r, r, r};
  const double hi[3] = {c.dims.x - 1 - r, c.dims.y - 1 - r, c.dims.z - 1 - r};

  Vec3d pos{uniform_in(rng, lo[0], hi[0]), uniform_in(rng, lo[1], hi[1]),
            uniform_in(rng, lo[2], hi[2])};
  Vec3d dir = random_direction(rng);

  Candidate cand;
  auto add_node = [&cand](Vec3d p) {
    const Vec3i v{static_cast<int>(std::lround(p.x)),
                  static_cast<int>(std::lround(p.y)),
                  static_cast<int>(std::lround(p.z))};
    if (!cand.skeleton.nodes.empty() && cand.skeleton.nodes.back().pos == v)
      return;
    const int id = static_cast<int>(cand.skeleton.nodes.size()) + 1;
    cand.skeleton.nodes.push_back({id, v});
    if (id > 1) cand.skeleton.edges.emplace_back(id - 1, id);
  };

  for (int step = 0; step < steps; ++step) {
    ball_voxels(pos, r, c.dims, cand.voxels);
    add_node(pos);
    // Bounded-curvature jitter, then one unit step with the z-anisotropy knob.
    const Vec3d jitter = random_direction(rng);
    dir.x += c.curvature * jitter.x;
    dir.y += c.curvature * jitter.y;
    dir.z += c.curvature * jitter.z;
    const double n = std::sqrt(dir.x * dir.x + dir.y * dir.y + dir.z * dir.z);
    dir = {dir.x / n, dir.y / n, dir.z / n};
    pos.x += dir.x;
    pos.y += dir.y;
    pos.z += dir.z * c.z_step_scale;
    // Reflect at the walk box so the dilated tube stays inside the volume.
    double p[3] = {pos.x, pos.y, pos.z};
    double d[3] = {dir.x, dir.y, dir.z};
    for (int a = 0; a < 3; ++a) {
      if (p[a] < lo[a]) {
        p[a] = 2 * lo[a] - p[a];
        d[a] = -d[a];
      } else if (p[a] > hi[a]) {
        p[a] = 2 * hi[a] - p[a];
        d[a] = -d[a];
      }
    }
    pos = {p[0], p[1], p[2]};
    dir = {d[0], d[1], d[2]};
  }

  std::sort(cand.voxels.begin(), cand.voxels.end());
  cand.voxels.erase(std::unique(cand.voxels.begin(), cand.voxels.end()),
                    cand.voxels.end());
  return cand;
}

Candidate make_blob(const SynthConfig& c, std::mt19937_64& rng) {
  const double rx = uniform_in(rng, c.blob_radius_min, c.blob_radius_max);
  const double ry = uniform_in(rng, c.blob_radius_min, c.blob_radius_max);
  const double rz = uniform_in(rng, c.blob_radius_min, c.blob_radius_max);
  const Vec3d center{uniform_in(rng, rx, c.dims.x - 1 - rx),
                     uniform_in(rng, ry, c.dims.y - 1 - ry),
                     uniform_in(rng, rz, c.dims.z - 1 - rz)};

  Candidate cand;
  const int x0 = static_cast<int>(std::floor(center.x - rx));
  const int x1 = static_cast<int>(std::ceil(center.x + rx));
  const int y0 = static_cast<int>(std::floor(center.y - ry));
  const int y1 = static_cast<int>(std::ceil(center.y + ry));
  const int z0 = static_cast<int>(std::floor(center.z - rz));
  const int z1 = static_cast<int>(std::ceil(center.z + rz));
  for (int z = std::max(0, z0); z <= std::min(c.dims.z - 1, z1); ++z)
    for (int y = std::max(0, y0); y <= std::min(c.dims.y - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(c.dims.x - 1, x1); ++x) {
        const double ex = (x - center.x) / rx, ey = (y - center.y) / ry,
                     ez = (z - center.z) / rz;
        if (ex * ex + ey * ey + ez * ez <= 1.0)
          cand.voxels.push_back(linear_index({x, y, z}, c.dims));
      }

  // Diameter chord along the longest axis as the two-node skeleton.
  int axis = 0;
  double r_axis = rx;
  if (ry > r_axis) { axis = 1; r_axis = ry; }
  if (rz > r_axis) { axis = 2; r_axis = rz; }
  const int offset = std::max(0, static_cast<int>(r_axis) - 1);
  Vec3i a{static_cast<int>(std::lround(center.x)),
          static_cast<int>(std::lround(center.y)),
          static_cast<int>(std::lround(center.z))};
  Vec3i b = a;
  a[axis] -= offset;
  b[axis] += offset;
  cand.skeleton.nodes.push_back({1, a});
  cand.skeleton.nodes.push_back({2, b});
  cand.skeleton.edges.emplace_back(1, 2);
  return cand;
}

}  // namespace

World generate_world(const SynthConfig& config) {
  validate_config(config);
  std::mt19937_64 rng(config.seed);

  World world;
  world.labels = make_segmentation(config.dims);
  world.image = make_image(config.dims, config.background_level);

  // Voxels within min_gap (Chebyshev) of any committed object are off limits.
  std::vector<char> forbidden(voxel_count(config.dims), 0);
  auto forbid_around = [&](std::size_t idx) {
    const int x = static_cast<int>(idx % config.dims.x);
    const int y = static_cast<int>((idx / config.dims.x) % config.dims.y);
    const int z = static_cast<int>(idx / (static_cast<std::size_t>(config.dims.x) *
                                          config.dims.y));
    for (int dz = -config.min_gap; dz <= config.min_gap; ++dz)
      for (int dy = -config.min_gap; dy <= config.min_gap; ++dy)
        for (int dx = -config.min_gap; dx <= config.min_gap; ++dx) {
          const Vec3i p{x + dx, y + dy, z + dz};
          if (inside(p, config.dims)) forbidden[linear_index(p, config.dims)] = 1;
        }
  };

  const int count =
      config.min_objects +
      (config.max_objects > config.min_objects
           ? static_cast<int>(rng() % static_cast<std::uint64_t>(
                                  config.max_objects - config.min_objects + 1))
           : 0);

  for (int obj = 0; obj < count; ++obj) {
    bool placed = false;
    for (int attempt = 0; attempt < config.placement_retries; ++attempt) {
      Candidate cand = (unit_uniform(rng) < config.tube_probability)
                           ? make_tube(config, rng)
                           : make_blob(config, rng);
      const bool blocked =
          std::any_of(cand.voxels.begin(), cand.voxels.end(),
                      [&](std::size_t v) { return forbidden[v] != 0; });
      if (blocked) continue;

      const auto label = static_cast<std::uint32_t>(obj + 1);
      for (std::size_t v : cand.voxels) {
        world.labels.labels[v] = label;
        forbid_around(v);
      }
      cand.skeleton.id = obj + 1;
      world.skeletons.push_back(std::move(cand.skeleton));
      placed = true;
      break;
    }
    if (!placed)
      throw ValidationError("could not place object " + std::to_string(obj + 1) +
                            " after " + std::to_string(config.placement_retries) +
                            " retries (config too dense)");
  }

  // Intensities: bright interior, dark shell around every object, noise.
  for (int z = 0; z < config.dims.z; ++z)
    for (int y = 0; y < config.dims.y; ++y)
      for (int x = 0; x < config.dims.x; ++x) {
        const std::size_t idx = linear_index({x, y, z}, config.dims);
        if (world.labels.labels[idx] != 0) {
          world.image.voxels[idx] = config.interior_level;
          continue;
        }
        bool shell = false;
        for (int dz = -config.boundary_width; dz <= config.boundary_width && !shell; ++dz)
          for (int dy = -config.boundary_width; dy <= config.boundary_width && !shell; ++dy)
            for (int dx = -config.boundary_width; dx <= config.boundary_width; ++dx) {
              const Vec3i p{x + dx, y + dy, z + dz};
              if (inside(p, config.dims) &&
                  world.labels.labels[linear_index(p, config.dims)] != 0) {
                shell = true;
                break;
              }
            }
        if (shell) world.image.voxels[idx] = config.boundary_darkness;
      }

  for (auto& v : world.image.voxels) {
    v += config.noise_amplitude *
         static_cast<float>(2.0 * unit_uniform(rng) - 1.0);
    v = std::clamp(v, 0.0f, 1.0f);
  }
  return world;
}

SegmentationVolume rasterize_gt_labels(std::span<const Skeleton> skeletons,
                                       Vec3i dims, int radius) {
  if (radius < 0) throw ValidationError("rasterize_gt_labels: negative radius");
  SegmentationVolume vol = make_segmentation(dims);
  std::vector<std::size_t> ball;
  for (const Skeleton& s : skeletons) {
    if (s.id <= 0)
      throw ValidationError("rasterize_gt_labels: skeleton id must be positive");
    const auto label = static_cast<std::uint32_t>(s.id);
    for (const SkeletonNode& n : s.nodes) {
      if (!inside(n.pos, dims))
        throw ValidationError("rasterize_gt_labels: node outside dims");
      ball.clear();
      ball_voxels({static_cast<double>(n.pos.x), static_cast<double>(n.pos.y),
                   static_cast<double>(n.pos.z)},
                  static_cast<double>(radius), dims, ball);
      for (std::size_t v : ball) {
        if (vol.labels[v] != 0 && vol.labels[v] != label)
          throw ValidationError("rasterize_gt_labels: skeletons " +
                                std::to_string(vol.labels[v]) + " and " +
                                std::to_string(s.id) + " overlap");
        vol.labels[v] = label;
      }
    }
  }
  return vol;
}

}  // namespace ffn
