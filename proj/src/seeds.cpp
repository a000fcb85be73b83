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
#include "ffn/seeds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One replicated-border pass of a 3-tap kernel along `axis`.
std::vector<float> conv1d_axis(const std::vector<float>& in, Vec3i dims,
                               int axis, std::array<float, 3> k) {
  std::vector<float> out(in.size());
  const int n[3] = {dims.x, dims.y, dims.z};
  for (int z = 0; z < dims.z; ++z)
    for (int y = 0; y < dims.y; ++y)
      for (int x = 0; x < dims.x; ++x) {
        float acc = 0.0f;
        for (int t = -1; t <= 1; ++t) {
          Vec3i p{x, y, z};
          p[axis] = std::clamp(p[axis] + t, 0, n[axis] - 1);
          acc += k[static_cast<std::size_t>(t + 1)] * in[linear_index(p, dims)];
        }
        out[linear_index({x, y, z}, dims)] = acc;
      }
  return out;
}

// Squared-distance transform of one row sampled at positions i*spacing.
// Standard lower-envelope-of-parabolas scan; all-infinite rows pass through.
void dt1d(const std::vector<double>& f, double spacing, std::vector<int>& v,
          std::vector<double>& z, std::vector<double>& out) {
  const int n = static_cast<int>(f.size());
  v.assign(f.size() + 1, 0);
  z.assign(f.size() + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[static_cast<std::size_t>(q)] == kInf) continue;
    const double xq = q * spacing;
    const double fq = f[static_cast<std::size_t>(q)];
    double s = 0.0;
    while (k >= 0) {
      const double xv = v[static_cast<std::size_t>(k)] * spacing;
      s = (fq + xq * xq - (f[static_cast<std::size_t>(v[static_cast<std::size_t>(k)])] + xv * xv)) /
          (2.0 * (xq - xv));
      if (s > z[static_cast<std::size_t>(k)]) break;
      --k;
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = (k == 0) ? -kInf : s;
    z[static_cast<std::size_t>(k) + 1] = kInf;
  }
  if (k < 0) {
    out.assign(f.size(), kInf);
    return;
  }
  out.resize(f.size());
  int j = 0;
  for (int q = 0; q < n; ++q) {
    const double xq = q * spacing;
    while (z[static_cast<std::size_t>(j) + 1] < xq) ++j;
    const double xv = v[static_cast<std::size_t>(j)] * spacing;
    out[static_cast<std::size_t>(q)] =
        (xq - xv) * (xq - xv) + f[static_cast<std::size_t>(v[static_cast<std::size_t>(j)])];
  }
}

void dt_axis(std::vector<double>& field, Vec3i dims, int axis, double spacing) {
  const int n[3] = {dims.x, dims.y, dims.z};
  const int len = n[axis];
  std::vector<double> row(static_cast<std::size_t>(len));
  std::vector<double> out;
  std::vector<int> v;
  std::vector<double> z;
  int u_axis = (axis + 1) % 3, w_axis = (axis + 2) % 3;
  for (int w = 0; w < n[w_axis]; ++w)
    for (int u = 0; u < n[u_axis]; ++u) {
      Vec3i p{0, 0, 0};
      p[u_axis] = u;
      p[w_axis] = w;
      for (int i = 0; i < len; ++i) {
        p[axis] = i;
        row[static_cast<std::size_t>(i)] = field[linear_index(p, dims)];
      }
      dt1d(row, spacing, v, z, out);
      for (int i = 0; i < len; ++i) {
        p[axis] = i;
        field[linear_index(p, dims)] = out[static_cast<std::size_t>(i)];
      }
    }
}

}  // namespace

std::vector<float> sobel_gradient_magnitude(const ImageVolume& image) {
  if (image.voxels.size() != voxel_count(image.dims) || image.voxels.empty())
    throw ValidationError("sobel: empty or inconsistent image");
  const std::array<float, 3> smooth{1.0f, 2.0f, 1.0f};
  const std::array<float, 3> deriv{-1.0f, 0.0f, 1.0f};
  std::vector<float> mag(image.voxels.size(), 0.0f);
  for (int grad_axis = 0; grad_axis < 3; ++grad_axis) {
    std::vector<float> g = image.voxels;
    for (int axis = 0; axis < 3; ++axis)
      g = conv1d_axis(g, image.dims, axis, axis == grad_axis ? deriv : smooth);
    for (std::size_t i = 0; i < mag.size(); ++i) mag[i] += g[i] * g[i];
  }
  for (float& m : mag) m = std::sqrt(m);
  return mag;
}

std::vector<double> distance_transform_sq(const std::vector<std::uint8_t>& mask,
                                          Vec3i dims, double sx, double sy,
                                          double sz) {
  if (mask.size() != voxel_count(dims) || mask.empty())
    throw ValidationError("distance transform: mask does not match dims");
  if (sx <= 0 || sy <= 0 || sz <= 0)
    throw ValidationError("distance transform: spacings must be positive");
  std::vector<double> field(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    field[i] = mask[i] ? 0.0 : kInf;
  dt_axis(field, dims, 0, sx);
  dt_axis(field, dims, 1, sy);
  dt_axis(field, dims, 2, sz);
  return field;
}

std::vector<Seed> seed_points(const ImageVolume& image, const SeedConfig& config) {
  if (image.voxels.empty() || image.voxels.size() != voxel_count(image.dims))
    throw ValidationError("seed_points: empty or inconsistent image");
  if (config.gradient_threshold_frac <= 0 || config.gradient_threshold_frac > 1)
    throw ValidationError("seed_points: gradient_threshold_frac outside (0,1]");
  if (config.nms_radius < 0)
    throw ValidationError("seed_points: negative nms radius");

  const std::vector<float> grad = sobel_gradient_magnitude(image);
  const float gmax = *std::max_element(grad.begin(), grad.end());
  if (gmax <= 0.0f) {
    // Degenerate (constant) image: a single seed at the volume center.
    return {Seed{{image.dims.x / 2, image.dims.y / 2, image.dims.z / 2}, 0.0}};
  }

  std::vector<std::uint8_t> boundary(grad.size());
  const float cut = static_cast<float>(config.gradient_threshold_frac) * gmax;
  for (std::size_t i = 0; i < grad.size(); ++i) boundary[i] = grad[i] >= cut;
  const std::vector<double> dist_sq = distance_transform_sq(
      boundary, image.dims, config.spacing_x, config.spacing_y, config.spacing_z);

  // 26-neighborhood local maxima of the distance transform (plateaus count).
  struct Candidate {
    double score_sq;
    std::size_t index;
    Vec3i pos;
  };
  std::vector<Candidate> candidates;
  for (int z = 0; z < image.dims.z; ++z)
    for (int y = 0; y < image.dims.y; ++y)
      for (int x = 0; x < image.dims.x; ++x) {
        const std::size_t idx = linear_index({x, y, z}, image.dims);
        const double d = dist_sq[idx];
        if (d <= 0.0) continue;
        if (config.min_seed_intensity >= 0.0 &&
            image.voxels[idx] < static_cast<float>(config.min_seed_intensity))
          continue;
        bool is_max = true;
        for (int dz = -1; dz <= 1 && is_max; ++dz)
          for (int dy = -1; dy <= 1 && is_max; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const Vec3i p{x + dx, y + dy, z + dz};
              if (!inside(p, image.dims)) continue;
              if (dist_sq[linear_index(p, image.dims)] > d) {
                is_max = false;
                break;
              }
            }
        if (is_max) candidates.push_back({d, idx, {x, y, z}});
      }

  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.score_sq != b.score_sq) return a.score_sq > b.score_sq;
              return a.index < b.index;
            });

  // Greedy non-max suppression within a Chebyshev radius.
  std::vector<Seed> seeds;
  for (const Candidate& c : candidates) {
    const bool shadowed =
        std::any_of(seeds.begin(), seeds.end(), [&](const Seed& s) {
          return std::abs(s.pos.x - c.pos.x) <= config.nms_radius &&
                 std::abs(s.pos.y - c.pos.y) <= config.nms_radius &&
                 std::abs(s.pos.z - c.pos.z) <= config.nms_radius;
        });
    if (!shadowed) seeds.push_back({c.pos, std::sqrt(c.score_sq)});
  }
  return seeds;
}

}  // namespace ffn
