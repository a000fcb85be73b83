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
#ifndef FFN_SEEDS_HPP_
#define FFN_SEEDS_HPP_

#include <vector>

#include "ffn/volume.hpp"

namespace ffn {

struct SeedConfig {
  // Boundary mask keeps voxels with gradient >= this fraction of the maximum.
  double gradient_threshold_frac = 0.1;
  int nms_radius = 2;
  // Per-axis voxel spacing of the distance transform (anisotropy).
  double spacing_x = 1.0, spacing_y = 1.0, spacing_z = 1.0;
  // Candidates darker than this are dropped (< 0 disables the filter).
  double min_seed_intensity = -1.0;
};

struct Seed {
  Vec3i pos;
  double score = 0.0;  // distance-transform value at pos
};

// 3d Sobel gradient magnitude, border-replicated.
std::vector<float> sobel_gradient_magnitude(const ImageVolume& image);

// Exact euclidean distance transform (squared) from the `true` voxels of
// `mask`, separable lower-envelope passes per axis.
std::vector<double> distance_transform_sq(const std::vector<std::uint8_t>& mask,
                                          Vec3i dims, double sx, double sy,
                                          double sz);

// Sobel -> boundary threshold -> distance transform -> 26-neighborhood local
// maxima -> non-max suppression, ordered by score descending. A constant (or
// otherwise degenerate) image falls back to a single seed at the center.
std::vector<Seed> seed_points(const ImageVolume& image, const SeedConfig& config);

}  // namespace ffn

#endif  // FFN_SEEDS_HPP_
