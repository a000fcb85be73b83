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
#ifndef FFN_SYNTH_HPP_
#define FFN_SYNTH_HPP_

#include <cstdint>
#include <vector>

#include "ffn/metrics.hpp"
#include "ffn/volume.hpp"

namespace ffn {

// Procedural ground-truth worlds: tubes are dilated bounded-curvature random
// walks, blobs are ellipsoids. Objects stay pairwise disjoint with a dark gap
// and each carries its centerline (or diameter chord) as a skeleton.
struct SynthConfig {
  Vec3i dims{64, 64, 32};
  int min_objects = 3;
  int max_objects = 8;
  double tube_probability = 0.7;
  double tube_radius_min = 2.0;
  double tube_radius_max = 3.2;
  int tube_length_min = 40;   // centerline steps
  int tube_length_max = 90;
  double blob_radius_min = 3.0;
  double blob_radius_max = 6.0;
  double curvature = 0.25;       // per-step direction jitter of the walk
  double z_step_scale = 1.0;     // anisotropy knob for the walk
  float interior_level = 0.80f;
  float background_level = 0.50f;
  float boundary_darkness = 0.15f;  // intensity of the dark shell
  int boundary_width = 1;           // shell thickness in voxels (Chebyshev)
  float noise_amplitude = 0.03f;
  int min_gap = 1;             // voxel gap kept between distinct labels
  int placement_retries = 60;
  std::uint64_t seed = 1;
};

struct World {
  ImageVolume image;
  SegmentationVolume labels;
  std::vector<Skeleton> skeletons;
};

// Deterministic under a fixed config. Throws ValidationError when an object
// cannot be placed within the retry budget.
World generate_world(const SynthConfig& config);

// Stamps a ball of `radius` at every node in its skeleton's ID; overlap
// between different skeletons is a precondition violation.
SegmentationVolume rasterize_gt_labels(std::span<const Skeleton> skeletons,
                                       Vec3i dims, int radius);

}  // namespace ffn

#endif  // FFN_SYNTH_HPP_
