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
#ifndef FFN_VOLUME_HPP_
#define FFN_VOLUME_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffn/geometry.hpp"

namespace ffn {

// Scalar intensities in [0,1], x-fastest linear order.
struct ImageVolume {
  Vec3i dims;
  std::vector<float> voxels;

  float at(Vec3i p) const { return voxels[linear_index(p, dims)]; }
  float& at(Vec3i p) { return voxels[linear_index(p, dims)]; }
};

// Non-negative object IDs per voxel; 0 is background/unassigned.
struct SegmentationVolume {
  Vec3i dims;
  std::vector<std::uint32_t> labels;

  std::uint32_t at(Vec3i p) const { return labels[linear_index(p, dims)]; }
  std::uint32_t& at(Vec3i p) { return labels[linear_index(p, dims)]; }
};

// Running per-object mask probabilities plus the per-voxel count of network
// writes (the update index consumed by the split-bias rule).
struct ProbabilityCanvas {
  Vec3i dims;
  std::vector<float> values;
  std::vector<std::uint32_t> update_count;

  static constexpr float kInitialValue = 0.05f;

  explicit ProbabilityCanvas(Vec3i d)
      : dims(d),
        values(voxel_count(d), kInitialValue),
        update_count(voxel_count(d), 0) {}

  float at(Vec3i p) const { return values[linear_index(p, dims)]; }
};

ImageVolume make_image(Vec3i dims, float fill = 0.0f);
SegmentationVolume make_segmentation(Vec3i dims, std::uint32_t fill = 0);

// Throws ValidationError if dims/payload disagree or intensities leave [0,1].
void validate_image(const ImageVolume& v);
void validate_segmentation(const SegmentationVolume& v);

ImageVolume crop(const ImageVolume& v, const BoxRegion& region);
SegmentationVolume crop(const SegmentationVolume& v, const BoxRegion& region);
// Canvas values over a region, in x-fastest order.
std::vector<float> crop_values(const ProbabilityCanvas& c, const BoxRegion& region);

// Applies one network write to every voxel of `region`. With
// `split_bias_enabled` the split-bias rule (see inference.hpp) decides whether
// the fresh prediction replaces the stored value; otherwise it is a plain
// overwrite, as during training. update_count is incremented either way.
void write_patch(ProbabilityCanvas& canvas, const BoxRegion& region,
                 std::span<const float> patch, bool split_bias_enabled);

// On-disk format: `path` holds a human-readable text header, `path + ".raw"`
// the little-endian payload in x-fastest order.
//
//   ffnvol 1
//   dims: 9 7 5
//   dtype: f32          (f32 | u32)
//   order: x-fastest
//   range: unit         (unit | labels)
void save_volume(const ImageVolume& v, const std::string& path);
void save_volume(const SegmentationVolume& v, const std::string& path);
// Canvas values persist as a plain f32 probability volume.
void save_canvas_values(const ProbabilityCanvas& c, const std::string& path);

ImageVolume load_image_volume(const std::string& path);
SegmentationVolume load_segmentation_volume(const std::string& path);

}  // namespace ffn

#endif  // FFN_VOLUME_HPP_
