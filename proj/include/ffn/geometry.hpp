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
#ifndef FFN_GEOMETRY_HPP_
#define FFN_GEOMETRY_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>

namespace ffn {

struct Vec3i {
  int x = 0;
  int y = 0;
  int z = 0;

  friend bool operator==(const Vec3i&, const Vec3i&) = default;

  int& operator[](int axis) { return axis == 0 ? x : axis == 1 ? y : z; }
  int operator[](int axis) const { return axis == 0 ? x : axis == 1 ? y : z; }
};

inline Vec3i operator+(Vec3i a, Vec3i b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3i operator-(Vec3i a, Vec3i b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3i operator*(Vec3i a, int s) { return {a.x * s, a.y * s, a.z * s}; }

inline std::size_t voxel_count(Vec3i dims) {
  return static_cast<std::size_t>(dims.x) * dims.y * dims.z;
}

// Linear voxel order: x fastest, then y, then z.
inline std::size_t linear_index(Vec3i p, Vec3i dims) {
  return (static_cast<std::size_t>(p.z) * dims.y + p.y) * dims.x + p.x;
}

inline Vec3i clamp_vec(Vec3i p, Vec3i lo, Vec3i hi) {
  return {std::clamp(p.x, lo.x, hi.x), std::clamp(p.y, lo.y, hi.y),
          std::clamp(p.z, lo.z, hi.z)};
}

inline bool inside(Vec3i p, Vec3i dims) {
  return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < dims.x && p.y < dims.y &&
         p.z < dims.z;
}

inline std::string to_string(Vec3i v) {
  return std::to_string(v.x) + "x" + std::to_string(v.y) + "x" + std::to_string(v.z);
}

// Axis-aligned box given by its minimum corner and extent.
struct BoxRegion {
  Vec3i corner;
  Vec3i size;

  friend bool operator==(const BoxRegion&, const BoxRegion&) = default;
};

inline bool region_inside(const BoxRegion& r, Vec3i dims) {
  if (r.size.x <= 0 || r.size.y <= 0 || r.size.z <= 0) return false;
  if (r.corner.x < 0 || r.corner.y < 0 || r.corner.z < 0) return false;
  return r.corner.x + r.size.x <= dims.x && r.corner.y + r.size.y <= dims.y &&
         r.corner.z + r.size.z <= dims.z;
}

// Box of extent `size` centered on `center`; size components must be odd.
inline BoxRegion centered_region(Vec3i center, Vec3i size) {
  return {{center.x - size.x / 2, center.y - size.y / 2, center.z - size.z / 2}, size};
}

}  // namespace ffn

#endif  // FFN_GEOMETRY_HPP_
