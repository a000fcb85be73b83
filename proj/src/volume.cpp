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
#include "ffn/volume.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ffn/errors.hpp"
#include "ffn/inference.hpp"

static_assert(std::endian::native == std::endian::little,
              "volume payloads are little-endian raw");

namespace ffn {

ImageVolume make_image(Vec3i dims, float fill) {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw ValidationError("volume dims must be positive, got " + to_string(dims));
  return {dims, std::vector<float>(voxel_count(dims), fill)};
}

SegmentationVolume make_segmentation(Vec3i dims, std::uint32_t fill) {
  if (dims.x <= 0 || dims.y <= 0 || dims.z <= 0)
    throw ValidationError("volume dims must be positive, got " + to_string(dims));
  return {dims, std::vector<std::uint32_t>(voxel_count(dims), fill)};
}

void validate_image(const ImageVolume& v) {
  if (v.voxels.size() != voxel_count(v.dims))
    throw ValidationError("image voxel count does not equal x*y*z");
  for (float f : v.voxels) {
    if (!std::isfinite(f) || f < 0.0f || f > 1.0f)
      throw ValidationError("image intensity outside [0,1]");
  }
}

void validate_segmentation(const SegmentationVolume& v) {
  if (v.labels.size() != voxel_count(v.dims))
    throw ValidationError("segmentation label count does not equal x*y*z");
}

namespace {

template <typename T>
std::vector<T> crop_linear(const std::vector<T>& src, Vec3i dims,
                           const BoxRegion& region) {
  if (!region_inside(region, dims))
    throw ValidationError("crop region " + to_string(region.size) + " at (" +
                          std::to_string(region.corner.x) + "," +
                          std::to_string(region.corner.y) + "," +
                          std::to_string(region.corner.z) + ") outside volume " +
                          to_string(dims));
  std::vector<T> out(voxel_count(region.size));
  std::size_t d = 0;
  for (int z = 0; z < region.size.z; ++z)
    for (int y = 0; y < region.size.y; ++y) {
      const std::size_t s = linear_index(
          {region.corner.x, region.corner.y + y, region.corner.z + z}, dims);
      for (int x = 0; x < region.size.x; ++x) out[d++] = src[s + x];
    }
  return out;
}

}  // namespace

ImageVolume crop(const ImageVolume& v, const BoxRegion& region) {
  return {region.size, crop_linear(v.voxels, v.dims, region)};
}

SegmentationVolume crop(const SegmentationVolume& v, const BoxRegion& region) {
  return {region.size, crop_linear(v.labels, v.dims, region)};
}

std::vector<float> crop_values(const ProbabilityCanvas& c, const BoxRegion& region) {
  return crop_linear(c.values, c.dims, region);
}

void write_patch(ProbabilityCanvas& canvas, const BoxRegion& region,
                 std::span<const float> patch, bool split_bias_enabled) {
  if (!region_inside(region, canvas.dims))
    throw ValidationError("write_patch region outside canvas");
  if (patch.size() != voxel_count(region.size))
    throw ValidationError("write_patch patch size does not match region");
  for (float p : patch) {
    if (!(p >= 0.0f && p <= 1.0f))
      throw ValidationError("write_patch value outside [0,1]");
  }
  std::size_t s = 0;
  for (int z = 0; z < region.size.z; ++z)
    for (int y = 0; y < region.size.y; ++y) {
      std::size_t d = linear_index(
          {region.corner.x, region.corner.y + y, region.corner.z + z},
          canvas.dims);
      for (int x = 0; x < region.size.x; ++x, ++d, ++s) {
        const std::uint32_t t = canvas.update_count[d] + 1;
        canvas.values[d] = split_bias_enabled
                               ? apply_split_bias(canvas.values[d], patch[s], t)
                               : patch[s];
        canvas.update_count[d] = t;
      }
    }
}

namespace {

struct VolumeHeader {
  Vec3i dims;
  std::string dtype;
  std::string range;
};

void write_header(const std::string& path, const VolumeHeader& h) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "ffnvol 1\n";
  f << "dims: " << h.dims.x << " " << h.dims.y << " " << h.dims.z << "\n";
  f << "dtype: " << h.dtype << "\n";
  f << "order: x-fastest\n";
  f << "range: " << h.range << "\n";
  if (!f) throw IoError("failed writing header " + path);
}

VolumeHeader read_header(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  VolumeHeader h;
  std::string magic;
  int version = 0;
  if (!(f >> magic >> version) || magic != "ffnvol" || version != 1)
    throw IoError("malformed header in " + path + ": bad magic");
  std::string key;
  bool have_dims = false;
  while (f >> key) {
    if (key == "dims:") {
      if (!(f >> h.dims.x >> h.dims.y >> h.dims.z))
        throw IoError("malformed header in " + path + ": bad dims");
      have_dims = true;
    } else if (key == "dtype:") {
      f >> h.dtype;
    } else if (key == "order:") {
      std::string order;
      f >> order;
      if (order != "x-fastest")
        throw IoError("malformed header in " + path + ": unsupported order " + order);
    } else if (key == "range:") {
      f >> h.range;
    } else {
      throw IoError("malformed header in " + path + ": unknown key " + key);
    }
  }
  if (!have_dims || h.dtype.empty())
    throw IoError("malformed header in " + path + ": missing dims or dtype");
  if (h.dims.x <= 0 || h.dims.y <= 0 || h.dims.z <= 0)
    throw IoError("malformed header in " + path + ": non-positive dims");
  if (h.dtype != "f32" && h.dtype != "u32")
    throw IoError("unsupported element type '" + h.dtype + "' in " + path);
  return h;
}

void write_payload(const std::string& path, const void* data, std::size_t bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!f) throw IoError("failed writing payload " + path);
}

std::vector<char> read_payload(const std::string& path, std::size_t expected_bytes) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open payload " + path);
  const auto size = static_cast<std::size_t>(f.tellg());
  if (size != expected_bytes)
    throw IoError("dims/payload size mismatch in " + path + ": expected " +
                  std::to_string(expected_bytes) + " bytes, found " +
                  std::to_string(size));
  std::vector<char> buf(size);
  f.seekg(0);
  f.read(buf.data(), static_cast<std::streamsize>(size));
  if (!f) throw IoError("failed reading payload " + path);
  return buf;
}

}  // namespace

void save_volume(const ImageVolume& v, const std::string& path) {
  validate_image(v);
  write_header(path, {v.dims, "f32", "unit"});
  write_payload(path + ".raw", v.voxels.data(), v.voxels.size() * sizeof(float));
}

void save_volume(const SegmentationVolume& v, const std::string& path) {
  validate_segmentation(v);
  write_header(path, {v.dims, "u32", "labels"});
  write_payload(path + ".raw", v.labels.data(),
                v.labels.size() * sizeof(std::uint32_t));
}

void save_canvas_values(const ProbabilityCanvas& c, const std::string& path) {
  write_header(path, {c.dims, "f32", "unit"});
  write_payload(path + ".raw", c.values.data(), c.values.size() * sizeof(float));
}

ImageVolume load_image_volume(const std::string& path) {
  const VolumeHeader h = read_header(path);
  if (h.dtype != "f32")
    throw IoError("dtype mismatch in " + path + ": expected f32, found " + h.dtype);
  const std::size_t n = voxel_count(h.dims);
  const std::vector<char> buf = read_payload(path + ".raw", n * sizeof(float));
  ImageVolume v{h.dims, std::vector<float>(n)};
  std::memcpy(v.voxels.data(), buf.data(), buf.size());
  validate_image(v);
  return v;
}

SegmentationVolume load_segmentation_volume(const std::string& path) {
  const VolumeHeader h = read_header(path);
  if (h.dtype != "u32")
    throw IoError("dtype mismatch in " + path + ": expected u32, found " + h.dtype);
  const std::size_t n = voxel_count(h.dims);
  const std::vector<char> buf = read_payload(path + ".raw", n * sizeof(std::uint32_t));
  SegmentationVolume v{h.dims, std::vector<std::uint32_t>(n)};
  std::memcpy(v.labels.data(), buf.data(), buf.size());
  return v;
}

}  // namespace ffn
