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
#ifndef FFN_TENSOR_HPP_
#define FFN_TENSOR_HPP_

#include <cstddef>
#include <vector>

#include "ffn/geometry.hpp"

namespace ffn {

// Dense activation tensor with a leading batch dimension.
// Memory layout: [batch][z][y][x][channel], channel fastest.
template <typename T>
struct Tensor {
  int batch = 0;
  Vec3i spatial;
  int channels = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n, Vec3i s, int c)
      : batch(n), spatial(s), channels(c),
        data(static_cast<std::size_t>(n) * voxel_count(s) * c, T(0)) {}

  std::size_t index(int n, int x, int y, int z, int c) const {
    return (((static_cast<std::size_t>(n) * spatial.z + z) * spatial.y + y) *
                spatial.x + x) * channels + c;
  }
  T at(int n, int x, int y, int z, int c) const { return data[index(n, x, y, z, c)]; }
  T& at(int n, int x, int y, int z, int c) { return data[index(n, x, y, z, c)]; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const {
    return batch == o.batch && spatial == o.spatial && channels == o.channels;
  }
};

}  // namespace ffn

#endif  // FFN_TENSOR_HPP_
