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
#ifndef FFN_CONV_HPP_
#define FFN_CONV_HPP_

#include <cstdint>
#include <vector>

#include "ffn/tensor.hpp"

namespace ffn {

// One SAME-mode 3d convolution. Kernel dims must be odd on every spatial
// axis. Weight layout: [kz][ky][kx][c_in][c_out], c_out fastest; one bias
// per output channel.
template <typename T>
struct ConvLayer {
  int kx = 0, ky = 0, kz = 0;
  int c_in = 0, c_out = 0;
  std::vector<T> w;
  std::vector<T> bias;

  static ConvLayer zeros(Vec3i kernel, int c_in, int c_out);

  std::size_t weight_index(int dz, int dy, int dx, int ci, int co) const {
    return (((static_cast<std::size_t>(dz) * ky + dy) * kx + dx) * c_in + ci) *
               c_out + co;
  }
  std::size_t weight_count() const {
    return static_cast<std::size_t>(kx) * ky * kz * c_in * c_out;
  }
};

template <typename T>
void validate_layer(const ConvLayer<T>& layer);

// Zero-padded cross-correlation plus bias; spatial dims are preserved.
// OpenMP-parallel over output voxels; each output element is owned by a
// single thread with a fixed inner summation order, so results are
// bit-identical for any thread count.
template <typename T>
Tensor<T> conv3d_same(const Tensor<T>& input, const ConvLayer<T>& layer);

// dL/dinput given dL/doutput.
template <typename T>
Tensor<T> conv3d_backward_input(const Tensor<T>& d_out, const ConvLayer<T>& layer);

// Accumulates dL/dweights and dL/dbias into `grads` (shape-matched layer).
template <typename T>
void conv3d_backward_params(const Tensor<T>& input, const Tensor<T>& d_out,
                            const ConvLayer<T>& layer, ConvLayer<T>& grads);

namespace reference {

// Serial direct-summation implementation kept as the test oracle and the
// benchmark baseline for the OpenMP kernel above.
template <typename T>
Tensor<T> conv3d_same_serial(const Tensor<T>& input, const ConvLayer<T>& layer);

}  // namespace reference

}  // namespace ffn

#endif  // FFN_CONV_HPP_
