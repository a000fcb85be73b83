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
#include "ffn/conv.hpp"

#include <cstring>

#include "ffn/errors.hpp"

// Parallelization keeps every output element owned by exactly one thread and
// sums its contributions in a fixed order, so results do not depend on the
// thread count.

namespace ffn {

template <typename T>
ConvLayer<T> ConvLayer<T>::zeros(Vec3i kernel, int c_in, int c_out) {
  ConvLayer<T> l;
  l.kx = kernel.x;
  l.ky = kernel.y;
  l.kz = kernel.z;
  l.c_in = c_in;
  l.c_out = c_out;
  l.w.assign(l.weight_count(), T(0));
  l.bias.assign(c_out, T(0));
  validate_layer(l);
  return l;
}

template <typename T>
void validate_layer(const ConvLayer<T>& layer) {
  if (layer.kx <= 0 || layer.ky <= 0 || layer.kz <= 0 ||
      layer.kx % 2 == 0 || layer.ky % 2 == 0 || layer.kz % 2 == 0)
    throw ValidationError("conv kernel dims must be positive and odd");
  if (layer.c_in <= 0 || layer.c_out <= 0)
    throw ValidationError("conv channel counts must be positive");
  if (layer.w.size() != layer.weight_count())
    throw ValidationError("conv weight buffer size mismatch");
  if (layer.bias.size() != static_cast<std::size_t>(layer.c_out))
    throw ValidationError("conv bias buffer size mismatch");
}

template <typename T>
Tensor<T> conv3d_same(const Tensor<T>& input, const ConvLayer<T>& layer) {
  validate_layer(layer);
  if (input.channels != layer.c_in)
    throw ValidationError("conv input has " + std::to_string(input.channels) +
                          " channels, layer expects " + std::to_string(layer.c_in));
  const int X = input.spatial.x, Y = input.spatial.y, Z = input.spatial.z;
  const int N = input.batch, CI = layer.c_in, CO = layer.c_out;
  const int ox = layer.kx / 2, oy = layer.ky / 2, oz = layer.kz / 2;
  Tensor<T> out(N, input.spatial, CO);
  const T* in = input.data.data();
  const T* w = layer.w.data();
  const T* bias = layer.bias.data();
  T* o = out.data.data();

#pragma omp parallel for collapse(3) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int z = 0; z < Z; ++z)
      for (int y = 0; y < Y; ++y) {
        const std::size_t row0 =
            ((static_cast<std::size_t>(n) * Z + z) * Y + y) * X;
        for (int x = 0; x < X; ++x) {
          T* orow = o + (row0 + x) * CO;
          for (int co = 0; co < CO; ++co) orow[co] = bias[co];
          for (int dz = 0; dz < layer.kz; ++dz) {
            const int sz = z + dz - oz;
            if (sz < 0 || sz >= Z) continue;
            for (int dy = 0; dy < layer.ky; ++dy) {
              const int sy = y + dy - oy;
              if (sy < 0 || sy >= Y) continue;
              for (int dx = 0; dx < layer.kx; ++dx) {
                const int sx = x + dx - ox;
                if (sx < 0 || sx >= X) continue;
                const T* irow =
                    in + (((static_cast<std::size_t>(n) * Z + sz) * Y + sy) * X +
                          sx) * CI;
                const T* wrow =
                    w + (((static_cast<std::size_t>(dz) * layer.ky + dy) *
                              layer.kx + dx) * CI) * CO;
                for (int ci = 0; ci < CI; ++ci) {
                  const T a = irow[ci];
                  const T* wr = wrow + static_cast<std::size_t>(ci) * CO;
#pragma omp simd
                  for (int co = 0; co < CO; ++co) orow[co] += a * wr[co];
                }
              }
            }
          }
        }
      }
  return out;
}

template <typename T>
Tensor<T> conv3d_backward_input(const Tensor<T>& d_out, const ConvLayer<T>& layer) {
  validate_layer(layer);
  if (d_out.channels != layer.c_out)
    throw ValidationError("conv backward: d_out channel mismatch");
  const int X = d_out.spatial.x, Y = d_out.spatial.y, Z = d_out.spatial.z;
  const int N = d_out.batch, CI = layer.c_in, CO = layer.c_out;
  const int ox = layer.kx / 2, oy = layer.ky / 2, oz = layer.kz / 2;
  Tensor<T> d_in(N, d_out.spatial, CI);
  const T* dout = d_out.data.data();
  const T* w = layer.w.data();
  T* din = d_in.data.data();

  // d_in(p, ci) gathers dout(p - offset, co) * w(offset, ci, co).
#pragma omp parallel for collapse(3) schedule(static)
  for (int n = 0; n < N; ++n)
    for (int z = 0; z < Z; ++z)
      for (int y = 0; y < Y; ++y) {
        const std::size_t row0 =
            ((static_cast<std::size_t>(n) * Z + z) * Y + y) * X;
        for (int x = 0; x < X; ++x) {
          T* drow = din + (row0 + x) * CI;
          for (int dz = 0; dz < layer.kz; ++dz) {
            const int tz = z - (dz - oz);
            if (tz < 0 || tz >= Z) continue;
            for (int dy = 0; dy < layer.ky; ++dy) {
              const int ty = y - (dy - oy);
              if (ty < 0 || ty >= Y) continue;
              for (int dx = 0; dx < layer.kx; ++dx) {
                const int tx = x - (dx - ox);
                if (tx < 0 || tx >= X) continue;
                const T* gout =
                    dout + (((static_cast<std::size_t>(n) * Z + tz) * Y + ty) * X +
                            tx) * CO;
                const T* wrow =
                    w + (((static_cast<std::size_t>(dz) * layer.ky + dy) *
                              layer.kx + dx) * CI) * CO;
                for (int ci = 0; ci < CI; ++ci) {
                  const T* wr = wrow + static_cast<std::size_t>(ci) * CO;
                  T acc = T(0);
#pragma omp simd reduction(+ : acc)
                  for (int co = 0; co < CO; ++co) acc += gout[co] * wr[co];
                  drow[ci] += acc;
                }
              }
            }
          }
        }
      }
  return d_in;
}

template <typename T>
void conv3d_backward_params(const Tensor<T>& input, const Tensor<T>& d_out,
                            const ConvLayer<T>& layer, ConvLayer<T>& grads) {
  validate_layer(layer);
  if (input.channels != layer.c_in || d_out.channels != layer.c_out ||
      input.batch != d_out.batch || !(input.spatial == d_out.spatial))
    throw ValidationError("conv backward: input/d_out shape mismatch");
  if (grads.w.size() != layer.w.size() || grads.bias.size() != layer.bias.size())
    throw ValidationError("conv backward: gradient buffer shape mismatch");
  const int X = input.spatial.x, Y = input.spatial.y, Z = input.spatial.z;
  const int N = input.batch, CI = layer.c_in, CO = layer.c_out;
  const int ox = layer.kx / 2, oy = layer.ky / 2, oz = layer.kz / 2;
  const T* in = input.data.data();
  const T* dout = d_out.data.data();

  // Each (tap, ci) pair owns one contiguous gradient row of length c_out.
#pragma omp parallel for collapse(4) schedule(static)
  for (int dz = 0; dz < layer.kz; ++dz)
    for (int dy = 0; dy < layer.ky; ++dy)
      for (int dx = 0; dx < layer.kx; ++dx)
        for (int ci = 0; ci < CI; ++ci) {
          T* grow = grads.w.data() +
                    (((static_cast<std::size_t>(dz) * layer.ky + dy) *
                          layer.kx + dx) * CI + ci) * CO;
          const int z_lo = std::max(0, oz - dz), z_hi = Z + std::min(0, oz - dz);
          const int y_lo = std::max(0, oy - dy), y_hi = Y + std::min(0, oy - dy);
          const int x_lo = std::max(0, ox - dx), x_hi = X + std::min(0, ox - dx);
          for (int n = 0; n < N; ++n)
            for (int z = z_lo; z < z_hi; ++z)
              for (int y = y_lo; y < y_hi; ++y) {
                const std::size_t out_row =
                    ((static_cast<std::size_t>(n) * Z + z) * Y + y) * X;
                const std::size_t in_row =
                    ((static_cast<std::size_t>(n) * Z + (z + dz - oz)) * Y +
                     (y + dy - oy)) * X;
                for (int x = x_lo; x < x_hi; ++x) {
                  const T a = in[(in_row + (x + dx - ox)) * CI + ci];
                  const T* gout = dout + (out_row + x) * CO;
#pragma omp simd
                  for (int co = 0; co < CO; ++co) grow[co] += a * gout[co];
                }
              }
        }

  // Bias gradient: plain sum over voxels, fixed order.
  const std::size_t voxels = static_cast<std::size_t>(N) * X * Y * Z;
  for (std::size_t v = 0; v < voxels; ++v) {
    const T* gout = dout + v * CO;
    for (int co = 0; co < CO; ++co) grads.bias[co] += gout[co];
  }
}

namespace reference {

template <typename T>
Tensor<T> conv3d_same_serial(const Tensor<T>& input, const ConvLayer<T>& layer) {
  validate_layer(layer);
  if (input.channels != layer.c_in)
    throw ValidationError("conv input channel mismatch");
  const int ox = layer.kx / 2, oy = layer.ky / 2, oz = layer.kz / 2;
  Tensor<T> out(input.batch, input.spatial, layer.c_out);
  for (int n = 0; n < input.batch; ++n)
    for (int z = 0; z < input.spatial.z; ++z)
      for (int y = 0; y < input.spatial.y; ++y)
        for (int x = 0; x < input.spatial.x; ++x)
          for (int co = 0; co < layer.c_out; ++co) {
            T acc = layer.bias[co];
            for (int dz = 0; dz < layer.kz; ++dz)
              for (int dy = 0; dy < layer.ky; ++dy)
                for (int dx = 0; dx < layer.kx; ++dx)
                  for (int ci = 0; ci < layer.c_in; ++ci) {
                    const int sx = x + dx - ox;
                    const int sy = y + dy - oy;
                    const int sz = z + dz - oz;
                    if (sx < 0 || sx >= input.spatial.x || sy < 0 ||
                        sy >= input.spatial.y || sz < 0 || sz >= input.spatial.z)
                      continue;  // zero padding
                    acc += input.at(n, sx, sy, sz, ci) *
                           layer.w[layer.weight_index(dz, dy, dx, ci, co)];
                  }
            out.at(n, x, y, z, co) = acc;
          }
  return out;
}

template Tensor<float> conv3d_same_serial(const Tensor<float>&, const ConvLayer<float>&);
template Tensor<double> conv3d_same_serial(const Tensor<double>&, const ConvLayer<double>&);

}  // namespace reference

template struct ConvLayer<float>;
template struct ConvLayer<double>;
template void validate_layer(const ConvLayer<float>&);
template void validate_layer(const ConvLayer<double>&);
template Tensor<float> conv3d_same(const Tensor<float>&, const ConvLayer<float>&);
template Tensor<double> conv3d_same(const Tensor<double>&, const ConvLayer<double>&);
template Tensor<float> conv3d_backward_input(const Tensor<float>&, const ConvLayer<float>&);
template Tensor<double> conv3d_backward_input(const Tensor<double>&, const ConvLayer<double>&);
template void conv3d_backward_params(const Tensor<float>&, const Tensor<float>&,
                                     const ConvLayer<float>&, ConvLayer<float>&);
template void conv3d_backward_params(const Tensor<double>&, const Tensor<double>&,
                                     const ConvLayer<double>&, ConvLayer<double>&);

}  // namespace ffn
