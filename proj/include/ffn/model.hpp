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
#ifndef FFN_MODEL_HPP_
#define FFN_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ffn/conv.hpp"
#include "ffn/tensor.hpp"

namespace ffn {

// Two convolutions behind a full pre-activation skip:
//   out = in + conv2(relu(conv1(relu(in)))).
template <typename T>
struct ResidualModule {
  ConvLayer<T> conv1;
  ConvLayer<T> conv2;
};

struct ModelShape {
  Vec3i fov{33, 33, 17};
  int channels = 8;
  int modules = 8;

  friend bool operator==(const ModelShape&, const ModelShape&) = default;
};

// Minimum conv-layer count so the central output voxel sees the whole FoV.
int min_conv_layers(Vec3i fov);

// The mask predictor: a stem conv (image+mask -> C channels), a stack of
// residual modules, and a head conv (C -> 1) followed by a logistic.
// All convolutions are SAME-mode 3x3x3.
template <typename T>
struct FFNModel {
  Vec3i fov;
  int channels = 0;
  ConvLayer<T> stem;
  std::vector<ResidualModule<T>> modules;
  ConvLayer<T> head;

  ModelShape shape() const { return {fov, channels, static_cast<int>(modules.size())}; }
  int conv_layer_count() const { return 2 + 2 * static_cast<int>(modules.size()); }
};

// Zero biases, kernel entries i.i.d. uniform in [-1,1] scaled by 1/sqrt(fan-in).
template <typename T>
FFNModel<T> make_model(const ModelShape& shape, std::uint64_t init_seed);

template <typename T>
FFNModel<T> make_zero_model(const ModelShape& shape);

// Gradients, shape-matched with the model parameters.
template <typename T>
struct GradientSet {
  ConvLayer<T> stem;
  std::vector<ResidualModule<T>> modules;
  ConvLayer<T> head;
};

template <typename T>
GradientSet<T> make_gradient_set(const FFNModel<T>& model);

// Predictions are clamped away from exact 0/1 so the log-loss stays finite.
inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

// Assembles the two-channel input tensor (channel 0 image, channel 1 mask)
// from FoV-sized x-fastest patches.
template <typename T>
Tensor<T> pack_input(Vec3i fov, std::span<const T> image_patch,
                     std::span<const T> mask_patch);

// Full forward pass; output has one channel and the input's spatial dims,
// values strictly inside (0,1).
template <typename T>
Tensor<T> forward(const FFNModel<T>& model, const Tensor<T>& input);

// Single-patch convenience wrapper: x-fastest FoV patches in, probabilities out.
template <typename T>
std::vector<T> forward(const FFNModel<T>& model, std::span<const T> image_patch,
                       std::span<const T> mask_patch);

template <typename T>
struct LossResult {
  double value = 0.0;
  std::vector<T> grad;  // d loss / d prediction, per voxel
};

// Voxelwise log-loss  sum_i -log(v_i) m_i - log(1-v_i)(1-m_i)  with soft
// targets m in {0.05, 0.95}. Throws on predictions exactly 0 or 1.
template <typename T>
LossResult<T> loss_with_grad(std::span<const T> pred, std::span<const T> target);

template <typename T>
struct BackwardResult {
  double loss = 0.0;
  GradientSet<T> grads;
  Tensor<T> pred;
};

// Forward + loss + analytic backprop through the whole stack.
template <typename T>
BackwardResult<T> backward(const FFNModel<T>& model, const Tensor<T>& input,
                           const Tensor<T>& target);

template <typename T>
void sgd_step(FFNModel<T>& model, const GradientSet<T>& grads, T lr);

// Checkpoint: text descriptor at `path`, raw f32 little-endian payload at
// `path + ".raw"` (parameter order as listed in the descriptor).
void save_checkpoint(const FFNModel<float>& model, const std::string& path);
FFNModel<float> load_checkpoint(const std::string& path);

}  // namespace ffn

#endif  // FFN_MODEL_HPP_
