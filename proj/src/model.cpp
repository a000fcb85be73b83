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
#include "ffn/model.hpp"

#include <cmath>
#include <random>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

constexpr Vec3i kKernel{3, 3, 3};

// [0,1) from the top 53 bits, independent of the library's distribution
// implementation so seeded runs reproduce across toolchains.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void validate_shape(const ModelShape& shape) {
  if (shape.fov.x <= 0 || shape.fov.y <= 0 || shape.fov.z <= 0 ||
      shape.fov.x % 2 == 0 || shape.fov.y % 2 == 0 || shape.fov.z % 2 == 0)
    throw ValidationError("model fov dims must be positive and odd, got " +
                          to_string(shape.fov));
  if (shape.channels < 1) throw ValidationError("model channels must be >= 1");
  if (shape.modules < 1) throw ValidationError("model needs >= 1 residual module");
  const int depth = 2 + 2 * shape.modules;
  if (depth < min_conv_layers(shape.fov))
    throw ValidationError("model too shallow: " + std::to_string(depth) +
                          " conv layers < " +
                          std::to_string(min_conv_layers(shape.fov)) +
                          " needed for fov " + to_string(shape.fov));
}

template <typename T>
void init_layer(ConvLayer<T>& layer, std::mt19937_64& rng) {
  const double scale =
      1.0 / std::sqrt(static_cast<double>(layer.kx) * layer.ky * layer.kz * layer.c_in);
  for (auto& w : layer.w)
    w = static_cast<T>((2.0 * unit_uniform(rng) - 1.0) * scale);
}

template <typename T>
inline T logistic(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
Tensor<T> relu(const Tensor<T>& t) {
  Tensor<T> out = t;
  for (auto& v : out.data)
    if (v < T(0)) v = T(0);
  return out;
}

// dL/dx for y = relu(x), given pre-activation x and dL/dy.
template <typename T>
void relu_backward_inplace(Tensor<T>& d, const Tensor<T>& pre) {
  for (std::size_t i = 0; i < d.data.size(); ++i)
    if (pre.data[i] <= T(0)) d.data[i] = T(0);
}

template <typename T>
void add_inplace(Tensor<T>& a, const Tensor<T>& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <typename T>
struct ForwardTrace {
  std::vector<Tensor<T>> h;   // residual stream: h[0] = stem out, h[m+1] = module m out
  std::vector<Tensor<T>> r1;  // relu(h[m])
  std::vector<Tensor<T>> c1;  // conv1(r1)
  std::vector<Tensor<T>> r2;  // relu(c1)
  Tensor<T> pred;             // clamped logistic of the head logits
};

template <typename T>
ForwardTrace<T> forward_trace(const FFNModel<T>& model, const Tensor<T>& input) {
  if (!(input.spatial == model.fov))
    throw ValidationError("forward: input dims " + to_string(input.spatial) +
                          " != model fov " + to_string(model.fov));
  if (input.channels != 2)
    throw ValidationError("forward: input must have 2 channels (image, mask)");

  ForwardTrace<T> trace;
  trace.h.push_back(conv3d_same(input, model.stem));
  for (const auto& mod : model.modules) {
    trace.r1.push_back(relu(trace.h.back()));
    trace.c1.push_back(conv3d_same(trace.r1.back(), mod.conv1));
    trace.r2.push_back(relu(trace.c1.back()));
    Tensor<T> out = conv3d_same(trace.r2.back(), mod.conv2);
    add_inplace(out, trace.h.back());
    trace.h.push_back(std::move(out));
  }
  trace.pred = conv3d_same(trace.h.back(), model.head);
  for (auto& v : trace.pred.data) {
    v = logistic(v);
    if (v < T(kProbClampLo)) v = T(kProbClampLo);
    if (v > T(kProbClampHi)) v = T(kProbClampHi);
  }
  return trace;
}

}  // namespace

int min_conv_layers(Vec3i fov) {
  const int lx = (fov.x - 1 + 1) / 2;  // ceil((fov-1)/2)
  const int ly = (fov.y - 1 + 1) / 2;
  const int lz = (fov.z - 1 + 1) / 2;
  return std::max({lx, ly, lz});
}

template <typename T>
FFNModel<T> make_model(const ModelShape& shape, std::uint64_t init_seed) {
  FFNModel<T> model = make_zero_model<T>(shape);
  std::mt19937_64 rng(init_seed);
  init_layer(model.stem, rng);
  for (auto& mod : model.modules) {
    init_layer(mod.conv1, rng);
    init_layer(mod.conv2, rng);
  }
  init_layer(model.head, rng);
  return model;
}

template <typename T>
FFNModel<T> make_zero_model(const ModelShape& shape) {
  validate_shape(shape);
  FFNModel<T> model;
  model.fov = shape.fov;
  model.channels = shape.channels;
  model.stem = ConvLayer<T>::zeros(kKernel, 2, shape.channels);
  model.modules.resize(shape.modules);
  for (auto& mod : model.modules) {
    mod.conv1 = ConvLayer<T>::zeros(kKernel, shape.channels, shape.channels);
    mod.conv2 = ConvLayer<T>::zeros(kKernel, shape.channels, shape.channels);
  }
  model.head = ConvLayer<T>::zeros(kKernel, shape.channels, 1);
  return model;
}

template <typename T>
GradientSet<T> make_gradient_set(const FFNModel<T>& model) {
  GradientSet<T> g;
  g.stem = ConvLayer<T>::zeros(kKernel, model.stem.c_in, model.stem.c_out);
  g.modules.resize(model.modules.size());
  for (std::size_t m = 0; m < model.modules.size(); ++m) {
    g.modules[m].conv1 =
        ConvLayer<T>::zeros(kKernel, model.channels, model.channels);
    g.modules[m].conv2 =
        ConvLayer<T>::zeros(kKernel, model.channels, model.channels);
  }
  g.head = ConvLayer<T>::zeros(kKernel, model.channels, 1);
  return g;
}

template <typename T>
Tensor<T> pack_input(Vec3i fov, std::span<const T> image_patch,
                     std::span<const T> mask_patch) {
  const std::size_t n = voxel_count(fov);
  if (image_patch.size() != n || mask_patch.size() != n)
    throw ValidationError("pack_input: patch size != fov voxel count");
  Tensor<T> input(1, fov, 2);
  for (std::size_t i = 0; i < n; ++i) {
    input.data[2 * i] = image_patch[i];
    input.data[2 * i + 1] = mask_patch[i];
  }
  return input;
}

template <typename T>
Tensor<T> forward(const FFNModel<T>& model, const Tensor<T>& input) {
  return forward_trace(model, input).pred;
}

template <typename T>
std::vector<T> forward(const FFNModel<T>& model, std::span<const T> image_patch,
                       std::span<const T> mask_patch) {
  Tensor<T> pred = forward(model, pack_input(model.fov, image_patch, mask_patch));
  return std::move(pred.data);
}

template <typename T>
LossResult<T> loss_with_grad(std::span<const T> pred, std::span<const T> target) {
  if (pred.size() != target.size())
    throw ValidationError("loss: pred/target size mismatch");
  LossResult<T> result;
  result.grad.resize(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double v_raw = static_cast<double>(pred[i]);
    if (v_raw == 0.0 || v_raw == 1.0)
      throw ValidationError("loss: prediction exactly 0 or 1 at voxel " +
                            std::to_string(i));
    if (target[i] != T(0.05) && target[i] != T(0.95))
      throw ValidationError("loss: target entries must be 0.05 or 0.95");
    const double m = static_cast<double>(target[i]);
    const double v = std::clamp(v_raw, kProbClampLo, kProbClampHi);
    result.value += -std::log(v) * m - std::log1p(-v) * (1.0 - m);
    // The clamp is flat outside the band, so clamped voxels get zero gradient.
    result.grad[i] = (v_raw < kProbClampLo || v_raw > kProbClampHi)
                         ? T(0)
                         : static_cast<T>(-m / v + (1.0 - m) / (1.0 - v));
  }
  return result;
}

template <typename T>
BackwardResult<T> backward(const FFNModel<T>& model, const Tensor<T>& input,
                           const Tensor<T>& target) {
  if (target.batch != input.batch || !(target.spatial == input.spatial) ||
      target.channels != 1)
    throw ValidationError("backward: target shape mismatch");

  ForwardTrace<T> trace = forward_trace(model, input);
  LossResult<T> loss = loss_with_grad(std::span<const T>(trace.pred.data),
                                      std::span<const T>(target.data));

  BackwardResult<T> result;
  result.loss = loss.value;
  result.grads = make_gradient_set(model);

  // dL/dlogit: the logistic folds the loss gradient into pred - target;
  // voxels pinned by the clamp contribute nothing.
  Tensor<T> d_logit(trace.pred.batch, trace.pred.spatial, 1);
  for (std::size_t i = 0; i < d_logit.data.size(); ++i) {
    const T v = trace.pred.data[i];
    d_logit.data[i] = (loss.grad[i] == T(0)) ? T(0) : v - target.data[i];
  }

  conv3d_backward_params(trace.h.back(), d_logit, model.head, result.grads.head);
  Tensor<T> dh = conv3d_backward_input(d_logit, model.head);

  for (int m = static_cast<int>(model.modules.size()) - 1; m >= 0; --m) {
    const auto& mod = model.modules[m];
    // Conv branch: dh is also dL/d(conv2 output).
    conv3d_backward_params(trace.r2[m], dh, mod.conv2, result.grads.modules[m].conv2);
    Tensor<T> d_c1 = conv3d_backward_input(dh, mod.conv2);
    relu_backward_inplace(d_c1, trace.c1[m]);
    conv3d_backward_params(trace.r1[m], d_c1, mod.conv1, result.grads.modules[m].conv1);
    Tensor<T> d_r1 = conv3d_backward_input(d_c1, mod.conv1);
    relu_backward_inplace(d_r1, trace.h[m]);
    add_inplace(dh, d_r1);  // skip branch passes dh through unchanged
  }

  conv3d_backward_params(input, dh, model.stem, result.grads.stem);
  result.pred = std::move(trace.pred);
  return result;
}

namespace {

template <typename T>
void sgd_layer(ConvLayer<T>& layer, const ConvLayer<T>& grad, T lr) {
  if (grad.w.size() != layer.w.size() || grad.bias.size() != layer.bias.size())
    throw ValidationError("sgd_step: gradient shape mismatch");
  for (std::size_t i = 0; i < layer.w.size(); ++i) layer.w[i] -= lr * grad.w[i];
  for (std::size_t i = 0; i < layer.bias.size(); ++i)
    layer.bias[i] -= lr * grad.bias[i];
}

}  // namespace

template <typename T>
void sgd_step(FFNModel<T>& model, const GradientSet<T>& grads, T lr) {
  if (grads.modules.size() != model.modules.size())
    throw ValidationError("sgd_step: module count mismatch");
  sgd_layer(model.stem, grads.stem, lr);
  for (std::size_t m = 0; m < model.modules.size(); ++m) {
    sgd_layer(model.modules[m].conv1, grads.modules[m].conv1, lr);
    sgd_layer(model.modules[m].conv2, grads.modules[m].conv2, lr);
  }
  sgd_layer(model.head, grads.head, lr);
}

template FFNModel<float> make_model(const ModelShape&, std::uint64_t);
template FFNModel<double> make_model(const ModelShape&, std::uint64_t);
template FFNModel<float> make_zero_model(const ModelShape&);
template FFNModel<double> make_zero_model(const ModelShape&);
template GradientSet<float> make_gradient_set(const FFNModel<float>&);
template GradientSet<double> make_gradient_set(const FFNModel<double>&);
template Tensor<float> pack_input(Vec3i, std::span<const float>, std::span<const float>);
template Tensor<double> pack_input(Vec3i, std::span<const double>, std::span<const double>);
template Tensor<float> forward(const FFNModel<float>&, const Tensor<float>&);
template Tensor<double> forward(const FFNModel<double>&, const Tensor<double>&);
template std::vector<float> forward(const FFNModel<float>&, std::span<const float>,
                                    std::span<const float>);
template std::vector<double> forward(const FFNModel<double>&, std::span<const double>,
                                     std::span<const double>);
template LossResult<float> loss_with_grad(std::span<const float>, std::span<const float>);
template LossResult<double> loss_with_grad(std::span<const double>, std::span<const double>);
template BackwardResult<float> backward(const FFNModel<float>&, const Tensor<float>&,
                                        const Tensor<float>&);
template BackwardResult<double> backward(const FFNModel<double>&, const Tensor<double>&,
                                         const Tensor<double>&);
template void sgd_step(FFNModel<float>&, const GradientSet<float>&, float);
template void sgd_step(FFNModel<double>&, const GradientSet<double>&, double);

}  // namespace ffn
