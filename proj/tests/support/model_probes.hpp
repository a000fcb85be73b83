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
#ifndef FFN_TESTS_SUPPORT_MODEL_PROBES_HPP_
#define FFN_TESTS_SUPPORT_MODEL_PROBES_HPP_

// Gradcheck scaffolding shared by the unit tests and the acceptance suite.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

#include "ffn/model.hpp"

namespace ffn::testsupport {

template <typename T>
Tensor<T> random_input(Vec3i fov, std::mt19937_64& rng) {
  Tensor<T> input(1, fov, 2);
  for (std::size_t i = 0; i < input.data.size(); ++i)
    input.data[i] = static_cast<T>((rng() >> 11) * 0x1.0p-53);
  return input;
}

template <typename T>
Tensor<T> random_target(Vec3i fov, std::mt19937_64& rng) {
  Tensor<T> target(1, fov, 1);
  for (auto& t : target.data) t = (rng() & 1) ? T(0.95) : T(0.05);
  return target;
}

// A 1e-3 central-difference sweep is only meaningful where the loss is
// smooth, i.e. no relu pre-activation may cross zero inside the sweep.
// Alternating-sign biases plus down-scaled weights pin every pre-activation
// well away from the kink while still exercising both relu states.
template <typename T>
FFNModel<T> kink_free_model(const ModelShape& shape, std::uint64_t seed) {
  FFNModel<T> model = make_model<T>(shape, seed);
  auto tame = [](ConvLayer<T>& l, bool alternate_bias) {
    for (auto& w : l.w) w *= T(0.1);
    if (alternate_bias)
      for (std::size_t c = 0; c < l.bias.size(); ++c)
        l.bias[c] = (c % 2) ? T(-0.8) : T(0.8);
  };
  tame(model.stem, true);
  for (auto& mod : model.modules) {
    tame(mod.conv1, true);
    tame(mod.conv2, false);
  }
  tame(model.head, false);
  return model;
}

// Smallest |pre-activation| over everything fed to a relu.
template <typename T>
T relu_margin(const FFNModel<T>& model, const Tensor<T>& input) {
  auto relu = [](Tensor<T> t) {
    for (auto& v : t.data) v = std::max(v, T(0));
    return t;
  };
  T margin = std::numeric_limits<T>::max();
  auto scan = [&margin](const Tensor<T>& t) {
    for (T v : t.data) margin = std::min(margin, std::abs(v));
  };
  Tensor<T> h = reference::conv3d_same_serial(input, model.stem);
  for (const auto& mod : model.modules) {
    scan(h);
    Tensor<T> c1 = reference::conv3d_same_serial(relu(h), mod.conv1);
    scan(c1);
    Tensor<T> c2 = reference::conv3d_same_serial(relu(c1), mod.conv2);
    for (std::size_t i = 0; i < h.data.size(); ++i) h.data[i] += c2.data[i];
  }
  return margin;
}

}  // namespace ffn::testsupport

#endif  // FFN_TESTS_SUPPORT_MODEL_PROBES_HPP_
