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
#ifndef FFN_CONFIG_HPP_
#define FFN_CONFIG_HPP_

#include <cstdint>
#include <string>

#include "ffn/inference.hpp"
#include "ffn/model.hpp"
#include "ffn/seeds.hpp"
#include "ffn/synth.hpp"
#include "ffn/training.hpp"

namespace ffn {

// Union of all module configs, JSON on disk. Every field has a default; the
// fully resolved config is printed by each command and reloadable as-is.
struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = library default

  ModelShape model{{17, 17, 9}, 8, 3};
  std::uint64_t model_init_seed = 0;  // 0 = derived from `seed`

  MovementPolicy movement{{4, 4, 2}, 0.9f};
  Vec3i example_dims{25, 25, 13};

  // The loss is summed over the FoV, so stable rates are ~|FoV| smaller
  // than mean-reduced conventions; 1e-4 already diverges at 17x17x9.
  float learning_rate = 1e-5f;
  int batch_size = 4;
  std::size_t checkpoint_interval = 500;
  std::size_t max_steps = 20000;
  int patience = 3;
  std::size_t rebalance_queue_capacity = 1024;
  int holdout_worlds = 1;

  SeedConfig seeds;
  std::size_t min_object_size = 0;
  bool save_canvases = false;

  SynthConfig synth;
  int synth_count = 10;

  std::uint64_t effective_model_init_seed() const {
    return model_init_seed != 0 ? model_init_seed : seed * 0x9e3779b97f4a7c15ULL + 1;
  }
  std::uint64_t sampling_seed() const { return seed * 0x9e3779b97f4a7c15ULL + 2; }
};

// Parses, applies defaults, and validates (including the cross-field law
// example_dim = fov_dim + 2*delta_dim). Throws ConfigError.
RunConfig parse_config_json(const std::string& json_text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& config);

std::string config_to_json(const RunConfig& config);

}  // namespace ffn

#endif  // FFN_CONFIG_HPP_
