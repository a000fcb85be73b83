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
#ifndef FFN_TRAINING_HPP_
#define FFN_TRAINING_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ffn/inference.hpp"
#include "ffn/metrics.hpp"
#include "ffn/model.hpp"
#include "ffn/synth.hpp"
#include "ffn/volume.hpp"

namespace ffn {

// One training example: image crop plus soft-target mask (0.95 on the center
// voxel's object, 0.05 elsewhere). Dims allow exactly one FoV step per
// direction: example_dim = fov_dim + 2*delta_dim on every axis.
struct TrainingExample {
  ImageVolume image;
  std::vector<float> target;

  Vec3i dims() const { return image.dims; }
  Vec3i center() const {
    return {image.dims.x / 2, image.dims.y / 2, image.dims.z / 2};
  }
};

TrainingExample extract_example(const ImageVolume& image,
                                const SegmentationVolume& gt, Vec3i center,
                                Vec3i example_dims);

// Fraction of target voxels at 0.95.
double active_fraction(const TrainingExample& example);

// Active-fraction class boundaries; class i covers [t_{i-1}, t_i), with the
// top bin closed so 1.0 lands in class 17.
struct RebalancingBins {
  std::array<double, 18> boundaries{0.0, 0.01, 0.02, 0.03, 0.04, 0.05,
                                    0.06, 0.075, 0.1, 0.2, 0.3, 0.4,
                                    0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  static constexpr int kClasses = 17;
};

int class_of(double active_fraction, const RebalancingBins& bins = {});

// Resamples a source stream so every class seen so far appears equally
// often: examples queue per class and a round-robin cursor over the
// discovered classes drains them. Queues are bounded (oldest entries drop)
// so a rare class cannot grow memory without bound.
class RebalancedStream {
 public:
  using Source = std::function<std::optional<TrainingExample>()>;

  explicit RebalancedStream(Source source, RebalancingBins bins = {},
                            std::size_t queue_capacity = 1024);

  // nullopt once the source is exhausted and all queues are drained.
  std::optional<TrainingExample> next();

 private:
  Source source_;
  RebalancingBins bins_;
  std::size_t capacity_;
  bool exhausted_ = false;
  std::vector<int> present_;  // classes seen, in discovery order
  std::size_t cursor_ = 0;
  std::array<std::vector<TrainingExample>, RebalancingBins::kClasses + 1> queues_;

  bool pull_one();
};

// Runs the FoV movement procedure on a training canvas (no split bias,
// moves confined to the example box) and performs
// forward / loss / backward / sgd_step after every move. Returns the
// per-move loss sequence.
std::vector<double> train_on_example(FFNModel<float>& model,
                                     const TrainingExample& example,
                                     const MovementPolicy& policy, float lr);

struct TrainLoopConfig {
  Vec3i example_dims{49, 49, 25};
  MovementPolicy policy;
  float learning_rate = 1e-5f;  // the per-move loss is summed over the FoV
  int batch_size = 4;
  std::size_t checkpoint_interval = 500;  // in SGD steps (FoV moves)
  std::size_t max_steps = 20000;
  int patience = 3;  // successive non-improving evaluations before stopping
  std::size_t rebalance_queue_capacity = 1024;
  std::uint64_t sampling_seed = 7;
  SeedConfig eval_seed_config;
  std::size_t eval_min_object_size = 0;
};

struct CheckpointEval {
  std::size_t step = 0;
  std::string checkpoint_path;
  double mean_edge_accuracy_pct = 0.0;
  std::vector<EvaluationReport> per_world;
};

struct TrainLoopResult {
  std::size_t steps = 0;
  std::vector<CheckpointEval> evals;
  std::string best_checkpoint;
  double best_accuracy_pct = 0.0;
  bool early_stopped = false;
};

// Draws random in-object centers over the training worlds, rebalances the
// example stream, trains per-move, and every checkpoint_interval steps saves
// the model and evaluates it by full inference + edge accuracy on the
// held-out worlds. Stops at max_steps or after `patience` successive
// non-improving evaluations.
TrainLoopResult training_loop(FFNModel<float>& model,
                              std::span<const World> train_worlds,
                              std::span<const World> eval_worlds,
                              const TrainLoopConfig& config,
                              const std::string& out_dir);

}  // namespace ffn

#endif  // FFN_TRAINING_HPP_
