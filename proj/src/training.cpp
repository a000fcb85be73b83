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
#include "ffn/training.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

// Target values over a subregion of the example, x-fastest.
std::vector<float> crop_target(const TrainingExample& example,
                               const BoxRegion& region) {
  std::vector<float> out;
  out.reserve(voxel_count(region.size));
  for (int z = 0; z < region.size.z; ++z)
    for (int y = 0; y < region.size.y; ++y)
      for (int x = 0; x < region.size.x; ++x)
        out.push_back(example.target[linear_index(
            region.corner + Vec3i{x, y, z}, example.dims())]);
  return out;
}

}  // namespace

TrainingExample extract_example(const ImageVolume& image,
                                const SegmentationVolume& gt, Vec3i center,
                                Vec3i example_dims) {
  if (gt.dims != image.dims)
    throw ValidationError("extract_example: image and gt dims differ");
  const BoxRegion region = centered_region(center, example_dims);
  if (!region_inside(region, image.dims))
    throw ValidationError("extract_example: example box leaves the volume");
  const std::uint32_t label = gt.at(center);
  if (label == 0)
    throw ValidationError("extract_example: center voxel lies on background");

  TrainingExample example;
  example.image = crop(image, region);
  example.target.reserve(voxel_count(example_dims));
  for (int z = 0; z < example_dims.z; ++z)
    for (int y = 0; y < example_dims.y; ++y)
      for (int x = 0; x < example_dims.x; ++x)
        example.target.push_back(
            gt.at(region.corner + Vec3i{x, y, z}) == label ? 0.95f : 0.05f);
  return example;
}

double active_fraction(const TrainingExample& example) {
  if (example.target.empty())
    throw ValidationError("active_fraction: empty target");
  std::size_t active = 0;
  for (float t : example.target) active += (t == 0.95f);
  return static_cast<double>(active) / static_cast<double>(example.target.size());
}

int class_of(double active_fraction, const RebalancingBins& bins) {
  if (!(active_fraction >= 0.0) || active_fraction > 1.0)
    throw ValidationError("class_of: active fraction outside [0,1]");
  for (std::size_t i = 1; i < bins.boundaries.size(); ++i)
    if (bins.boundaries[i] <= bins.boundaries[i - 1])
      throw ValidationError("class_of: boundaries must increase strictly");
  const auto it = std::upper_bound(bins.boundaries.begin(),
                                   bins.boundaries.end(), active_fraction);
  const auto idx = static_cast<int>(it - bins.boundaries.begin());
  return std::min(idx, RebalancingBins::kClasses);  // close the top bin
}

RebalancedStream::RebalancedStream(Source source, RebalancingBins bins,
                                   std::size_t queue_capacity)
    : source_(std::move(source)), bins_(bins), capacity_(queue_capacity) {
  if (capacity_ < 1)
    throw ValidationError("rebalance queue capacity must be >= 1");
}

bool RebalancedStream::pull_one() {
  std::optional<TrainingExample> ex = source_();
  if (!ex) {
    exhausted_ = true;
    return false;
  }
  const int cls = class_of(active_fraction(*ex), bins_);
  auto& queue = queues_[static_cast<std::size_t>(cls)];
  if (std::find(present_.begin(), present_.end(), cls) == present_.end())
    present_.push_back(cls);
  if (queue.size() >= capacity_) queue.erase(queue.begin());
  queue.push_back(std::move(*ex));
  return true;
}

std::optional<TrainingExample> RebalancedStream::next() {
  while (present_.empty()) {
    if (exhausted_ || !pull_one()) return std::nullopt;
  }
  for (;;) {
    auto& queue = queues_[static_cast<std::size_t>(present_[cursor_])];
    if (!queue.empty()) {
      TrainingExample ex = std::move(queue.front());
      queue.erase(queue.begin());
      cursor_ = (cursor_ + 1) % present_.size();
      return ex;
    }
    if (!exhausted_) {
      // Strict round-robin: wait for the class under the cursor, otherwise
      // the output distribution would just mirror the source.
      pull_one();
      continue;
    }
    // Drain mode: serve whatever classes still hold examples.
    for (std::size_t k = 1; k < present_.size(); ++k) {
      const std::size_t at = (cursor_ + k) % present_.size();
      auto& other = queues_[static_cast<std::size_t>(present_[at])];
      if (other.empty()) continue;
      TrainingExample ex = std::move(other.front());
      other.erase(other.begin());
      cursor_ = (at + 1) % present_.size();
      return ex;
    }
    return std::nullopt;
  }
}

std::vector<double> train_on_example(FFNModel<float>& model,
                                     const TrainingExample& example,
                                     const MovementPolicy& policy, float lr) {
  validate_policy(policy);
  const Vec3i want{model.fov.x + 2 * policy.delta.x,
                   model.fov.y + 2 * policy.delta.y,
                   model.fov.z + 2 * policy.delta.z};
  if (example.dims() != want)
    throw ValidationError("train_on_example: example dims " +
                          to_string(example.dims()) + " must equal fov + 2*delta " +
                          to_string(want));
  if (example.target.size() != voxel_count(example.dims()))
    throw ValidationError("train_on_example: target size mismatch");
  const Vec3i center = example.center();
  if (example.target[linear_index(center, example.dims())] != 0.95f)
    throw ValidationError("train_on_example: target at the center must be 0.95");

  ProbabilityCanvas canvas(example.dims());
  canvas.values[linear_index(center, example.dims())] = 0.95f;

  FloodOptions options;
  options.split_bias = false;  // training writes are plain overwrites
  options.restrict_box =
      BoxRegion{center - policy.delta,
                {2 * policy.delta.x + 1, 2 * policy.delta.y + 1,
                 2 * policy.delta.z + 1}};

  std::vector<double> losses;
  const PredictFn step = [&](const BoxRegion& region,
                             std::span<const float> mask_patch) {
    const ImageVolume patch = crop(example.image, region);
    Tensor<float> input = pack_input<float>(
        model.fov, patch.voxels, mask_patch);
    Tensor<float> target(1, model.fov, 1);
    target.data = crop_target(example, region);
    BackwardResult<float> res = backward(model, input, target);
    sgd_step(model, res.grads, lr);
    losses.push_back(res.loss);
    return std::move(res.pred.data);
  };
  flood_fill_run(canvas, center, model.fov, policy, step, options);
  return losses;
}

TrainLoopResult training_loop(FFNModel<float>& model,
                              std::span<const World> train_worlds,
                              std::span<const World> eval_worlds,
                              const TrainLoopConfig& config,
                              const std::string& out_dir) {
  if (train_worlds.empty())
    throw ValidationError("training_loop: empty training corpus");
  if (eval_worlds.empty())
    throw ValidationError("training_loop: no held-out worlds to evaluate on");
  if (config.batch_size < 1 || config.checkpoint_interval < 1 ||
      config.patience < 1 || config.max_steps < 1)
    throw ValidationError("training_loop: schedule settings must be positive");
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(config.sampling_seed);
  const Vec3i ex = config.example_dims;

  // Infinite source of rebalanced in-object examples over the corpus.
  const auto source = [&]() -> std::optional<TrainingExample> {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      const World& w = train_worlds[rng() % train_worlds.size()];
      const Vec3i dims = w.image.dims;
      if (dims.x < ex.x || dims.y < ex.y || dims.z < ex.z)
        throw ValidationError("training_loop: world smaller than the example");
      const Vec3i center{
          ex.x / 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                          dims.x - ex.x + 1)),
          ex.y / 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                          dims.y - ex.y + 1)),
          ex.z / 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(
                                          dims.z - ex.z + 1))};
      if (w.labels.at(center) == 0) continue;
      return extract_example(w.image, w.labels, center, ex);
    }
    throw ValidationError("training_loop: could not sample an in-object center");
  };
  RebalancedStream stream(source, RebalancingBins{},
                          config.rebalance_queue_capacity);

  const auto evaluate = [&](std::size_t step) {
    char name[64];
    std::snprintf(name, sizeof(name), "ckpt_%06zu", step);
    CheckpointEval eval;
    eval.step = step;
    eval.checkpoint_path = (std::filesystem::path(out_dir) / name).string();
    save_checkpoint(model, eval.checkpoint_path);

    double sum = 0.0;
    for (const World& w : eval_worlds) {
      ModelPredictor predictor(model);
      SegmentVolumeOptions opts;
      opts.min_object_size = config.eval_min_object_size;
      const SegmentVolumeResult run = segment_volume(
          w.image, predictor, config.policy, config.eval_seed_config, opts);
      const EvaluationReport report = edge_accuracy(
          adjust_omitted(classify_edges(w.skeletons, run.segmentation),
                         w.skeletons, run.segmentation));
      sum += report.edge_accuracy_pct;
      eval.per_world.push_back(report);
    }
    eval.mean_edge_accuracy_pct = sum / static_cast<double>(eval_worlds.size());
    return eval;
  };

  TrainLoopResult result;
  int stale = 0;
  std::size_t next_checkpoint = config.checkpoint_interval;
  bool stop = false;

  while (!stop && result.steps < config.max_steps) {
    for (int b = 0; b < config.batch_size && result.steps < config.max_steps;
         ++b) {
      std::optional<TrainingExample> example = stream.next();
      if (!example) {
        stop = true;
        break;
      }
      result.steps +=
          train_on_example(model, *example, config.policy, config.learning_rate)
              .size();
    }

    if (!stop && result.steps >= next_checkpoint) {
      const CheckpointEval eval = evaluate(result.steps);
      next_checkpoint = (result.steps / config.checkpoint_interval + 1) *
                        config.checkpoint_interval;
      result.evals.push_back(eval);
      if (eval.mean_edge_accuracy_pct > result.best_accuracy_pct ||
          result.best_checkpoint.empty()) {
        result.best_accuracy_pct = eval.mean_edge_accuracy_pct;
        result.best_checkpoint = eval.checkpoint_path;
        stale = 0;
      } else if (++stale >= config.patience) {
        result.early_stopped = true;
        stop = true;
      }
    }
  }

  // Final checkpoint + evaluation unless the last interval already covered it.
  if (result.evals.empty() || result.evals.back().step != result.steps) {
    const CheckpointEval eval = evaluate(result.steps);
    result.evals.push_back(eval);
    if (eval.mean_edge_accuracy_pct > result.best_accuracy_pct ||
        result.best_checkpoint.empty()) {
      result.best_accuracy_pct = eval.mean_edge_accuracy_pct;
      result.best_checkpoint = eval.checkpoint_path;
    }
  }
  return result;
}

}  // namespace ffn
