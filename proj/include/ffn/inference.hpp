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
#ifndef FFN_INFERENCE_HPP_
#define FFN_INFERENCE_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ffn/model.hpp"
#include "ffn/seeds.hpp"
#include "ffn/volume.hpp"

namespace ffn {

struct MovementPolicy {
  Vec3i delta{8, 8, 4};
  float t_move = 0.9f;
};

void validate_policy(const MovementPolicy& policy);

// Inference-only bias against merge errors: once a voxel has been written
// (t > 1) and sits below 0.5, a higher fresh prediction cannot lift it.
inline float apply_split_bias(float v_prev, float v_pred, std::uint32_t t) {
  if (v_pred > v_prev && v_prev < 0.5f && t > 1) return v_prev;
  return v_pred;
}

// Reduced-resolution cell of a FoV position: componentwise floor division.
inline Vec3i reduced_cell(Vec3i pos, Vec3i delta) {
  return {pos.x / delta.x, pos.y / delta.y, pos.z / delta.z};
}

struct MoveCandidate {
  Vec3i pos;
  float value = 0.0f;
};

// Scans the six planes at +-delta around `pos` (clipped to the +-delta box
// and the canvas bounds) for their maximum mask value; candidates reaching
// t_move come back sorted by value descending. Ties break on plane order
// (-x,+x,-y,+y,-z,+z), then scan order, so the result is deterministic.
std::vector<MoveCandidate> find_new_positions(const ProbabilityCanvas& canvas,
                                              Vec3i pos,
                                              const MovementPolicy& policy);

// Predicts a FoV-sized object-mask probability patch. `begin_object` runs
// once per seed before any prediction; the ground-truth oracle uses it to
// latch the seeded object's identity.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;
  virtual Vec3i fov() const = 0;
  virtual void begin_object(Vec3i seed) { (void)seed; }
  virtual std::vector<float> predict(const BoxRegion& region,
                                     std::span<const float> image_patch,
                                     std::span<const float> mask_patch) = 0;
};

class ModelPredictor : public MaskPredictor {
 public:
  explicit ModelPredictor(const FFNModel<float>& model) : model_(model) {}
  Vec3i fov() const override { return model_.fov; }
  std::vector<float> predict(const BoxRegion& region,
                             std::span<const float> image_patch,
                             std::span<const float> mask_patch) override;

 private:
  const FFNModel<float>& model_;
};

// Answers 0.95 on voxels of the seeded ground-truth object and 0.05
// elsewhere. Isolates the movement mechanics from model quality.
class GroundTruthOracle : public MaskPredictor {
 public:
  GroundTruthOracle(const SegmentationVolume& gt, Vec3i fov)
      : gt_(gt), fov_(fov) {}
  Vec3i fov() const override { return fov_; }
  void begin_object(Vec3i seed) override { label_ = gt_.at(seed); }
  std::vector<float> predict(const BoxRegion& region,
                             std::span<const float> image_patch,
                             std::span<const float> mask_patch) override;

 private:
  const SegmentationVolume& gt_;
  Vec3i fov_;
  std::uint32_t label_ = 0;
};

// Queue/visited-set FoV movement shared by inference and training.
// The callback receives the FoV region and the current canvas crop and must
// return a FoV-sized probability patch. Positions are clamped so the FoV
// stays inside the canvas; with `restrict_box` set, candidates outside the
// inclusive center box are dropped instead (training mode). Returns the
// number of callback evaluations.
struct FloodOptions {
  bool split_bias = true;
  std::optional<BoxRegion> restrict_box;  // inclusive box of legal centers
};

using PredictFn = std::function<std::vector<float>(const BoxRegion&,
                                                   std::span<const float>)>;

std::size_t flood_fill_run(ProbabilityCanvas& canvas, Vec3i start, Vec3i fov,
                           const MovementPolicy& policy, const PredictFn& predict,
                           const FloodOptions& options);

struct ObjectGrowth {
  std::vector<std::size_t> voxels;  // linear indices with canvas >= t_move
  ProbabilityCanvas canvas;
  std::size_t moves = 0;  // predictor evaluations
};

// Grows a single object from `seed`: canvas starts at 0.05 with 0.95 at the
// seed, the FoV walks the move queue with the split bias on, and the final
// object is the canvas thresholded at t_move.
ObjectGrowth segment_object(const ImageVolume& image, Vec3i seed,
                            MaskPredictor& predictor,
                            const MovementPolicy& policy);

struct SegmentationRunLog {
  struct ObjectRecord {
    int seed_index = 0;
    std::uint32_t id = 0;
    Vec3i seed;
    double seed_score = 0.0;
    std::size_t moves = 0;
    std::size_t committed_voxels = 0;
  };
  std::vector<Seed> seeds;
  std::vector<ObjectRecord> objects;
  std::size_t skipped_seeds = 0;
  std::size_t total_predictions = 0;
};

struct SegmentVolumeOptions {
  std::size_t min_object_size = 0;  // 0 disables the filter
  bool keep_canvases = false;
};

struct SegmentVolumeResult {
  SegmentationVolume segmentation;
  SegmentationRunLog log;
  // Present when keep_canvases: one canvas per committed object, aligned
  // with log.objects.
  std::vector<ProbabilityCanvas> canvases;
};

// Runs seeds in list order, skipping any seed already assigned; committed
// objects write only unassigned voxels (first committed wins) under the ID
// seed_index + 1.
SegmentVolumeResult segment_volume(const ImageVolume& image,
                                   MaskPredictor& predictor,
                                   const MovementPolicy& policy,
                                   std::span<const Seed> seeds,
                                   const SegmentVolumeOptions& options = {});

// Convenience overload: derives the seed list from the image.
SegmentVolumeResult segment_volume(const ImageVolume& image,
                                   MaskPredictor& predictor,
                                   const MovementPolicy& policy,
                                   const SeedConfig& seed_config,
                                   const SegmentVolumeOptions& options = {});

std::string format_run_log(const SegmentationRunLog& log);

}  // namespace ffn

#endif  // FFN_INFERENCE_HPP_
