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
#include "ffn/inference.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <limits>
#include <unordered_set>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

std::uint64_t cell_key(Vec3i cell) {
  // Cells are small non-negative triples; 21 bits per axis is plenty.
  return (static_cast<std::uint64_t>(cell.x) << 42) |
         (static_cast<std::uint64_t>(cell.y) << 21) |
         static_cast<std::uint64_t>(cell.z);
}

// Inclusive box of FoV centers that keep the whole FoV inside `dims`.
struct CenterBox {
  Vec3i lo, hi;
};

CenterBox legal_centers(Vec3i dims, Vec3i fov) {
  const Vec3i lo{fov.x / 2, fov.y / 2, fov.z / 2};
  const Vec3i hi{dims.x - 1 - fov.x / 2, dims.y - 1 - fov.y / 2,
                 dims.z - 1 - fov.z / 2};
  if (hi.x < lo.x || hi.y < lo.y || hi.z < lo.z)
    throw ValidationError("field of view " + to_string(fov) +
                          " does not fit into volume " + to_string(dims));
  return {lo, hi};
}

Vec3i clamp_to_box(Vec3i p, const CenterBox& box) {
  return {std::clamp(p.x, box.lo.x, box.hi.x), std::clamp(p.y, box.lo.y, box.hi.y),
          std::clamp(p.z, box.lo.z, box.hi.z)};
}

bool in_box(Vec3i p, const BoxRegion& box) {
  return p.x >= box.corner.x && p.x < box.corner.x + box.size.x &&
         p.y >= box.corner.y && p.y < box.corner.y + box.size.y &&
         p.z >= box.corner.z && p.z < box.corner.z + box.size.z;
}

}  // namespace

void validate_policy(const MovementPolicy& policy) {
  if (policy.delta.x < 1 || policy.delta.y < 1 || policy.delta.z < 1)
    throw ValidationError("movement delta components must be >= 1");
  if (!(policy.t_move > 0.5f) || !(policy.t_move < 1.0f))
    throw ValidationError("t_move must lie in (0.5, 1)");
}

std::vector<MoveCandidate> find_new_positions(const ProbabilityCanvas& canvas,
                                              Vec3i pos,
                                              const MovementPolicy& policy) {
  const Vec3i d = policy.delta;
  const Vec3i edge{canvas.dims.x - 1, canvas.dims.y - 1, canvas.dims.z - 1};
  const Vec3i box_lo = clamp_vec(pos - d, {0, 0, 0}, edge);
  const Vec3i box_hi = clamp_vec(pos + d, {0, 0, 0}, edge);

  std::vector<MoveCandidate> found;
  // Fixed plane order -x,+x,-y,+y,-z,+z. Equal values within a plane resolve
  // to the voxel nearest the current center (then x-fastest scan order):
  // on plateaus — binary oracle masks most of all — this keeps the walk on
  // the structure instead of drifting into plane corners, which starves the
  // reduced-resolution visited set far less often.
  const int offsets[2] = {-1, +1};
  for (int axis = 0; axis < 3; ++axis)
    for (int side : offsets) {
      Vec3i probe = pos;
      probe[axis] += side * d[axis];
      if (probe[axis] < 0 || probe[axis] >= canvas.dims[axis]) continue;

      Vec3i lo = box_lo, hi = box_hi;
      lo[axis] = hi[axis] = probe[axis];
      MoveCandidate best{{0, 0, 0}, -1.0f};
      long best_d2 = std::numeric_limits<long>::max();
      for (int z = lo.z; z <= hi.z; ++z)
        for (int y = lo.y; y <= hi.y; ++y)
          for (int x = lo.x; x <= hi.x; ++x) {
            const float v = canvas.values[linear_index({x, y, z}, canvas.dims)];
            if (v < best.value) continue;
            const long dx = x - pos.x, dy = y - pos.y, dz = z - pos.z;
            const long d2 = dx * dx + dy * dy + dz * dz;
            if (v > best.value || d2 < best_d2) {
              best = {{x, y, z}, v};
              best_d2 = d2;
            }
          }
      if (best.value >= policy.t_move) found.push_back(best);
    }

  std::stable_sort(found.begin(), found.end(),
                   [](const MoveCandidate& a, const MoveCandidate& b) {
                     return a.value > b.value;
                   });
  return found;
}

std::vector<float> ModelPredictor::predict(const BoxRegion& region,
                                           std::span<const float> image_patch,
                                           std::span<const float> mask_patch) {
  (void)region;
  return forward(model_, image_patch, mask_patch);
}

std::vector<float> GroundTruthOracle::predict(const BoxRegion& region,
                                              std::span<const float> image_patch,
                                              std::span<const float> mask_patch) {
  (void)image_patch;
  (void)mask_patch;
  std::vector<float> out(voxel_count(region.size), 0.05f);
  if (label_ == 0) return out;  // background seed claims nothing
  std::size_t i = 0;
  for (int z = 0; z < region.size.z; ++z)
    for (int y = 0; y < region.size.y; ++y)
      for (int x = 0; x < region.size.x; ++x, ++i) {
        const Vec3i p = region.corner + Vec3i{x, y, z};
        if (gt_.at(p) == label_) out[i] = 0.95f;
      }
  return out;
}

std::size_t flood_fill_run(ProbabilityCanvas& canvas, Vec3i start, Vec3i fov,
                           const MovementPolicy& policy, const PredictFn& predict,
                           const FloodOptions& options) {
  validate_policy(policy);
  const CenterBox centers = legal_centers(canvas.dims, fov);
  if (!inside(start, canvas.dims))
    throw ValidationError("flood fill start outside the canvas");
  if (options.restrict_box) {
    const BoxRegion& box = *options.restrict_box;
    const Vec3i last = box.corner + box.size - Vec3i{1, 1, 1};
    if (box.corner.x < centers.lo.x || box.corner.y < centers.lo.y ||
        box.corner.z < centers.lo.z || last.x > centers.hi.x ||
        last.y > centers.hi.y || last.z > centers.hi.z)
      throw ValidationError("restriction box exceeds the legal FoV centers");
    if (!in_box(start, box))
      throw ValidationError("flood fill start outside the restriction box");
  }

  // The queue holds raw in-volume positions; the visited set is keyed on
  // their reduced cells and the FoV is clamped only when evaluated, so border
  // cells still get their prediction instead of collapsing into neighbors.
  std::deque<Vec3i> queue{start};
  std::unordered_set<std::uint64_t> visited;
  std::size_t evaluations = 0;

  while (!queue.empty()) {
    const Vec3i raw = queue.front();
    queue.pop_front();
    // Re-check at dequeue: distinct steps can enqueue the same reduced cell.
    if (!visited.insert(cell_key(reduced_cell(raw, policy.delta))).second)
      continue;

    const Vec3i pos =
        options.restrict_box ? raw : clamp_to_box(raw, centers);
    const BoxRegion region = centered_region(pos, fov);
    std::vector<float> patch = predict(region, crop_values(canvas, region));
    if (patch.size() != voxel_count(fov))
      throw ValidationError("predictor returned a patch of the wrong size");
    write_patch(canvas, region, patch, options.split_bias);
    ++evaluations;

    for (const MoveCandidate& cand : find_new_positions(canvas, pos, policy)) {
      if (options.restrict_box && !in_box(cand.pos, *options.restrict_box))
        continue;
      if (visited.count(cell_key(reduced_cell(cand.pos, policy.delta))))
        continue;
      queue.push_back(cand.pos);
    }
  }
  return evaluations;
}

ObjectGrowth segment_object(const ImageVolume& image, Vec3i seed,
                            MaskPredictor& predictor,
                            const MovementPolicy& policy) {
  if (!inside(seed, image.dims))
    throw ValidationError("segment_object: seed " + to_string(seed) +
                          " outside volume " + to_string(image.dims));

  ObjectGrowth growth{{}, ProbabilityCanvas(image.dims), 0};
  // Seeding is initialization, not a network write: update_count stays 0 and
  // the first prediction may overwrite the 0.95.
  growth.canvas.values[linear_index(seed, image.dims)] = 0.95f;

  predictor.begin_object(seed);
  const PredictFn fn = [&](const BoxRegion& region,
                           std::span<const float> mask_patch) {
    const ImageVolume patch = crop(image, region);
    return predictor.predict(region, patch.voxels, mask_patch);
  };
  growth.moves = flood_fill_run(growth.canvas, seed, predictor.fov(), policy, fn,
                                FloodOptions{});

  for (std::size_t i = 0; i < growth.canvas.values.size(); ++i)
    if (growth.canvas.values[i] >= policy.t_move) growth.voxels.push_back(i);
  return growth;
}

SegmentVolumeResult segment_volume(const ImageVolume& image,
                                   MaskPredictor& predictor,
                                   const MovementPolicy& policy,
                                   std::span<const Seed> seeds,
                                   const SegmentVolumeOptions& options) {
  SegmentVolumeResult result{make_segmentation(image.dims), {}, {}};
  result.log.seeds.assign(seeds.begin(), seeds.end());

  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const Seed& seed = seeds[i];
    if (!inside(seed.pos, image.dims))
      throw ValidationError("segment_volume: seed " + to_string(seed.pos) +
                            " outside volume " + to_string(image.dims));
    if (result.segmentation.at(seed.pos) != 0) {
      ++result.log.skipped_seeds;
      continue;
    }

    ObjectGrowth growth = segment_object(image, seed.pos, predictor, policy);
    result.log.total_predictions += growth.moves;
    if (growth.voxels.empty() || growth.voxels.size() < options.min_object_size)
      continue;

    const auto id = static_cast<std::uint32_t>(i + 1);
    std::size_t committed = 0;
    for (std::size_t v : growth.voxels)
      if (result.segmentation.labels[v] == 0) {
        result.segmentation.labels[v] = id;
        ++committed;
      }
    if (committed == 0) continue;  // fully shadowed by earlier objects

    result.log.objects.push_back({static_cast<int>(i), id, seed.pos, seed.score,
                                  growth.moves, committed});
    if (options.keep_canvases) result.canvases.push_back(std::move(growth.canvas));
  }
  return result;
}

SegmentVolumeResult segment_volume(const ImageVolume& image,
                                   MaskPredictor& predictor,
                                   const MovementPolicy& policy,
                                   const SeedConfig& seed_config,
                                   const SegmentVolumeOptions& options) {
  const std::vector<Seed> seeds = seed_points(image, seed_config);
  return segment_volume(image, predictor, policy, seeds, options);
}

std::string format_run_log(const SegmentationRunLog& log) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line),
                "seeds: %zu  objects: %zu  skipped: %zu  predictions: %zu\n",
                log.seeds.size(), log.objects.size(), log.skipped_seeds,
                log.total_predictions);
  out += line;
  for (const auto& obj : log.objects) {
    std::snprintf(line, sizeof(line),
                  "object %u: seed #%d at (%d, %d, %d) score %.4f moves %zu "
                  "voxels %zu\n",
                  obj.id, obj.seed_index, obj.seed.x, obj.seed.y, obj.seed.z,
                  obj.seed_score, obj.moves, obj.committed_voxels);
    out += line;
  }
  return out;
}

}  // namespace ffn
