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
#ifndef FFN_METRICS_HPP_
#define FFN_METRICS_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ffn/geometry.hpp"
#include "ffn/volume.hpp"

namespace ffn {

struct SkeletonNode {
  int id = 0;
  Vec3i pos;
};

// Ground-truth centerline topology of one object. Typically a tree; cycles
// only produce a warning since annotated skeletons occasionally have them.
struct Skeleton {
  int id = 0;
  std::vector<SkeletonNode> nodes;
  std::vector<std::pair<int, int>> edges;  // node id pairs

  int node_index(int node_id) const;  // -1 when absent
};

bool is_forest(const Skeleton& s);

enum class EdgeCategory { kCorrect, kSplit, kMerged, kOmitted };

struct EdgeClassification {
  struct Entry {
    int skeleton_index = 0;  // index into the evaluated skeleton list
    int edge_index = 0;
    EdgeCategory category = EdgeCategory::kCorrect;
    bool adjusted_correct = false;  // omitted edge re-admitted by adjustment
  };
  std::vector<Entry> entries;
};

struct EvaluationReport {
  double edge_accuracy_pct = 0.0;
  double merged_pct = 0.0;
  double split_pct = 0.0;
  double omitted_adjusted_pct = 0.0;
  double omitted_raw_pct = 0.0;
  std::size_t total_edges = 0;
};

// Classifies every edge with precedence omitted -> split -> merged -> correct:
//  - omitted: either endpoint maps to background (ID 0),
//  - split:   endpoints map to different non-zero IDs,
//  - merged:  the edge's ID is also touched by a node of another skeleton,
//  - correct: none of the above.
EdgeClassification classify_edges(std::span<const Skeleton> skeletons,
                                  const SegmentationVolume& R);

// Re-admits omitted edges as correct when (a) an endpoint has degree one in
// its skeleton, or (b) the edge lies in a connected component of omitted
// edges touching two or more nodes that carry the same non-zero ID. Split and
// merged edges are never touched.
EdgeClassification adjust_omitted(const EdgeClassification& classification,
                                  std::span<const Skeleton> skeletons,
                                  const SegmentationVolume& R);

// Percentages over all edges; adjusted omissions count toward accuracy.
EvaluationReport edge_accuracy(const EdgeClassification& classification);

struct SegemCounts {
  std::size_t splits = 0;
  std::size_t mergers = 0;
};

// SegEM-style tally: a skeleton corresponds to a predicted segment when at
// least k of its nodes land in that segment (background never corresponds).
// splits  = sum over skeletons  of max(0, corresponding segments  - 1)
// mergers = sum over segments   of max(0, corresponding skeletons - 1)
SegemCounts segem_counts(std::span<const Skeleton> skeletons,
                         const SegmentationVolume& R, int k);

// Text format, one skeleton per block:
//   ffnskel 1
//   skeleton <id>
//   node <node-id> <x> <y> <z>
//   edge <node-id> <node-id>
std::vector<Skeleton> load_skeletons(const std::string& path);
void save_skeletons(std::span<const Skeleton> skeletons, const std::string& path);

std::string format_report_table(const EvaluationReport& report);
std::string format_report_keyvalues(const EvaluationReport& report,
                                    const SegemCounts& k1, const SegemCounts& k2);

}  // namespace ffn

#endif  // FFN_METRICS_HPP_
