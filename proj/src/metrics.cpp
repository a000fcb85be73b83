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
#include "ffn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

// Plain union-find over dense indices.
struct DisjointSet {
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  // Returns false if already joined.
  bool join(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[a] = b;
    return true;
  }
  std::vector<std::size_t> parent;
};

std::unordered_map<int, int> node_map(const Skeleton& s) {
  std::unordered_map<int, int> map;
  map.reserve(s.nodes.size());
  for (std::size_t i = 0; i < s.nodes.size(); ++i)
    map.emplace(s.nodes[i].id, static_cast<int>(i));
  return map;
}

// Per-node segment IDs, with bounds and edge-reference validation.
std::vector<std::vector<std::uint32_t>> node_labels(
    std::span<const Skeleton> skeletons, const SegmentationVolume& R) {
  std::vector<std::vector<std::uint32_t>> labels(skeletons.size());
  for (std::size_t si = 0; si < skeletons.size(); ++si) {
    const Skeleton& s = skeletons[si];
    labels[si].reserve(s.nodes.size());
    for (const SkeletonNode& n : s.nodes) {
      if (!inside(n.pos, R.dims))
        throw ValidationError("skeleton " + std::to_string(s.id) + " node " +
                              std::to_string(n.id) + " outside volume " +
                              to_string(R.dims));
      labels[si].push_back(R.at(n.pos));
    }
    const auto map = node_map(s);
    for (const auto& [a, b] : s.edges)
      if (!map.count(a) || !map.count(b))
        throw ValidationError("skeleton " + std::to_string(s.id) +
                              " edge references missing node");
    if (!is_forest(s))
      std::cerr << "warning: skeleton " << s.id << " contains a cycle\n";
  }
  return labels;
}

}  // namespace

int Skeleton::node_index(int node_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == node_id) return static_cast<int>(i);
  return -1;
}

bool is_forest(const Skeleton& s) {
  const auto map = node_map(s);
  DisjointSet ds(s.nodes.size());
  for (const auto& [a, b] : s.edges) {
    const auto ia = map.find(a), ib = map.find(b);
    if (ia == map.end() || ib == map.end()) return false;
    if (ia->second == ib->second) return false;  // self-loop
    if (!ds.join(ia->second, ib->second)) return false;
  }
  return true;
}

EdgeClassification classify_edges(std::span<const Skeleton> skeletons,
                                  const SegmentationVolume& R) {
  const auto labels = node_labels(skeletons, R);

  // An ID touched by nodes of two different skeletons contaminates every
  // edge mapping to it.
  std::unordered_map<std::uint32_t, int> first_toucher;
  std::unordered_set<std::uint32_t> contaminated;
  for (std::size_t si = 0; si < skeletons.size(); ++si)
    for (std::uint32_t id : labels[si]) {
      if (id == 0) continue;
      auto [it, fresh] = first_toucher.emplace(id, static_cast<int>(si));
      if (!fresh && it->second != static_cast<int>(si)) contaminated.insert(id);
    }

  EdgeClassification result;
  for (std::size_t si = 0; si < skeletons.size(); ++si) {
    const Skeleton& s = skeletons[si];
    const auto map = node_map(s);
    for (std::size_t ei = 0; ei < s.edges.size(); ++ei) {
      const std::uint32_t la = labels[si][map.at(s.edges[ei].first)];
      const std::uint32_t lb = labels[si][map.at(s.edges[ei].second)];
      EdgeCategory category;
      if (la == 0 || lb == 0)
        category = EdgeCategory::kOmitted;
      else if (la != lb)
        category = EdgeCategory::kSplit;
      else if (contaminated.count(la))
        category = EdgeCategory::kMerged;
      else
        category = EdgeCategory::kCorrect;
      result.entries.push_back({static_cast<int>(si), static_cast<int>(ei),
                                category, false});
    }
  }
  return result;
}

EdgeClassification adjust_omitted(const EdgeClassification& classification,
                                  std::span<const Skeleton> skeletons,
                                  const SegmentationVolume& R) {
  const auto labels = node_labels(skeletons, R);
  EdgeClassification result = classification;

  // Group the classification entries per skeleton for the subgraph pass.
  std::vector<std::vector<std::size_t>> by_skeleton(skeletons.size());
  for (std::size_t i = 0; i < result.entries.size(); ++i)
    by_skeleton[result.entries[i].skeleton_index].push_back(i);

  for (std::size_t si = 0; si < skeletons.size(); ++si) {
    const Skeleton& s = skeletons[si];
    const auto map = node_map(s);

    std::vector<int> degree(s.nodes.size(), 0);
    for (const auto& [a, b] : s.edges) {
      ++degree[map.at(a)];
      ++degree[map.at(b)];
    }

    // Connected components of the omitted-edge subgraph.
    DisjointSet ds(s.nodes.size());
    for (std::size_t idx : by_skeleton[si]) {
      const auto& entry = result.entries[idx];
      if (entry.category != EdgeCategory::kOmitted) continue;
      const auto& [a, b] = s.edges[entry.edge_index];
      ds.join(map.at(a), map.at(b));
    }

    // Rule (b): a component qualifies when >= 2 of its nodes carry the same
    // non-zero ID (e.g. a gap across an unsegmented organelle interior).
    // Distinct nodes are counted, not edge incidences.
    std::unordered_map<std::size_t, std::map<std::uint32_t, int>> touches;
    std::vector<char> seen(s.nodes.size(), 0);
    for (std::size_t idx : by_skeleton[si]) {
      const auto& entry = result.entries[idx];
      if (entry.category != EdgeCategory::kOmitted) continue;
      const auto& [a, b] = s.edges[entry.edge_index];
      for (int n : {map.at(a), map.at(b)}) {
        if (seen[n]) continue;
        seen[n] = 1;
        const std::uint32_t id = labels[si][n];
        if (id != 0) ++touches[ds.find(n)][id];
      }
    }
    std::unordered_set<std::size_t> qualified;
    for (const auto& [root, ids] : touches)
      for (const auto& [id, count] : ids)
        if (count >= 2) qualified.insert(root);

    for (std::size_t idx : by_skeleton[si]) {
      auto& entry = result.entries[idx];
      if (entry.category != EdgeCategory::kOmitted) continue;
      const auto& [a, b] = s.edges[entry.edge_index];
      const bool leaf = degree[map.at(a)] == 1 || degree[map.at(b)] == 1;
      const bool bridged = qualified.count(ds.find(map.at(a))) != 0;
      entry.adjusted_correct = leaf || bridged;
    }
  }
  return result;
}

EvaluationReport edge_accuracy(const EdgeClassification& classification) {
  const std::size_t total = classification.entries.size();
  if (total == 0) throw ValidationError("edge_accuracy: zero edges");

  std::size_t correct = 0, split = 0, merged = 0, omitted = 0, adjusted = 0;
  for (const auto& entry : classification.entries) {
    switch (entry.category) {
      case EdgeCategory::kCorrect: ++correct; break;
      case EdgeCategory::kSplit: ++split; break;
      case EdgeCategory::kMerged: ++merged; break;
      case EdgeCategory::kOmitted:
        ++omitted;
        if (entry.adjusted_correct) ++adjusted;
        break;
    }
  }

  const double pct = 100.0 / static_cast<double>(total);
  EvaluationReport report;
  report.total_edges = total;
  report.edge_accuracy_pct = pct * static_cast<double>(correct + adjusted);
  report.merged_pct = pct * static_cast<double>(merged);
  report.split_pct = pct * static_cast<double>(split);
  report.omitted_adjusted_pct = pct * static_cast<double>(omitted - adjusted);
  report.omitted_raw_pct = pct * static_cast<double>(omitted);
  return report;
}

SegemCounts segem_counts(std::span<const Skeleton> skeletons,
                         const SegmentationVolume& R, int k) {
  if (k < 1) throw ValidationError("segem_counts: k must be >= 1");
  const auto labels = node_labels(skeletons, R);

  // Node tallies per (skeleton, segment) pair.
  std::map<std::pair<std::size_t, std::uint32_t>, int> hits;
  for (std::size_t si = 0; si < skeletons.size(); ++si)
    for (std::uint32_t id : labels[si])
      if (id != 0) ++hits[{si, id}];

  std::unordered_map<std::size_t, int> segments_per_skeleton;
  std::unordered_map<std::uint32_t, int> skeletons_per_segment;
  for (const auto& [key, count] : hits)
    if (count >= k) {
      ++segments_per_skeleton[key.first];
      ++skeletons_per_segment[key.second];
    }

  SegemCounts counts;
  for (const auto& [si, n] : segments_per_skeleton)
    counts.splits += static_cast<std::size_t>(std::max(0, n - 1));
  for (const auto& [id, n] : skeletons_per_segment)
    counts.mergers += static_cast<std::size_t>(std::max(0, n - 1));
  return counts;
}

std::vector<Skeleton> load_skeletons(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open skeleton file: " + path);

  std::string line;
  if (!std::getline(f, line) || line != "ffnskel 1")
    throw IoError("malformed skeleton file " + path + ": bad magic");

  std::vector<Skeleton> skeletons;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    const std::string where = path + ":" + std::to_string(line_no);
    if (tag == "skeleton") {
      Skeleton s;
      if (!(ss >> s.id)) throw IoError("bad skeleton line at " + where);
      skeletons.push_back(std::move(s));
    } else if (tag == "node") {
      if (skeletons.empty()) throw IoError("node before skeleton at " + where);
      SkeletonNode n;
      if (!(ss >> n.id >> n.pos.x >> n.pos.y >> n.pos.z))
        throw IoError("bad node line at " + where);
      if (skeletons.back().node_index(n.id) != -1)
        throw IoError("duplicate node id " + std::to_string(n.id) + " at " + where);
      skeletons.back().nodes.push_back(n);
    } else if (tag == "edge") {
      if (skeletons.empty()) throw IoError("edge before skeleton at " + where);
      int a = 0, b = 0;
      if (!(ss >> a >> b)) throw IoError("bad edge line at " + where);
      skeletons.back().edges.emplace_back(a, b);
    } else {
      throw IoError("unknown record '" + tag + "' at " + where);
    }
  }

  for (const Skeleton& s : skeletons) {
    const auto map = node_map(s);
    for (const auto& [a, b] : s.edges)
      if (!map.count(a) || !map.count(b))
        throw IoError("skeleton " + std::to_string(s.id) + " in " + path +
                      ": edge (" + std::to_string(a) + "," + std::to_string(b) +
                      ") references a missing node");
  }
  return skeletons;
}

void save_skeletons(std::span<const Skeleton> skeletons, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << "ffnskel 1\n";
  for (const Skeleton& s : skeletons) {
    f << "skeleton " << s.id << "\n";
    for (const SkeletonNode& n : s.nodes)
      f << "node " << n.id << " " << n.pos.x << " " << n.pos.y << " " << n.pos.z
        << "\n";
    for (const auto& [a, b] : s.edges) f << "edge " << a << " " << b << "\n";
  }
  if (!f) throw IoError("failed writing " + path);
}

std::string format_report_table(const EvaluationReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "%-14s %8s %8s %14s %14s %8s\n"
                "%13.1f%% %7.1f%% %7.1f%% %13.1f%% %13.1f%% %8zu\n",
                "Edge accuracy", "Merged", "Split", "Omitted (adj)",
                "Omitted (raw)", "Edges", report.edge_accuracy_pct,
                report.merged_pct, report.split_pct, report.omitted_adjusted_pct,
                report.omitted_raw_pct, report.total_edges);
  return buf;
}

std::string format_report_keyvalues(const EvaluationReport& report,
                                    const SegemCounts& k1, const SegemCounts& k2) {
  std::ostringstream out;
  char buf[64];
  auto pct = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return std::string(buf);
  };
  out << "edge_accuracy_pct " << pct(report.edge_accuracy_pct) << "\n"
      << "merged_pct " << pct(report.merged_pct) << "\n"
      << "split_pct " << pct(report.split_pct) << "\n"
      << "omitted_adjusted_pct " << pct(report.omitted_adjusted_pct) << "\n"
      << "omitted_raw_pct " << pct(report.omitted_raw_pct) << "\n"
      << "total_edges " << report.total_edges << "\n"
      << "segem_k1_splits " << k1.splits << "\n"
      << "segem_k1_mergers " << k1.mergers << "\n"
      << "segem_k2_splits " << k2.splits << "\n"
      << "segem_k2_mergers " << k2.mergers << "\n";
  return out.str();
}

}  // namespace ffn
