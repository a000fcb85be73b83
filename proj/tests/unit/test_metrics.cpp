#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <vector>

#include <metrics_oracle.hpp>

#include "ffn/errors.hpp"
#include "ffn/metrics.hpp"

using namespace ffn;
namespace oracle = testsupport::oracle;

namespace {

Skeleton make_path(int id, const std::vector<Vec3i>& positions) {
  Skeleton s;
  s.id = id;
  for (std::size_t i = 0; i < positions.size(); ++i)
    s.nodes.push_back({static_cast<int>(i + 1), positions[i]});
  for (std::size_t i = 0; i + 1 < positions.size(); ++i)
    s.edges.emplace_back(static_cast<int>(i + 1), static_cast<int>(i + 2));
  return s;
}

void paint(SegmentationVolume& R, const Skeleton& s, std::uint32_t id) {
  for (const SkeletonNode& n : s.nodes) R.at(n.pos) = id;
}

std::map<EdgeCategory, std::size_t> tally(const EdgeClassification& c) {
  std::map<EdgeCategory, std::size_t> counts;
  for (const auto& e : c.entries) ++counts[e.category];
  return counts;
}

}  // namespace

TEST_CASE("perfect segmentation classifies every edge correct") {
  SegmentationVolume R = make_segmentation({10, 10, 3});
  std::vector<Skeleton> sks{
      make_path(1, {{1, 1, 1}, {3, 1, 1}, {5, 1, 1}}),
      make_path(2, {{1, 5, 1}, {3, 5, 1}, {5, 5, 1}, {7, 5, 1}})};
  paint(R, sks[0], 4);
  paint(R, sks[1], 9);
  EdgeClassification c = classify_edges(sks, R);
  REQUIRE(c.entries.size() == 5);
  for (const auto& e : c.entries) CHECK(e.category == EdgeCategory::kCorrect);

  EvaluationReport report = edge_accuracy(adjust_omitted(c, sks, R));
  CHECK(report.edge_accuracy_pct == 100.0);
  CHECK(report.merged_pct == 0.0);
  CHECK(report.split_pct == 0.0);
  CHECK(report.omitted_adjusted_pct == 0.0);
  CHECK(report.omitted_raw_pct == 0.0);
}

TEST_CASE("two skeletons sharing one predicted ID merge everywhere") {
  SegmentationVolume R = make_segmentation({10, 10, 3});
  std::vector<Skeleton> sks{make_path(1, {{1, 1, 1}, {3, 1, 1}, {5, 1, 1}}),
                            make_path(2, {{1, 5, 1}, {3, 5, 1}})};
  paint(R, sks[0], 7);
  paint(R, sks[1], 7);
  EdgeClassification c = classify_edges(sks, R);
  REQUIRE(c.entries.size() == 3);
  for (const auto& e : c.entries) CHECK(e.category == EdgeCategory::kMerged);
}

TEST_CASE("endpoints in distinct exclusive IDs make a split edge") {
  SegmentationVolume R = make_segmentation({10, 4, 3});
  std::vector<Skeleton> sks{make_path(1, {{1, 1, 1}, {3, 1, 1}})};
  R.at({1, 1, 1}) = 1;
  R.at({3, 1, 1}) = 2;
  EdgeClassification c = classify_edges(sks, R);
  REQUIRE(c.entries.size() == 1);
  CHECK(c.entries[0].category == EdgeCategory::kSplit);
}

TEST_CASE("omission takes precedence over split and merge") {
  SegmentationVolume R = make_segmentation({10, 10, 3});
  std::vector<Skeleton> sks{make_path(1, {{1, 1, 1}, {3, 1, 1}}),
                            make_path(2, {{1, 5, 1}, {3, 5, 1}})};
  R.at({1, 1, 1}) = 5;  // other endpoint background
  R.at({1, 5, 1}) = 5;  // contaminates ID 5 across skeletons
  R.at({3, 5, 1}) = 5;
  EdgeClassification c = classify_edges(sks, R);
  CHECK(c.entries[0].category == EdgeCategory::kOmitted);
  CHECK(c.entries[1].category == EdgeCategory::kMerged);
}

TEST_CASE("node outside the volume is an error") {
  SegmentationVolume R = make_segmentation({4, 4, 4});
  std::vector<Skeleton> sks{make_path(1, {{1, 1, 1}, {5, 1, 1}})};
  CHECK_THROWS_AS(classify_edges(sks, R), ValidationError);
}

TEST_CASE("adjustment rule (a): leaf edge onto background becomes correct") {
  SegmentationVolume R = make_segmentation({10, 4, 3});
  std::vector<Skeleton> sks{make_path(1, {{1, 1, 1}, {3, 1, 1}, {5, 1, 1}})};
  R.at({1, 1, 1}) = 3;
  R.at({3, 1, 1}) = 3;  // leaf node (5,1,1) stays background
  EdgeClassification c = adjust_omitted(classify_edges(sks, R), sks, R);
  CHECK(c.entries[0].category == EdgeCategory::kCorrect);
  CHECK(c.entries[1].category == EdgeCategory::kOmitted);
  CHECK(c.entries[1].adjusted_correct);

  EvaluationReport report = edge_accuracy(c);
  CHECK(report.edge_accuracy_pct == 100.0);
  CHECK(report.omitted_adjusted_pct == 0.0);
  CHECK(report.omitted_raw_pct == 50.0);
}

TEST_CASE("adjustment rule (b): interior gap flanked by one ID becomes correct") {
  // Chain of 3 omitted edges; the two flanking labeled nodes share ID 7.
  SegmentationVolume R = make_segmentation({12, 4, 3});
  std::vector<Skeleton> sks{make_path(
      1, {{1, 1, 1}, {3, 1, 1}, {5, 1, 1}, {7, 1, 1}, {9, 1, 1}, {11, 1, 1}})};
  R.at({1, 1, 1}) = 7;
  R.at({3, 1, 1}) = 7;   // edge 1-2 correct
  R.at({9, 1, 1}) = 7;   // nodes 3,4 background: edges 2-3, 3-4, 4-5 omitted
  R.at({11, 1, 1}) = 7;  // edge 5-6 correct
  EdgeClassification c = adjust_omitted(classify_edges(sks, R), sks, R);
  REQUIRE(c.entries.size() == 5);
  CHECK(c.entries[0].category == EdgeCategory::kCorrect);
  CHECK(c.entries[4].category == EdgeCategory::kCorrect);
  for (int e : {1, 2, 3}) {
    CHECK(c.entries[e].category == EdgeCategory::kOmitted);
    CHECK(c.entries[e].adjusted_correct);
  }
  CHECK(edge_accuracy(c).edge_accuracy_pct == 100.0);
}

TEST_CASE("adjustment rule (b) fails across different flanking IDs") {
  SegmentationVolume R = make_segmentation({12, 4, 3});
  std::vector<Skeleton> sks{make_path(
      1, {{1, 1, 1}, {3, 1, 1}, {5, 1, 1}, {7, 1, 1}, {9, 1, 1}, {11, 1, 1}})};
  R.at({1, 1, 1}) = 7;
  R.at({3, 1, 1}) = 7;
  R.at({9, 1, 1}) = 8;  // flanking IDs differ: 7 vs 8
  R.at({11, 1, 1}) = 8;
  EdgeClassification c = adjust_omitted(classify_edges(sks, R), sks, R);
  CHECK(c.entries[1].adjusted_correct == false);  // 2-3: interior, unbridged
  CHECK(c.entries[2].adjusted_correct == false);
  CHECK(c.entries[3].adjusted_correct == false);
}

TEST_CASE("hand-enumerated 10-edge scene") {
  SegmentationVolume R = make_segmentation({12, 5, 1});
  std::vector<Skeleton> sks{
      make_path(1, {{0, 1, 0}, {2, 1, 0}, {4, 1, 0}, {6, 1, 0}, {8, 1, 0}, {10, 1, 0}}),
      make_path(2, {{0, 3, 0}, {2, 3, 0}, {4, 3, 0}, {6, 3, 0}, {8, 3, 0}, {10, 3, 0}})};
  // Skeleton 1: [1] [1] [1|3 split] [3] merged [3] | leaf omitted
  R.at({0, 1, 0}) = 1;
  R.at({2, 1, 0}) = 1;
  R.at({4, 1, 0}) = 1;
  R.at({6, 1, 0}) = 3;
  R.at({8, 1, 0}) = 3;
  // Skeleton 2: [2] [2] [2|3 split] [3] | interior omitted | leaf omitted [2]
  R.at({0, 3, 0}) = 2;
  R.at({2, 3, 0}) = 2;
  R.at({4, 3, 0}) = 2;
  R.at({6, 3, 0}) = 3;
  R.at({10, 3, 0}) = 2;

  EdgeClassification c = adjust_omitted(classify_edges(sks, R), sks, R);
  REQUIRE(c.entries.size() == 10);
  auto counts = tally(c);
  CHECK(counts[EdgeCategory::kCorrect] == 4);
  CHECK(counts[EdgeCategory::kSplit] == 2);
  CHECK(counts[EdgeCategory::kMerged] == 1);
  CHECK(counts[EdgeCategory::kOmitted] == 3);

  EvaluationReport report = edge_accuracy(c);
  CHECK(report.total_edges == 10);
  CHECK(report.edge_accuracy_pct == doctest::Approx(60.0));  // 4 + 2 adjusted
  CHECK(report.merged_pct == doctest::Approx(10.0));
  CHECK(report.split_pct == doctest::Approx(20.0));
  CHECK(report.omitted_adjusted_pct == doctest::Approx(10.0));
  CHECK(report.omitted_raw_pct == doctest::Approx(30.0));
  CHECK(report.edge_accuracy_pct + report.merged_pct + report.split_pct +
            report.omitted_adjusted_pct ==
        doctest::Approx(100.0));
}

TEST_CASE("edge_accuracy rejects an empty edge set") {
  CHECK_THROWS_AS(edge_accuracy(EdgeClassification{}), ValidationError);
}

TEST_CASE("brute-force equivalence on random micro-scenes") {
  std::mt19937_64 rng(1234);
  for (int scene = 0; scene < 60; ++scene) {
    auto [sks, R] = oracle::random_scene(rng);

    EdgeClassification c = adjust_omitted(classify_edges(sks, R), sks, R);
    for (const auto& entry : c.entries) {
      const auto expected = oracle::classify_one(sks, R, entry.skeleton_index,
                                                 entry.edge_index);
      CHECK(entry.category == expected);
      if (expected == EdgeCategory::kOmitted) {
        CHECK(entry.adjusted_correct ==
              oracle::adjusts_to_correct(sks, R, entry.skeleton_index,
                                         entry.edge_index));
      } else {
        CHECK(!entry.adjusted_correct);
      }
    }
  }
}

TEST_CASE("report is invariant under nonzero ID permutation") {
  SegmentationVolume R = make_segmentation({12, 5, 1});
  std::vector<Skeleton> sks{
      make_path(1, {{0, 1, 0}, {2, 1, 0}, {4, 1, 0}, {6, 1, 0}}),
      make_path(2, {{0, 3, 0}, {2, 3, 0}, {4, 3, 0}})};
  std::mt19937_64 rng(5);
  for (auto& l : R.labels) l = static_cast<std::uint32_t>(rng() % 4);

  auto report_of = [&](const SegmentationVolume& vol) {
    return edge_accuracy(adjust_omitted(classify_edges(sks, vol), sks, vol));
  };
  EvaluationReport before = report_of(R);

  SegmentationVolume permuted = R;
  const std::uint32_t perm[4] = {0, 17, 5, 99};  // bijection on {1,2,3}
  for (auto& l : permuted.labels) l = perm[l];
  EvaluationReport after = report_of(permuted);

  CHECK(before.edge_accuracy_pct == after.edge_accuracy_pct);
  CHECK(before.merged_pct == after.merged_pct);
  CHECK(before.split_pct == after.split_pct);
  CHECK(before.omitted_adjusted_pct == after.omitted_adjusted_pct);
  CHECK(before.omitted_raw_pct == after.omitted_raw_pct);
}

TEST_CASE("merging two exclusive IDs never helps the edge metric") {
  std::mt19937_64 rng(77);
  int tested = 0;
  for (int scene = 0; scene < 40 && tested < 15; ++scene) {
    SegmentationVolume R = make_segmentation({8, 8, 4});
    for (auto& l : R.labels) l = static_cast<std::uint32_t>(rng() % 6);
    std::vector<Skeleton> sks;
    for (int si = 0; si < 2; ++si) {
      std::vector<Vec3i> pos;
      for (int ni = 0; ni < 5; ++ni)
        pos.push_back({static_cast<int>(rng() % 8), static_cast<int>(rng() % 8),
                       static_cast<int>(rng() % 4)});
      sks.push_back(make_path(si + 1, pos));
    }

    // Need an ID touched only by skeleton 0 and one touched only by 1.
    std::set<std::uint32_t> touched[2];
    for (int si = 0; si < 2; ++si)
      for (const auto& n : sks[si].nodes)
        if (R.at(n.pos) != 0) touched[si].insert(R.at(n.pos));
    std::uint32_t id_a = 0, id_b = 0;
    for (auto id : touched[0])
      if (!touched[1].count(id)) id_a = id;
    for (auto id : touched[1])
      if (!touched[0].count(id)) id_b = id;
    if (id_a == 0 || id_b == 0) continue;
    ++tested;

    auto report_of = [&](const SegmentationVolume& vol) {
      return edge_accuracy(adjust_omitted(classify_edges(sks, vol), sks, vol));
    };
    EvaluationReport before = report_of(R);
    SegmentationVolume merged = R;
    for (auto& l : merged.labels)
      if (l == id_b) l = id_a;
    EvaluationReport after = report_of(merged);

    CHECK(after.merged_pct >= before.merged_pct);
    CHECK(after.edge_accuracy_pct <= before.edge_accuracy_pct);
  }
  CHECK(tested >= 15);
}

TEST_CASE("segem counts") {
  SegmentationVolume R = make_segmentation({12, 8, 2});
  std::vector<Skeleton> sks{
      make_path(1, {{0, 1, 0}, {2, 1, 0}, {4, 1, 0}, {6, 1, 0}}),
      make_path(2, {{0, 5, 0}, {2, 5, 0}, {4, 5, 0}})};

  SUBCASE("perfect segmentation -> (0,0)") {
    paint(R, sks[0], 1);
    paint(R, sks[1], 2);
    SegemCounts counts = segem_counts(sks, R, 1);
    CHECK(counts.splits == 0);
    CHECK(counts.mergers == 0);
  }
  SUBCASE("one segment holding k nodes of both skeletons -> mergers 1") {
    paint(R, sks[0], 1);
    paint(R, sks[1], 1);
    SegemCounts counts = segem_counts(sks, R, 2);
    CHECK(counts.mergers == 1);
    CHECK(counts.splits == 0);
  }
  SUBCASE("skeleton across two segments -> splits 1") {
    R.at({0, 1, 0}) = 1;
    R.at({2, 1, 0}) = 1;
    R.at({4, 1, 0}) = 4;
    R.at({6, 1, 0}) = 4;
    paint(R, sks[1], 2);
    SegemCounts counts = segem_counts(sks, R, 2);
    CHECK(counts.splits == 1);
    CHECK(counts.mergers == 0);
  }
  SUBCASE("k=2 ignores single stray nodes") {
    paint(R, sks[0], 1);
    paint(R, sks[1], 2);
    R.at({4, 5, 0}) = 1;  // one node of skeleton 2 strays into segment 1
    CHECK(segem_counts(sks, R, 2).mergers == 0);
    CHECK(segem_counts(sks, R, 1).mergers == 1);
  }
  SUBCASE("single segment over all N skeletons -> mergers N-1, splits 0") {
    std::vector<Skeleton> many;
    SegmentationVolume vol = make_segmentation({12, 8, 2}, 6);
    for (int si = 0; si < 4; ++si)
      many.push_back(make_path(si + 1, {{si * 2, 1, 0}, {si * 2, 3, 0}}));
    SegemCounts counts = segem_counts(many, vol, 1);
    CHECK(counts.mergers == 3);
    CHECK(counts.splits == 0);
  }
  SUBCASE("k < 1 rejected") {
    CHECK_THROWS_AS(segem_counts(sks, R, 0), ValidationError);
  }
}

TEST_CASE("skeleton file round-trip") {
  std::vector<Skeleton> sks{make_path(3, {{1, 2, 3}, {4, 5, 6}})};
  sks[0].nodes[0].id = 11;  // sparse ids survive
  sks[0].edges[0] = {11, 2};
  save_skeletons(sks, "skel_test_rt");
  std::vector<Skeleton> loaded = load_skeletons("skel_test_rt");
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].id == 3);
  REQUIRE(loaded[0].nodes.size() == 2);
  CHECK(loaded[0].nodes[0].id == 11);
  CHECK(loaded[0].nodes[0].pos == Vec3i{1, 2, 3});
  CHECK(loaded[0].edges == sks[0].edges);

  // Saving the loaded list reproduces the file byte for byte.
  save_skeletons(loaded, "skel_test_rt2");
  std::ifstream f1("skel_test_rt"), f2("skel_test_rt2");
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
}

TEST_CASE("skeleton file errors") {
  SUBCASE("dangling edge names the edge") {
    std::ofstream f("skel_test_dangling");
    f << "ffnskel 1\nskeleton 1\nnode 1 0 0 0\nnode 2 1 0 0\nedge 1 9\n";
    f.close();
    try {
      load_skeletons("skel_test_dangling");
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("(1,9)") != std::string::npos);
    }
  }
  SUBCASE("duplicate node id") {
    std::ofstream f("skel_test_dup");
    f << "ffnskel 1\nskeleton 1\nnode 1 0 0 0\nnode 1 1 0 0\n";
    f.close();
    CHECK_THROWS_AS(load_skeletons("skel_test_dup"), IoError);
  }
  SUBCASE("bad magic") {
    std::ofstream f("skel_test_magic");
    f << "wrong 1\n";
    f.close();
    CHECK_THROWS_AS(load_skeletons("skel_test_magic"), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_skeletons("skel_test_missing"), IoError);
  }
}

TEST_CASE("221-fragment file loads into 221 records") {
  std::vector<Skeleton> many;
  for (int i = 0; i < 221; ++i)
    many.push_back(make_path(i + 1, {{i % 50, i % 30, i % 20},
                                     {(i + 1) % 50, i % 30, i % 20}}));
  save_skeletons(many, "skel_test_221");
  CHECK(load_skeletons("skel_test_221").size() == 221);
}

TEST_CASE("is_forest flags cycles and self-loops") {
  Skeleton tree = make_path(1, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  CHECK(is_forest(tree));
  Skeleton cyclic = tree;
  cyclic.edges.emplace_back(3, 1);  // close the loop
  CHECK(!is_forest(cyclic));
  Skeleton self_loop = tree;
  self_loop.edges.emplace_back(1, 1);
  CHECK(!is_forest(self_loop));
}

TEST_CASE("report formatting carries the five columns") {
  EvaluationReport report;
  report.edge_accuracy_pct = 98.5;
  report.merged_pct = 0.0;
  report.split_pct = 0.7;
  report.omitted_adjusted_pct = 0.8;
  report.omitted_raw_pct = 2.4;
  report.total_edges = 1000;
  const std::string table = format_report_table(report);
  CHECK(table.find("98.5%") != std::string::npos);
  CHECK(table.find("Edge accuracy") != std::string::npos);
  CHECK(table.find("Omitted (adj)") != std::string::npos);

  const std::string kv = format_report_keyvalues(report, {1, 2}, {3, 4});
  CHECK(kv.find("edge_accuracy_pct 98.500") != std::string::npos);
  CHECK(kv.find("segem_k1_splits 1\n") != std::string::npos);
  CHECK(kv.find("segem_k2_mergers 4\n") != std::string::npos);
}
