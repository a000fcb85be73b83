#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "ffn/errors.hpp"
#include "ffn/training.hpp"

using namespace ffn;

namespace {

// Example with `active` of `total` target voxels at 0.95. `tag` rides along
// in the first image voxel so tests can follow individual examples.
TrainingExample make_fixture(int total, int active, float tag = 0.0f) {
  TrainingExample ex;
  ex.image = make_image({total, 1, 1}, 0.0f);
  ex.image.voxels[0] = tag;
  ex.target.assign(static_cast<std::size_t>(total), 0.05f);
  for (int i = 0; i < active; ++i) ex.target[static_cast<std::size_t>(i)] = 0.95f;
  return ex;
}

World tiny_world(std::uint64_t seed) {
  SynthConfig c;
  c.dims = {24, 24, 12};
  c.min_objects = 1;
  c.max_objects = 2;
  c.tube_radius_min = 2.0;
  c.tube_radius_max = 2.4;
  c.tube_length_min = 8;
  c.tube_length_max = 14;
  c.blob_radius_min = 2.5;
  c.blob_radius_max = 3.0;
  c.seed = seed;
  return generate_world(c);
}

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("extract_example builds soft targets around the center object") {
  const Vec3i dims{9, 9, 9};
  ImageVolume image = make_image(dims, 0.25f);
  image.at({4, 4, 4}) = 0.75f;
  SegmentationVolume gt = make_segmentation(dims);
  for (int z = 2; z <= 6; ++z)
    for (int y = 2; y <= 6; ++y)
      for (int x = 2; x <= 6; ++x) gt.at({x, y, z}) = 5;

  SUBCASE("uniform object fills the target with 0.95") {
    const auto ex = extract_example(image, gt, {4, 4, 4}, {5, 5, 5});
    CHECK(ex.dims() == Vec3i{5, 5, 5});
    for (float t : ex.target) CHECK(t == 0.95f);
    CHECK(active_fraction(ex) == 1.0);
    CHECK(ex.image.at({2, 2, 2}) == 0.75f);  // center voxel of the crop
  }

  SUBCASE("fraction counts exactly the center-label voxels") {
    gt.at({2, 2, 2}) = 9;  // different object inside the box
    for (int x = 2; x <= 6; ++x) gt.at({x, 6, 6}) = 0;
    const auto ex = extract_example(image, gt, {4, 4, 4}, {5, 5, 5});
    CHECK(active_fraction(ex) == doctest::Approx((125.0 - 6.0) / 125.0));
    CHECK(ex.target[linear_index({0, 0, 0}, {5, 5, 5})] == 0.05f);
  }

  SUBCASE("background centers and oversize boxes are rejected") {
    CHECK_THROWS_AS(extract_example(image, gt, {0, 0, 0}, {5, 5, 5}),
                    ValidationError);  // label 0
    CHECK_THROWS_AS(extract_example(image, gt, {2, 2, 2}, {7, 7, 7}),
                    ValidationError);  // box sticks out
    SegmentationVolume other = make_segmentation({8, 9, 9});
    CHECK_THROWS_AS(extract_example(image, other, {4, 4, 4}, {5, 5, 5}),
                    ValidationError);  // dims mismatch
  }
}

TEST_CASE("active-fraction classes follow the published boundaries") {
  CHECK(class_of(0.0) == 1);
  CHECK(class_of(0.009) == 1);
  CHECK(class_of(0.01) == 2);
  CHECK(class_of(0.05) == 6);
  CHECK(class_of(0.07) == 7);
  CHECK(class_of(0.075) == 8);
  CHECK(class_of(0.55) == 13);
  CHECK(class_of(0.9) == 17);
  CHECK(class_of(1.0) == 17);
  CHECK_THROWS_AS(class_of(-0.01), ValidationError);
  CHECK_THROWS_AS(class_of(1.01), ValidationError);

  RebalancingBins bad;
  bad.boundaries[3] = bad.boundaries[2];
  CHECK_THROWS_AS(class_of(0.5, bad), ValidationError);
}

TEST_CASE("single-class sources pass through the rebalancer unchanged") {
  int emitted = 0;
  RebalancedStream stream([&]() -> std::optional<TrainingExample> {
    if (emitted >= 5) return std::nullopt;
    return make_fixture(20, 10, static_cast<float>(emitted++) / 10.0f);
  });
  for (int i = 0; i < 5; ++i) {
    auto ex = stream.next();
    REQUIRE(ex.has_value());
    CHECK(ex->image.voxels[0] == doctest::Approx(i / 10.0f));
  }
  CHECK(!stream.next().has_value());
  CHECK(!stream.next().has_value());
}

TEST_CASE("a 90/10 source comes out balanced") {
  int i = 0;
  RebalancedStream stream([&]() -> std::optional<TrainingExample> {
    const bool rare = (i++ % 10 == 0);
    return make_fixture(20, rare ? 1 : 19);  // classes 6 and 17
  });
  int rare_count = 0, common_count = 0;
  for (int n = 0; n < 10000; ++n) {
    auto ex = stream.next();
    REQUIRE(ex.has_value());
    (active_fraction(*ex) < 0.5 ? rare_count : common_count) += 1;
  }
  // Binomial 3-sigma window around 5000 (round robin is far tighter).
  CHECK(std::abs(rare_count - 5000) <= 150);
  CHECK(std::abs(common_count - 5000) <= 150);
}

TEST_CASE("round-robin draining is deterministic") {
  const auto make_source = [] {
    auto counter = std::make_shared<int>(0);
    return [counter]() -> std::optional<TrainingExample> {
      const int i = (*counter)++;
      if (i >= 400) return std::nullopt;
      return make_fixture(20, (i * 7) % 21, static_cast<float>(i));
    };
  };
  RebalancedStream a(make_source()), b(make_source());
  for (;;) {
    auto xa = a.next();
    auto xb = b.next();
    CHECK(xa.has_value() == xb.has_value());
    if (!xa || !xb) break;
    CHECK(xa->image.voxels[0] == xb->image.voxels[0]);
  }
}

TEST_CASE("queues stay bounded while waiting on a rare class") {
  int i = 0;
  RebalancedStream stream(
      [&]() -> std::optional<TrainingExample> {
        const bool rare = (i++ % 100 == 0);
        return make_fixture(20, rare ? 1 : 19);
      },
      RebalancingBins{}, 4);
  int rare_count = 0;
  for (int n = 0; n < 2000; ++n) {
    auto ex = stream.next();
    REQUIRE(ex.has_value());
    rare_count += active_fraction(*ex) < 0.5;
  }
  CHECK(std::abs(rare_count - 1000) <= 1);  // strict alternation after discovery
}

TEST_CASE("train_on_example validates the shape law") {
  FFNModel<float> model = make_zero_model<float>({{9, 9, 5}, 4, 2});
  const MovementPolicy policy{{4, 4, 2}, 0.9f};
  TrainingExample bad;
  bad.image = make_image({17, 17, 7}, 0.5f);  // z too small
  bad.target.assign(voxel_count({17, 17, 7}), 0.95f);
  CHECK_THROWS_AS(train_on_example(model, bad, policy, 0.001f), ValidationError);

  TrainingExample off;
  off.image = make_image({17, 17, 9}, 0.5f);
  off.target.assign(voxel_count({17, 17, 9}), 0.05f);  // center not 0.95
  CHECK_THROWS_AS(train_on_example(model, off, policy, 0.001f), ValidationError);
}

TEST_CASE("a cold model performs exactly one central evaluation") {
  FFNModel<float> model = make_zero_model<float>({{9, 9, 5}, 4, 2});
  const MovementPolicy policy{{4, 4, 2}, 0.9f};
  TrainingExample ex;
  ex.image = make_image({17, 17, 9}, 0.5f);
  ex.target.assign(voxel_count({17, 17, 9}), 0.05f);
  ex.target[linear_index(ex.center(), ex.dims())] = 0.95f;

  const auto losses = train_on_example(model, ex, policy, 0.0f);
  REQUIRE(losses.size() == 1);
  // Zero model answers 0.5 everywhere: loss is ln 2 per FoV voxel.
  CHECK(losses[0] == doctest::Approx(voxel_count({9, 9, 5}) * std::log(2.0)));
}

TEST_CASE("per-move SGD descends on a repeated example") {
  const World w = tiny_world(3);
  REQUIRE(!w.skeletons.empty());
  const Vec3i center = w.skeletons[0].nodes[w.skeletons[0].nodes.size() / 2].pos;
  const Vec3i ex_dims{17, 17, 9};
  const Vec3i safe{std::clamp(center.x, 8, 15), std::clamp(center.y, 8, 15),
                   std::clamp(center.z, 4, 7)};
  if (w.labels.at(safe) == 0) return;  // unlucky clamp: skip quietly
  const TrainingExample ex = extract_example(w.image, w.labels, safe, ex_dims);

  FFNModel<float> model = make_model<float>({{9, 9, 5}, 4, 2}, 17);
  const MovementPolicy policy{{4, 4, 2}, 0.9f};
  double first = 0.0, last = 0.0;
  for (int pass = 0; pass < 10; ++pass) {
    const auto losses = train_on_example(model, ex, policy, 0.001f);
    REQUIRE(!losses.empty());
    const double mean =
        std::accumulate(losses.begin(), losses.end(), 0.0) /
        static_cast<double>(losses.size());
    if (pass == 0) first = mean;
    last = mean;
  }
  CHECK(last < first);
}

TEST_CASE("training loop schedules checkpoints and stops early when stale") {
  const std::vector<World> train = {tiny_world(41), tiny_world(42)};
  const std::vector<World> held_out = {tiny_world(43)};

  TrainLoopConfig config;
  config.example_dims = {17, 17, 9};
  config.policy = MovementPolicy{{4, 4, 2}, 0.9f};
  config.batch_size = 2;
  config.sampling_seed = 9;

  SUBCASE("corpus validation") {
    FFNModel<float> model = make_zero_model<float>({{9, 9, 5}, 2, 2});
    CHECK_THROWS_AS(training_loop(model, {}, held_out, config, "/tmp/ffn_t0"),
                    ValidationError);
    CHECK_THROWS_AS(training_loop(model, train, {}, config, "/tmp/ffn_t0"),
                    ValidationError);
  }

  SUBCASE("frozen learning rate triggers the patience rule") {
    FFNModel<float> model = make_model<float>({{9, 9, 5}, 2, 2}, 5);
    config.learning_rate = 0.0f;
    config.checkpoint_interval = 6;
    config.max_steps = 100000;
    config.patience = 3;
    const auto result =
        training_loop(model, train, held_out, config, "/tmp/ffn_t1");
    CHECK(result.early_stopped);
    CHECK(result.evals.size() == 4);  // 1 improving + 3 stale
    for (std::size_t i = 1; i < result.evals.size(); ++i)
      CHECK(result.evals[i].mean_edge_accuracy_pct ==
            result.evals[0].mean_edge_accuracy_pct);
    CHECK(std::filesystem::exists(result.evals[0].checkpoint_path));
    CHECK(std::filesystem::exists(result.evals[0].checkpoint_path + ".raw"));
  }

  SUBCASE("interval arithmetic plus the final checkpoint") {
    FFNModel<float> model = make_zero_model<float>({{9, 9, 5}, 2, 2});
    config.learning_rate = 1e-4f;
    config.batch_size = 1;
    config.checkpoint_interval = 10;
    config.max_steps = 25;
    config.patience = 10;
    const auto result =
        training_loop(model, train, held_out, config, "/tmp/ffn_t2");
    CHECK(!result.early_stopped);
    CHECK(result.steps == 25);
    REQUIRE(result.evals.size() == 3);
    CHECK(result.evals[0].step == 10);
    CHECK(result.evals[1].step == 20);
    CHECK(result.evals[2].step == 25);
    CHECK(!result.best_checkpoint.empty());
    CHECK(result.evals[0].per_world.size() == held_out.size());
  }

  SUBCASE("two runs produce byte-identical checkpoints") {
    config.learning_rate = 0.001f;
    config.checkpoint_interval = 1000;
    config.max_steps = 12;
    FFNModel<float> m1 = make_model<float>({{9, 9, 5}, 2, 2}, 5);
    FFNModel<float> m2 = make_model<float>({{9, 9, 5}, 2, 2}, 5);
    const auto r1 = training_loop(m1, train, held_out, config, "/tmp/ffn_t3a");
    const auto r2 = training_loop(m2, train, held_out, config, "/tmp/ffn_t3b");
    REQUIRE(r1.evals.size() == r2.evals.size());
    CHECK(file_bytes(r1.evals.back().checkpoint_path + ".raw") ==
          file_bytes(r2.evals.back().checkpoint_path + ".raw"));
  }
}
