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
#include "ffn/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ffn/errors.hpp"

namespace ffn::cli {
namespace {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) throw IoError("cannot write " + path);
  out << content;
  if (!out.good()) throw IoError("failed while writing " + path);
}

std::string world_base(int index) {
  char name[32];
  std::snprintf(name, sizeof(name), "world_%03d", index);
  return name;
}

void save_world(const World& world, const fs::path& dir, const std::string& base) {
  save_volume(world.image, (dir / (base + ".image")).string());
  save_volume(world.labels, (dir / (base + ".labels")).string());
  save_skeletons(world.skeletons, (dir / (base + ".skel")).string());
}

std::vector<World> load_worlds(const std::string& data_dir) {
  if (!fs::is_directory(data_dir))
    throw IoError("data directory " + data_dir + " does not exist");
  std::vector<std::string> bases;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 6 && name.substr(name.size() - 6) == ".image")
      bases.push_back(name.substr(0, name.size() - 6));
  }
  std::sort(bases.begin(), bases.end());
  if (bases.empty()) throw IoError("no '<name>.image' worlds in " + data_dir);

  std::vector<World> worlds;
  for (const std::string& base : bases) {
    const fs::path dir(data_dir);
    World w;
    w.image = load_image_volume((dir / (base + ".image")).string());
    w.labels = load_segmentation_volume((dir / (base + ".labels")).string());
    w.skeletons = load_skeletons((dir / (base + ".skel")).string());
    worlds.push_back(std::move(w));
  }
  return worlds;
}

void emit_config(const RunConfig& config, const std::string& out_dir) {
  const std::string text = config_to_json(config);
  std::cout << text;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_text((fs::path(out_dir) / "config.json").string(), text);
  }
}

SegmentVolumeResult run_inference(const RunConfig& config,
                                  const ImageVolume& image,
                                  MaskPredictor& predictor) {
  SegmentVolumeOptions options;
  options.min_object_size = config.min_object_size;
  options.keep_canvases = config.save_canvases;
  return segment_volume(image, predictor, config.movement, config.seeds,
                        options);
}

}  // namespace

void cmd_synth(const RunConfig& config, const std::string& out_dir) {
  emit_config(config, out_dir);
  for (int i = 0; i < config.synth_count; ++i) {
    SynthConfig sc = config.synth;
    sc.seed = config.synth.seed + static_cast<std::uint64_t>(i);
    save_world(generate_world(sc), out_dir, world_base(i));
  }
  std::cout << "wrote " << config.synth_count << " worlds to " << out_dir
            << "\n";
}

void cmd_train(const RunConfig& config, const std::string& data_dir,
               const std::string& out_dir) {
  emit_config(config, out_dir);
  std::vector<World> worlds = load_worlds(data_dir);
  if (static_cast<int>(worlds.size()) <= config.holdout_worlds)
    throw ConfigError("holdout_worlds = " + std::to_string(config.holdout_worlds) +
                      " leaves no training worlds (found " +
                      std::to_string(worlds.size()) + ")");
  const std::size_t split = worlds.size() - static_cast<std::size_t>(config.holdout_worlds);
  const std::span<const World> train(worlds.data(), split);
  const std::span<const World> held_out(worlds.data() + split,
                                        worlds.size() - split);

  FFNModel<float> model =
      make_model<float>(config.model, config.effective_model_init_seed());
  TrainLoopConfig tlc;
  tlc.example_dims = config.example_dims;
  tlc.policy = config.movement;
  tlc.learning_rate = config.learning_rate;
  tlc.batch_size = config.batch_size;
  tlc.checkpoint_interval = config.checkpoint_interval;
  tlc.max_steps = config.max_steps;
  tlc.patience = config.patience;
  tlc.rebalance_queue_capacity = config.rebalance_queue_capacity;
  tlc.sampling_seed = config.sampling_seed();
  tlc.eval_seed_config = config.seeds;
  tlc.eval_min_object_size = config.min_object_size;

  const TrainLoopResult result =
      training_loop(model, train, held_out, tlc, out_dir);

  std::string log;
  char line[256];
  for (const CheckpointEval& eval : result.evals) {
    std::snprintf(line, sizeof(line), "step %zu accuracy %.4f checkpoint %s\n",
                  eval.step, eval.mean_edge_accuracy_pct,
                  eval.checkpoint_path.c_str());
    log += line;
  }
  std::snprintf(line, sizeof(line),
                "steps %zu best_accuracy %.4f early_stopped %d best %s\n",
                result.steps, result.best_accuracy_pct,
                result.early_stopped ? 1 : 0, result.best_checkpoint.c_str());
  log += line;
  write_text((fs::path(out_dir) / "metrics.txt").string(), log);
  std::cout << log;
}

void cmd_infer(const RunConfig& config, const std::string& checkpoint_path,
               bool oracle, const std::string& image_path,
               const std::string& labels_path, const std::string& out_dir) {
  if (oracle == !checkpoint_path.empty())
    throw ConfigError("choose exactly one of --oracle and --checkpoint");
  if (oracle && labels_path.empty())
    throw ConfigError("--oracle needs --labels with the ground-truth volume");

  emit_config(config, out_dir);
  const ImageVolume image = load_image_volume(image_path);

  SegmentVolumeResult result = [&] {
    if (oracle) {
      const SegmentationVolume gt = load_segmentation_volume(labels_path);
      if (gt.dims != image.dims)
        throw ValidationError("labels dims " + to_string(gt.dims) +
                              " do not match image dims " + to_string(image.dims));
      GroundTruthOracle predictor(gt, config.model.fov);
      return run_inference(config, image, predictor);
    }
    const FFNModel<float> model = load_checkpoint(checkpoint_path);
    ModelPredictor predictor(model);
    return run_inference(config, image, predictor);
  }();

  const fs::path out(out_dir);
  save_volume(result.segmentation, (out / "segmentation").string());
  write_text((out / "run_log.txt").string(), format_run_log(result.log));
  for (std::size_t i = 0; i < result.canvases.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "canvas_%03u", result.log.objects[i].id);
    save_canvas_values(result.canvases[i], (out / name).string());
  }
  std::cout << format_run_log(result.log);
}

void cmd_eval(const std::string& segmentation_path,
              const std::string& skeletons_path, const std::string& out_path) {
  const SegmentationVolume seg = load_segmentation_volume(segmentation_path);
  const std::vector<Skeleton> skeletons = load_skeletons(skeletons_path);
  const EvaluationReport report = edge_accuracy(
      adjust_omitted(classify_edges(skeletons, seg), skeletons, seg));
  const std::string text =
      format_report_table(report) +
      format_report_keyvalues(report, segem_counts(skeletons, seg, 1),
                              segem_counts(skeletons, seg, 2));
  std::cout << text;
  if (!out_path.empty()) write_text(out_path, text);
}

void cmd_seeds(const RunConfig& config, const std::string& image_path) {
  std::cout << config_to_json(config);
  const ImageVolume image = load_image_volume(image_path);
  const std::vector<Seed> seeds = seed_points(image, config.seeds);
  std::cout << "seeds: " << seeds.size() << "\n";
  for (const Seed& s : seeds) {
    char line[96];
    std::snprintf(line, sizeof(line), "%d %d %d %.6f\n", s.pos.x, s.pos.y,
                  s.pos.z, s.score);
    std::cout << line;
  }
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"flood-filling network segmentation engine"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, data_dir, image_path, labels_path;
  std::string checkpoint_path, segmentation_path, skeletons_path, out_path;
  bool oracle = false;
  std::uint64_t seed_value = 0;
  std::vector<int> fov_value, delta_value;
  float t_move_value = 0.0f;
  int threads_value = 0;

  auto* config_opt = app.add_option("--config", config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
  auto* fov_opt = app.add_option("--fov", fov_value, "model FoV override (3 ints)")
                      ->expected(3);
  auto* delta_opt =
      app.add_option("--delta", delta_value, "movement step override (3 ints)")
          ->expected(3);
  auto* t_move_opt =
      app.add_option("--t-move", t_move_value, "movement threshold override");
  auto* threads_opt =
      app.add_option("--threads", threads_value, "worker thread override");

  CLI::App* synth = app.add_subcommand("synth", "generate synthetic worlds");
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train a model on worlds");
  train->add_option("--data", data_dir, "directory of generated worlds")
      ->required();
  train->add_option("--out", out_dir, "checkpoint/metrics directory")->required();

  CLI::App* infer = app.add_subcommand("infer", "segment an image volume");
  infer->add_option("--image", image_path, "image volume header file")->required();
  infer->add_option("--checkpoint", checkpoint_path, "trained model checkpoint");
  infer->add_flag("--oracle", oracle, "use the ground-truth oracle predictor");
  infer->add_option("--labels", labels_path, "ground-truth labels (oracle mode)");
  infer->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval = app.add_subcommand("eval", "score a segmentation");
  eval->add_option("--segmentation", segmentation_path, "predicted labels volume")
      ->required();
  eval->add_option("--skeletons", skeletons_path, "ground-truth skeleton file")
      ->required();
  eval->add_option("--out", out_path, "report file (also printed)");

  CLI::App* seeds = app.add_subcommand("seeds", "list seed points of an image");
  seeds->add_option("--image", image_path, "image volume header file")->required();

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.push_back("floodfill");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  argv.reserve(argv_storage.size());
  for (std::string& s : argv_storage) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed_opt->count()) config.seed = seed_value;
    if (threads_opt->count()) config.threads = threads_value;
    if (t_move_opt->count()) config.movement.t_move = t_move_value;
    if (fov_opt->count()) config.model.fov = {fov_value[0], fov_value[1], fov_value[2]};
    if (delta_opt->count())
      config.movement.delta = {delta_value[0], delta_value[1], delta_value[2]};
    if (fov_opt->count() || delta_opt->count()) {
      // The example box is derived from the overridden geometry.
      config.example_dims = {config.model.fov.x + 2 * config.movement.delta.x,
                             config.model.fov.y + 2 * config.movement.delta.y,
                             config.model.fov.z + 2 * config.movement.delta.z};
    }
    (void)config_opt;
    validate_config(config);
#ifdef _OPENMP
    if (config.threads > 0) omp_set_num_threads(config.threads);
#endif

    if (app.got_subcommand(synth)) {
      cmd_synth(config, out_dir);
    } else if (app.got_subcommand(train)) {
      cmd_train(config, data_dir, out_dir);
    } else if (app.got_subcommand(infer)) {
      cmd_infer(config, checkpoint_path, oracle, image_path, labels_path,
                out_dir);
    } else if (app.got_subcommand(eval)) {
      cmd_eval(segmentation_path, skeletons_path, out_path);
    } else if (app.got_subcommand(seeds)) {
      cmd_seeds(config, image_path);
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc));
}

}  // namespace ffn::cli
