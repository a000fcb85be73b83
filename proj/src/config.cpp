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
#include "ffn/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "ffn/errors.hpp"

namespace ffn {
namespace {

using nlohmann::json;

void require_known_keys(const json& obj, const char* where,
                        std::initializer_list<const char*> known) {
  const std::string prefix = *where ? std::string(where) + "." : "";
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok)
      throw ConfigError("unknown config field '" + prefix + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* where, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config field '") + where + "." + key +
                      "' has the wrong type");
  }
}

void read_vec3(const json& obj, const char* where, const char* key, Vec3i& out) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number_integer() ||
      !v[1].is_number_integer() || !v[2].is_number_integer())
    throw ConfigError(std::string("config field '") + where + "." + key +
                      "' must be an array of three integers");
  out = {v[0].get<int>(), v[1].get<int>(), v[2].get<int>()};
}

void read_range(const json& obj, const char* where, const char* key, double& lo,
                double& hi) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(std::string("config field '") + where + "." + key +
                      "' must be an array [min, max]");
  lo = v[0].get<double>();
  hi = v[1].get<double>();
}

void read_range(const json& obj, const char* where, const char* key, int& lo,
                int& hi) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() ||
      !v[1].is_number_integer())
    throw ConfigError(std::string("config field '") + where + "." + key +
                      "' must be an array [min, max] of integers");
  lo = v[0].get<int>();
  hi = v[1].get<int>();
}

json subobject(const json& root, const char* key) {
  if (!root.contains(key)) return json::object();
  if (!root.at(key).is_object())
    throw ConfigError(std::string("config field '") + key +
                      "' must be an object");
  return root.at(key);
}

}  // namespace

RunConfig parse_config_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  require_known_keys(root, "", {"seed", "threads", "model", "movement",
                                "example_dims", "training", "seeds",
                                "inference", "synth"});

  RunConfig c;
  read(root, "", "seed", c.seed);
  read(root, "", "threads", c.threads);
  read_vec3(root, "", "example_dims", c.example_dims);

  const json model = subobject(root, "model");
  require_known_keys(model, "model", {"fov", "channels", "modules", "init_seed"});
  read_vec3(model, "model", "fov", c.model.fov);
  read(model, "model", "channels", c.model.channels);
  read(model, "model", "modules", c.model.modules);
  read(model, "model", "init_seed", c.model_init_seed);

  const json movement = subobject(root, "movement");
  require_known_keys(movement, "movement", {"delta", "t_move"});
  read_vec3(movement, "movement", "delta", c.movement.delta);
  read(movement, "movement", "t_move", c.movement.t_move);

  const json training = subobject(root, "training");
  require_known_keys(training, "training",
                     {"learning_rate", "batch_size", "checkpoint_interval",
                      "max_steps", "patience", "rebalance_queue_capacity",
                      "holdout_worlds"});
  read(training, "training", "learning_rate", c.learning_rate);
  read(training, "training", "batch_size", c.batch_size);
  read(training, "training", "checkpoint_interval", c.checkpoint_interval);
  read(training, "training", "max_steps", c.max_steps);
  read(training, "training", "patience", c.patience);
  read(training, "training", "rebalance_queue_capacity",
       c.rebalance_queue_capacity);
  read(training, "training", "holdout_worlds", c.holdout_worlds);

  const json seeds = subobject(root, "seeds");
  require_known_keys(seeds, "seeds",
                     {"gradient_threshold_frac", "nms_radius", "spacing",
                      "min_seed_intensity"});
  read(seeds, "seeds", "gradient_threshold_frac",
       c.seeds.gradient_threshold_frac);
  read(seeds, "seeds", "nms_radius", c.seeds.nms_radius);
  read(seeds, "seeds", "min_seed_intensity", c.seeds.min_seed_intensity);
  if (seeds.contains("spacing")) {
    const json& sp = seeds.at("spacing");
    if (!sp.is_array() || sp.size() != 3 || !sp[0].is_number() ||
        !sp[1].is_number() || !sp[2].is_number())
      throw ConfigError("config field 'seeds.spacing' must be three numbers");
    c.seeds.spacing_x = sp[0].get<double>();
    c.seeds.spacing_y = sp[1].get<double>();
    c.seeds.spacing_z = sp[2].get<double>();
  }

  const json inference = subobject(root, "inference");
  require_known_keys(inference, "inference",
                     {"min_object_size", "save_canvases"});
  read(inference, "inference", "min_object_size", c.min_object_size);
  read(inference, "inference", "save_canvases", c.save_canvases);

  const json synth = subobject(root, "synth");
  require_known_keys(
      synth, "synth",
      {"dims", "count", "seed", "min_objects", "max_objects", "tube_probability",
       "tube_radius", "tube_length", "blob_radius", "curvature", "z_step_scale",
       "interior_level", "background_level", "boundary_darkness",
       "boundary_width", "noise_amplitude", "min_gap", "placement_retries"});
  read_vec3(synth, "synth", "dims", c.synth.dims);
  read(synth, "synth", "count", c.synth_count);
  read(synth, "synth", "seed", c.synth.seed);
  read(synth, "synth", "min_objects", c.synth.min_objects);
  read(synth, "synth", "max_objects", c.synth.max_objects);
  read(synth, "synth", "tube_probability", c.synth.tube_probability);
  read_range(synth, "synth", "tube_radius", c.synth.tube_radius_min,
             c.synth.tube_radius_max);
  read_range(synth, "synth", "tube_length", c.synth.tube_length_min,
             c.synth.tube_length_max);
  read_range(synth, "synth", "blob_radius", c.synth.blob_radius_min,
             c.synth.blob_radius_max);
  read(synth, "synth", "curvature", c.synth.curvature);
  read(synth, "synth", "z_step_scale", c.synth.z_step_scale);
  read(synth, "synth", "interior_level", c.synth.interior_level);
  read(synth, "synth", "background_level", c.synth.background_level);
  read(synth, "synth", "boundary_darkness", c.synth.boundary_darkness);
  read(synth, "synth", "boundary_width", c.synth.boundary_width);
  read(synth, "synth", "noise_amplitude", c.synth.noise_amplitude);
  read(synth, "synth", "min_gap", c.synth.min_gap);
  read(synth, "synth", "placement_retries", c.synth.placement_retries);

  validate_config(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw IoError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_json(buf.str());
}

void validate_config(const RunConfig& c) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };

  if (c.threads < 0) fail("threads must be >= 0");
  if (c.model.fov.x < 1 || c.model.fov.y < 1 || c.model.fov.z < 1 ||
      c.model.fov.x % 2 == 0 || c.model.fov.y % 2 == 0 || c.model.fov.z % 2 == 0)
    fail("model.fov components must be positive and odd");
  if (c.model.channels < 1) fail("model.channels must be >= 1");
  if (c.model.modules < 1) fail("model.modules must be >= 1");
  if (2 + 2 * c.model.modules < min_conv_layers(c.model.fov))
    fail("model too shallow: " + std::to_string(min_conv_layers(c.model.fov)) +
         " conv layers needed to span model.fov " + to_string(c.model.fov));

  try {
    validate_policy(c.movement);
  } catch (const ValidationError& e) {
    fail(std::string("movement: ") + e.what());
  }

  const Vec3i want{c.model.fov.x + 2 * c.movement.delta.x,
                   c.model.fov.y + 2 * c.movement.delta.y,
                   c.model.fov.z + 2 * c.movement.delta.z};
  if (c.example_dims != want)
    fail("example_dims " + to_string(c.example_dims) +
         " must equal model.fov + 2*movement.delta = " + to_string(want));

  if (!(c.learning_rate >= 0.0f)) fail("training.learning_rate must be >= 0");
  if (c.batch_size < 1) fail("training.batch_size must be >= 1");
  if (c.checkpoint_interval < 1) fail("training.checkpoint_interval must be >= 1");
  if (c.max_steps < 1) fail("training.max_steps must be >= 1");
  if (c.patience < 1) fail("training.patience must be >= 1");
  if (c.rebalance_queue_capacity < 1)
    fail("training.rebalance_queue_capacity must be >= 1");
  if (c.holdout_worlds < 1) fail("training.holdout_worlds must be >= 1");

  if (c.seeds.gradient_threshold_frac <= 0 || c.seeds.gradient_threshold_frac > 1)
    fail("seeds.gradient_threshold_frac must lie in (0, 1]");
  if (c.seeds.nms_radius < 0) fail("seeds.nms_radius must be >= 0");
  if (c.seeds.spacing_x <= 0 || c.seeds.spacing_y <= 0 || c.seeds.spacing_z <= 0)
    fail("seeds.spacing components must be positive");

  if (c.synth_count < 1) fail("synth.count must be >= 1");
  if (c.synth.dims.x < 1 || c.synth.dims.y < 1 || c.synth.dims.z < 1)
    fail("synth.dims must be positive");
  if (c.synth.min_objects < 0 || c.synth.max_objects < c.synth.min_objects)
    fail("synth object count range is inverted");
}

std::string config_to_json(const RunConfig& c) {
  json root;
  root["seed"] = c.seed;
  root["threads"] = c.threads;
  root["example_dims"] = {c.example_dims.x, c.example_dims.y, c.example_dims.z};
  root["model"] = {{"fov", {c.model.fov.x, c.model.fov.y, c.model.fov.z}},
                   {"channels", c.model.channels},
                   {"modules", c.model.modules},
                   {"init_seed", c.model_init_seed}};
  root["movement"] = {
      {"delta", {c.movement.delta.x, c.movement.delta.y, c.movement.delta.z}},
      {"t_move", c.movement.t_move}};
  root["training"] = {{"learning_rate", c.learning_rate},
                      {"batch_size", c.batch_size},
                      {"checkpoint_interval", c.checkpoint_interval},
                      {"max_steps", c.max_steps},
                      {"patience", c.patience},
                      {"rebalance_queue_capacity", c.rebalance_queue_capacity},
                      {"holdout_worlds", c.holdout_worlds}};
  root["seeds"] = {{"gradient_threshold_frac", c.seeds.gradient_threshold_frac},
                   {"nms_radius", c.seeds.nms_radius},
                   {"spacing",
                    {c.seeds.spacing_x, c.seeds.spacing_y, c.seeds.spacing_z}},
                   {"min_seed_intensity", c.seeds.min_seed_intensity}};
  root["inference"] = {{"min_object_size", c.min_object_size},
                       {"save_canvases", c.save_canvases}};
  root["synth"] = {{"dims", {c.synth.dims.x, c.synth.dims.y, c.synth.dims.z}},
                   {"count", c.synth_count},
                   {"seed", c.synth.seed},
                   {"min_objects", c.synth.min_objects},
                   {"max_objects", c.synth.max_objects},
                   {"tube_probability", c.synth.tube_probability},
                   {"tube_radius",
                    {c.synth.tube_radius_min, c.synth.tube_radius_max}},
                   {"tube_length",
                    {c.synth.tube_length_min, c.synth.tube_length_max}},
                   {"blob_radius",
                    {c.synth.blob_radius_min, c.synth.blob_radius_max}},
                   {"curvature", c.synth.curvature},
                   {"z_step_scale", c.synth.z_step_scale},
                   {"interior_level", c.synth.interior_level},
                   {"background_level", c.synth.background_level},
                   {"boundary_darkness", c.synth.boundary_darkness},
                   {"boundary_width", c.synth.boundary_width},
                   {"noise_amplitude", c.synth.noise_amplitude},
                   {"min_gap", c.synth.min_gap},
                   {"placement_retries", c.synth.placement_retries}};
  return root.dump(2) + "\n";
}

}  // namespace ffn
