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
#include <bit>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

#include "ffn/errors.hpp"
#include "ffn/model.hpp"

// Checkpoint format: a text descriptor at `path` naming the architecture and
// each parameter tensor with its element count, plus a little-endian f32
// payload at `path + ".raw"` in descriptor order. No timestamps, so saving
// the same model twice yields byte-identical files.
//
//   ffnckpt 1
//   fov 33 33 17
//   channels 8
//   modules 8
//   tensor stem.w 4608
//   tensor stem.bias 8
//   ...

namespace ffn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is little-endian");

// Descriptor-order parameter walk; works on const and mutable models alike.
template <typename Model>
auto parameter_list(Model& model) {
  struct Item {
    std::string name;
    decltype(&model.stem.w) data;
  };
  std::vector<Item> list;
  list.push_back({"stem.w", &model.stem.w});
  list.push_back({"stem.bias", &model.stem.bias});
  for (std::size_t m = 0; m < model.modules.size(); ++m) {
    const std::string p = "module" + std::to_string(m) + ".";
    list.push_back({p + "conv1.w", &model.modules[m].conv1.w});
    list.push_back({p + "conv1.bias", &model.modules[m].conv1.bias});
    list.push_back({p + "conv2.w", &model.modules[m].conv2.w});
    list.push_back({p + "conv2.bias", &model.modules[m].conv2.bias});
  }
  list.push_back({"head.w", &model.head.w});
  list.push_back({"head.bias", &model.head.bias});
  return list;
}

}  // namespace

void save_checkpoint(const FFNModel<float>& model, const std::string& path) {
  const auto params = parameter_list(model);

  std::ostringstream header;
  header << "ffnckpt 1\n"
         << "fov " << model.fov.x << " " << model.fov.y << " " << model.fov.z << "\n"
         << "channels " << model.channels << "\n"
         << "modules " << model.modules.size() << "\n";
  for (const auto& p : params)
    header << "tensor " << p.name << " " << p.data->size() << "\n";

  std::ofstream desc(path, std::ios::binary | std::ios::trunc);
  if (!desc) throw IoError("cannot open checkpoint for writing: " + path);
  desc << header.str();
  if (!desc) throw IoError("checkpoint descriptor write failed: " + path);

  std::ofstream raw(path + ".raw", std::ios::binary | std::ios::trunc);
  if (!raw) throw IoError("cannot open checkpoint payload for writing: " + path + ".raw");
  for (const auto& p : params)
    raw.write(reinterpret_cast<const char*>(p.data->data()),
              static_cast<std::streamsize>(p.data->size() * sizeof(float)));
  if (!raw) throw IoError("checkpoint payload write failed: " + path + ".raw");
}

FFNModel<float> load_checkpoint(const std::string& path) {
  std::ifstream desc(path, std::ios::binary);
  if (!desc) throw IoError("cannot open checkpoint: " + path);

  std::string magic;
  int version = 0;
  desc >> magic >> version;
  if (!desc || magic != "ffnckpt" || version != 1)
    throw IoError("malformed checkpoint descriptor: " + path);

  std::string key;
  ModelShape shape;
  if (!(desc >> key >> shape.fov.x >> shape.fov.y >> shape.fov.z) || key != "fov")
    throw IoError("malformed checkpoint descriptor (fov): " + path);
  if (!(desc >> key >> shape.channels) || key != "channels")
    throw IoError("malformed checkpoint descriptor (channels): " + path);
  if (!(desc >> key >> shape.modules) || key != "modules")
    throw IoError("malformed checkpoint descriptor (modules): " + path);

  FFNModel<float> model;
  try {
    model = make_zero_model<float>(shape);
  } catch (const ValidationError& e) {
    throw IoError("checkpoint declares an invalid architecture: " +
                  std::string(e.what()));
  }
  const auto params = parameter_list(model);

  // Every tensor line must match the architecture the header declares.
  for (const auto& p : params) {
    std::string name;
    std::size_t count = 0;
    if (!(desc >> key >> name >> count) || key != "tensor")
      throw IoError("malformed checkpoint descriptor (tensor list): " + path);
    if (name != p.name || count != p.data->size())
      throw IoError("checkpoint descriptor mismatch: expected " + p.name + " " +
                    std::to_string(p.data->size()) + ", got " + name + " " +
                    std::to_string(count));
  }

  std::ifstream raw(path + ".raw", std::ios::binary);
  if (!raw) throw IoError("cannot open checkpoint payload: " + path + ".raw");
  for (const auto& p : params) {
    raw.read(reinterpret_cast<char*>(p.data->data()),
             static_cast<std::streamsize>(p.data->size() * sizeof(float)));
    if (raw.gcount() !=
        static_cast<std::streamsize>(p.data->size() * sizeof(float)))
      throw IoError("checkpoint payload truncated: " + path + ".raw");
  }
  if (raw.peek() != std::ifstream::traits_type::eof())
    throw IoError("checkpoint payload has trailing bytes: " + path + ".raw");
  return model;
}

}  // namespace ffn
