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
#ifndef FFN_CLI_HPP_
#define FFN_CLI_HPP_

#include <string>
#include <vector>

#include "ffn/config.hpp"

namespace ffn::cli {

// Exit codes: 0 success, 2 config error, 3 I/O error, 4 validation error,
// 1 anything else.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitValidation = 4;

void cmd_synth(const RunConfig& config, const std::string& out_dir);
void cmd_train(const RunConfig& config, const std::string& data_dir,
               const std::string& out_dir);
void cmd_infer(const RunConfig& config, const std::string& checkpoint_path,
               bool oracle, const std::string& image_path,
               const std::string& labels_path, const std::string& out_dir);
void cmd_eval(const std::string& segmentation_path,
              const std::string& skeletons_path, const std::string& out_path);
void cmd_seeds(const RunConfig& config, const std::string& image_path);

int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace ffn::cli

#endif  // FFN_CLI_HPP_
