/*
 * Copyright 2026 The noisygbdt Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


// noisygbdt command-line driver.
//
//   noisygbdt run --config <file> [--stage 1|2|3] [--subsample n] [--trials k]
//                 [--seed s] [--out dir] [--jobs j] [--print-config]

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "noisygbdt/experiment.hpp"

namespace {

namespace ex = noisygbdt::experiment;

struct RunArgs {
  std::string config;
  std::optional<int> stage;
  std::optional<std::size_t> subsample;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> jobs;
  bool print_config = false;
  bool quiet = false;
};

int run(const RunArgs& args) {
  auto config = ex::load_config(args.config);
  ex::apply_environment(config);
  if (args.subsample) config.subsample = *args.subsample;
  if (args.trials) config.trials = *args.trials;
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.out = *args.out;
  if (args.jobs) config.jobs = *args.jobs;
  config.validate();

  const std::string resolved = ex::config_to_json(config);
  if (args.print_config) {
    std::cout << resolved;
    return 0;
  }
  std::filesystem::create_directories(config.out);
  std::ofstream(config.out / "config.json") << resolved;

  ex::Progress progress;
  if (!args.quiet) progress = [](const std::string& msg) { std::cerr << msg << '\n'; };
  const int first = args.stage.value_or(1);
  const int last = args.stage.value_or(3);
  for (int stage = first; stage <= last; ++stage) {
    switch (stage) {
      case 1: ex::run_stage1(config, progress); break;
      case 2: ex::run_stage2(config, progress); break;
      case 3: ex::run_stage3(config, progress); break;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient boosting under label noise: detection and correction experiments"};
  app.require_subcommand(1);

  RunArgs args;
  auto* cmd = app.add_subcommand("run", "Run experiment stages from a JSON config");
  cmd->add_option("--config", args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--stage", args.stage, "Run only this stage")->check(CLI::Range(1, 3));
  cmd->add_option("--subsample", args.subsample, "Stratified subsample size before splitting");
  cmd->add_option("--trials", args.trials, "Repetitions with derived seeds")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", args.seed, "Base seed");
  cmd->add_option("--out", args.out, "Output directory (overrides NOISYGBDT_OUT)");
  cmd->add_option("--jobs", args.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
  cmd->add_flag("--print-config", args.print_config, "Print the resolved config and exit");
  cmd->add_flag("-q,--quiet", args.quiet, "No progress output");

  CLI11_PARSE(app, argc, argv);
  try {
    return run(args);
  } catch (const std::exception& e) {
    std::cerr << "noisygbdt: error: " << e.what() << '\n';
    return 1;
  }
}
