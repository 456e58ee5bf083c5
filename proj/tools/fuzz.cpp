// Copyright 2026 The dlfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// fuzz: command line front end for campaigns, replay and log analysis.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "dlfuzz/analysis.hpp"
#include "dlfuzz/campaign.hpp"
#include "dlfuzz/error.hpp"
#include "dlfuzz/variety.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> iterations,
            const std::string& output, std::optional<std::uint64_t> seed, bool raw_x) {
  dlfuzz::CampaignConfig config = dlfuzz::load_campaign_config(config_path);
  if (iterations) config.iterations = *iterations;
  if (!output.empty()) config.output_dir = output;
  if (seed) {
    config.rng_seed = *seed;
    config.mutation.rng_seed = *seed;
  }
  if (raw_x) config.fitness_input = dlfuzz::FitnessInput::Raw;
  const auto result = dlfuzz::run_campaign(config, &std::cerr);
  std::cout << result.summary.to_json().dump(2) << "\n";
  return 0;
}

int cmd_replay(const std::string& path) {
  const auto r = dlfuzz::replay_bug_file(path);
  std::cout << "expected " << dlfuzz::verdict_to_json(r.expected).dump() << "\n"
            << "actual   " << dlfuzz::verdict_to_json(r.actual).dump() << "\n"
            << (r.reproduced() ? "reproduced" : "NOT reproduced") << "\n";
  return r.reproduced() ? 0 : 1;
}

int cmd_variety(const std::string& path, int depth) {
  std::ifstream in(path);
  if (!in) throw dlfuzz::Error("cannot open model " + path);
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto model = dlfuzz::decode_model(text);
  std::cout << dlfuzz::variety_degree(model, depth) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential fuzzer for tensor runtimes"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a fuzzing campaign");
  std::string config_path, output;
  std::optional<std::uint64_t> iterations, seed;
  bool raw_x = false;
  run->add_option("--config", config_path, "Campaign config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--iterations", iterations, "Override the iteration budget");
  run->add_option("--output", output, "Override the output directory");
  run->add_option("--seed", seed, "Override rng_seed");
  run->add_flag("--fusion-raw-x", raw_x, "Fuse raw measurements instead of normalized ones");

  auto* replay = app.add_subcommand("replay", "Re-execute a bug file and compare verdicts");
  std::string bug_path;
  replay->add_option("bug", bug_path, "Bug JSON file")->required()->check(CLI::ExistingFile);

  auto* analyze = app.add_subcommand("analyze", "Analyze a campaign log");
  analyze->require_subcommand(1);
  std::string log_path;
  auto* corr = analyze->add_subcommand("correlations", "Pearson r of variety against performance and time");
  corr->add_option("log", log_path, "campaign.jsonl")->required()->check(CLI::ExistingFile);
  auto* split = analyze->add_subcommand("time-split", "Larger/smaller model split");
  split->add_option("log", log_path, "campaign.jsonl")->required()->check(CLI::ExistingFile);

  auto* variety = app.add_subcommand("variety", "Print the variety degree of a model");
  std::string model_path;
  int depth = dlfuzz::kDefaultVarietyDepth;
  variety->add_option("model", model_path, "Model JSON")->required()->check(CLI::ExistingFile);
  variety->add_option("--depth", depth, "Motif depth")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, iterations, output, seed, raw_x);
    if (*replay) return cmd_replay(bug_path);
    if (*corr) {
      std::cout << dlfuzz::analyze_correlations(dlfuzz::read_log(log_path)).table();
      return 0;
    }
    if (*split) {
      std::cout << dlfuzz::time_split_report(dlfuzz::read_log(log_path)).table();
      return 0;
    }
    if (*variety) return cmd_variety(model_path, depth);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
