// Copyright 2026 The chainstar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "chainstar/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPhysicsFailure = 2;

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  bool strict = false;
  std::optional<std::uint64_t> seed;
};

chainstar::ExperimentConfig load_config(const std::string& kind, const CliOptions& cli) {
  chainstar::ExperimentConfig config;
  if (cli.config_path.empty()) {
    config = chainstar::ExperimentConfig::defaults_for(kind);
  } else {
    std::ifstream is(cli.config_path);
    if (!is) throw chainstar::InvalidSpec("cannot open config file '" + cli.config_path + "'");
    nlohmann::json j;
    is >> j;
    config = chainstar::ExperimentConfig::from_json(j, kind);
  }
  if (!cli.out_dir.empty()) config.out_dir = cli.out_dir;
  if (cli.strict) config.strict = true;
  if (cli.seed) config.seed = *cli.seed;
  return config;
}

int run(const std::string& kind, const CliOptions& cli) {
  chainstar::ExperimentConfig config;
  try {
    config = load_config(kind, cli);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const chainstar::InvalidSpec& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const chainstar::RunResult result = chainstar::run_experiment(config);
    for (const auto& file : result.files) std::cout << "wrote " << file << "\n";
    std::cout << kind << ": " << (result.passed ? "pass" : "FAIL") << "\n";
    return result.passed ? kExitPass : kExitPhysicsFailure;
  } catch (const chainstar::InvalidSpec& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const chainstar::Error& e) {
    std::cerr << "physics check failed: " << e.what() << "\n";
    return kExitPhysicsFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chainstar: spin-chain-star reduction, dynamics and entanglement toolkit"};
  app.require_subcommand(1);

  CliOptions cli;
  std::string chosen_kind;
  for (const std::string kind :
       {"figure2a", "detuning-sweep", "verify-mapping", "w-state", "ghz", "concurrence"}) {
    CLI::App* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", cli.config_path, "JSON experiment config");
    sub->add_option("--out", cli.out_dir, "output directory (overrides the config)");
    sub->add_flag("--strict", cli.strict, "fail instead of tolerating a detuned model");
    sub->add_option("--seed", [&cli](const CLI::results_t& values) {
      cli.seed = std::stoull(values.at(0));
      return true;
    }, "seed for randomized fixtures (never alters deterministic physics)");
    sub->callback([kind, &chosen_kind] { chosen_kind = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitUsage;
  }
  return run(chosen_kind, cli);
}
