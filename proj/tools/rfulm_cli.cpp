// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
//
// Beamforming-free ultrasound localization pipeline driver. Every
// subcommand reads the shared flat config; see README for the grammar.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.
#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "rfulm/pipeline.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  int threads = -1;           // -1 = keep config value
  std::int64_t seed = -1;     // -1 = keep config value
};

rfulm::PipelineConfig load_config(const CliOptions& opts) {
  if (opts.config_path.empty())
    throw rfulm::ConfigError(
        "no config given (use --config or the RFULM_CONFIG variable)");
  rfulm::PipelineConfig cfg = rfulm::parse_config_file(opts.config_path);
  if (opts.threads >= 0) cfg.threads = opts.threads;
  return cfg;
}

void apply_seed(rfulm::PipelineConfig& cfg, const std::string& stage,
                std::int64_t seed) {
  if (seed < 0) return;
  const auto value = static_cast<std::uint64_t>(seed);
  if (stage == "simulate") cfg.simulate.seed = value;
  else if (stage == "fit-affine") cfg.affine.seed = value;
  else if (stage == "train") cfg.train.seed = value;
  else if (stage == "render") cfg.render.seed = value;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rfulm: RF-domain ultrasound localization microscopy"};
  app.require_subcommand(1);

  CliOptions opts;
  app.add_option("--config", opts.config_path, "pipeline config file")
      ->envname("RFULM_CONFIG");
  app.add_option("--threads", opts.threads, "worker thread cap");
  app.add_option("--seed", opts.seed, "override the stage seed");

  const std::vector<std::pair<std::string, void (*)(const rfulm::PipelineConfig&)>>
      stages = {
          {"simulate", rfulm::run_simulate},
          {"fit-affine", rfulm::run_fit_affine},
          {"train", rfulm::run_train},
          {"infer", rfulm::run_infer},
          {"baseline", rfulm::run_baseline},
          {"eval", rfulm::run_eval},
          {"render", rfulm::run_render},
      };
  const std::vector<std::string> descriptions = {
      "write synthetic RF frames and ground-truth labels",
      "fit one RF->B-mode affine map per transmit angle",
      "train the sub-pixel localizer on RF frames",
      "localize on RF frames and back-map to B-mode",
      "DAS + weighted-average reference localizer",
      "match localizations against ground truth",
      "accumulate localizations into a ULM image",
  };
  for (std::size_t i = 0; i < stages.size(); ++i)
    app.add_subcommand(stages[i].first, descriptions[i])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (const auto& [name, stage] : stages) {
      if (app.got_subcommand(name)) {
        rfulm::PipelineConfig cfg = load_config(opts);
        apply_seed(cfg, name, opts.seed);
        stage(cfg);
        return 0;
      }
    }
    std::cerr << "rfulm: no subcommand\n";
    return 2;
  } catch (const rfulm::ConfigError& e) {
    std::cerr << "rfulm: config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rfulm: error: " << e.what() << "\n";
    return 3;
  }
}
