// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "rfulm/config.hpp"
#include "rfulm/io.hpp"
#include "rfulm/network.hpp"
#include "rfulm/pipeline.hpp"
#include "rfulm/transform.hpp"

using namespace rfulm;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(RFULM_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult result;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) result.output += buf;
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

// Small single-angle rig so the CLI runs fast.
PipelineConfig tiny_config(const std::string& dir) {
  PipelineConfig cfg;
  cfg.threads = 1;
  cfg.geometry.elements_count = 16;
  cfg.geometry.num_samples = 64;
  cfg.geometry.tx_angles_deg = {0.0};
  cfg.simulate.frames = 2;
  cfg.simulate.bubbles_min = 1;
  cfg.simulate.bubbles_max = 1;
  cfg.train.max_epochs = 1;
  cfg.train.hidden_channels = 4;
  cfg.train.upsample = 2;
  cfg.affine.points = 200;
  cfg.infer.svd_cut_low = 0;
  cfg.paths.rf = dir + "/frames.rfb";
  cfg.paths.labels_bmode = dir + "/labels_bmode.csv";
  cfg.paths.labels_rf = dir + "/labels_rf.csv";
  cfg.paths.affine = dir + "/affine.txt";
  cfg.paths.checkpoint = dir + "/net.srn";
  cfg.paths.loss = dir + "/loss.csv";
  cfg.paths.localizations = dir + "/loc.csv";
  cfg.paths.metrics = dir + "/metrics.csv";
  cfg.paths.image = dir + "/ulm.png";
  return cfg;
}

std::string write_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  out << serialize_config(cfg);
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("exit codes") {
  SUBCASE("missing config is a config error (2)") {
    CHECK(run_cli("simulate").exit_code == 2);
  }
  SUBCASE("unknown key is a config error (2)") {
    std::ofstream bad("cli_bad.cfg");
    bad << "nope.nope = 1\n";
    bad.close();
    CHECK(run_cli("simulate --config cli_bad.cfg").exit_code == 2);
  }
  SUBCASE("unknown subcommand fails parsing (2)") {
    CHECK(run_cli("frobnicate").exit_code == 2);
  }
  SUBCASE("missing input file is a config error (2)") {
    PipelineConfig cfg = tiny_config("cli_missing");
    cfg.paths.rf = "cli_missing/nonexistent.rfb";
    fs::create_directories("cli_missing");
    write_config(cfg, "cli_missing/c.cfg");
    CHECK(run_cli("train --config cli_missing/c.cfg").exit_code == 2);
  }
  SUBCASE("help exits zero") {
    CHECK(run_cli("--help").exit_code == 0);
  }
}

TEST_CASE("simulate") {
  SUBCASE("zero frames produce a valid empty RFB1 file") {
    fs::create_directories("cli_zero");
    PipelineConfig cfg = tiny_config("cli_zero");
    cfg.simulate.frames = 0;
    write_config(cfg, "cli_zero/c.cfg");
    const RunResult r = run_cli("simulate --config cli_zero/c.cfg");
    CHECK(r.exit_code == 0);
    const RfDataset ds = read_rfb1(cfg.paths.rf);
    CHECK(ds.frames.empty());
    CHECK(slurp(cfg.paths.labels_bmode) ==
          "frame_index,space,angle_deg,coord1,coord2,score\n");
  }

  SUBCASE("identical config produces byte-identical outputs") {
    fs::create_directories("cli_det");
    PipelineConfig cfg = tiny_config("cli_det");
    write_config(cfg, "cli_det/c.cfg");
    REQUIRE(run_cli("simulate --config cli_det/c.cfg").exit_code == 0);
    const std::string rf1 = slurp(cfg.paths.rf);
    const std::string lb1 = slurp(cfg.paths.labels_bmode);
    REQUIRE(run_cli("simulate --config cli_det/c.cfg").exit_code == 0);
    CHECK(slurp(cfg.paths.rf) == rf1);
    CHECK(slurp(cfg.paths.labels_bmode) == lb1);
  }

  SUBCASE("--seed overrides the simulate seed") {
    fs::create_directories("cli_seed");
    PipelineConfig cfg = tiny_config("cli_seed");
    write_config(cfg, "cli_seed/c.cfg");
    REQUIRE(run_cli("simulate --config cli_seed/c.cfg").exit_code == 0);
    const std::string rf1 = slurp(cfg.paths.rf);
    REQUIRE(run_cli("simulate --config cli_seed/c.cfg --seed 99").exit_code ==
            0);
    CHECK(slurp(cfg.paths.rf) != rf1);
  }

  SUBCASE("label row count stays within the configured bubble range") {
    fs::create_directories("cli_rows");
    PipelineConfig cfg = tiny_config("cli_rows");
    cfg.simulate.frames = 20;
    cfg.simulate.bubbles_min = 1;
    cfg.simulate.bubbles_max = 3;
    write_config(cfg, "cli_rows/c.cfg");
    REQUIRE(run_cli("simulate --config cli_rows/c.cfg").exit_code == 0);
    const auto rows = read_points_csv(cfg.paths.labels_bmode);
    CHECK(rows.size() >= 20);
    CHECK(rows.size() <= 60);
  }
}

TEST_CASE("fit-affine and eval") {
  fs::create_directories("cli_fit");
  PipelineConfig cfg = tiny_config("cli_fit");
  write_config(cfg, "cli_fit/c.cfg");

  SUBCASE("one map per angle, rerun identical") {
    REQUIRE(run_cli("fit-affine --config cli_fit/c.cfg").exit_code == 0);
    CHECK(load_affine_maps(cfg.paths.affine).size() == 1);
    const std::string file1 = slurp(cfg.paths.affine);
    REQUIRE(run_cli("fit-affine --config cli_fit/c.cfg").exit_code == 0);
    CHECK(slurp(cfg.paths.affine) == file1);

    PipelineConfig three = cfg;
    three.geometry.tx_angles_deg = {-5.0, 0.0, 5.0};
    write_config(three, "cli_fit/c3.cfg");
    REQUIRE(run_cli("fit-affine --config cli_fit/c3.cfg").exit_code == 0);
    CHECK(load_affine_maps(cfg.paths.affine).size() == 3);
  }

  SUBCASE("evaluating the ground truth against itself is perfect") {
    std::vector<PointRecord> rows = {
        {0, Space::Bmode, std::nan(""), 1.0, 5.0, 1.0},
        {1, Space::Bmode, std::nan(""), -2.0, 7.0, 1.0}};
    write_points_csv(cfg.paths.labels_bmode, rows);
    write_points_csv(cfg.paths.localizations, rows);
    const RunResult r = run_cli("eval --config cli_fit/c.cfg");
    CHECK(r.exit_code == 0);
    const std::string metrics = slurp(cfg.paths.metrics);
    CHECK(metrics.find("ours,0,0,100,2,0,0,-") != std::string::npos);
  }

  SUBCASE("empty estimates score zero Jaccard") {
    std::vector<PointRecord> gt = {
        {0, Space::Bmode, std::nan(""), 1.0, 5.0, 1.0}};
    write_points_csv(cfg.paths.labels_bmode, gt);
    write_points_csv(cfg.paths.localizations, {});
    REQUIRE(run_cli("eval --config cli_fit/c.cfg").exit_code == 0);
    const std::string metrics = slurp(cfg.paths.metrics);
    CHECK(metrics.find("ours,n/a,n/a,0,0,0,1,-") != std::string::npos);
  }
}

TEST_CASE("infer edge cases") {
  fs::create_directories("cli_infer");
  PipelineConfig cfg = tiny_config("cli_infer");
  write_config(cfg, "cli_infer/c.cfg");

  // Build the prerequisites through the library (fast, deterministic).
  RfDataset empty;
  empty.num_samples = cfg.geometry.num_samples;
  empty.num_channels = cfg.geometry.elements_count;
  empty.angles = tx_angles_rad(cfg.geometry);
  write_rfb1(cfg.paths.rf, empty);
  SrNetwork::make_default(2, 4, 2, 1).save(cfg.paths.checkpoint);
  AffineMap map = AffineMap::identity();
  map.tx_angle = 0.0;
  save_affine_maps(cfg.paths.affine, {map});

  SUBCASE("zero-frame input yields an empty CSV with a header") {
    PipelineConfig fixed = cfg;
    fixed.infer.threshold = 0.5;
    write_config(fixed, "cli_infer/fixed.cfg");
    const RunResult r = run_cli("infer --config cli_infer/fixed.cfg");
    CHECK(r.exit_code == 0);
    CHECK(slurp(cfg.paths.localizations) ==
          "frame_index,space,angle_deg,coord1,coord2,score\n");
  }

  SUBCASE("infinite threshold suppresses all localizations") {
    PipelineConfig sim_cfg = cfg;
    sim_cfg.simulate.frames = 2;
    write_config(sim_cfg, "cli_infer/sim.cfg");
    REQUIRE(run_cli("simulate --config cli_infer/sim.cfg").exit_code == 0);
    PipelineConfig inf_cfg = sim_cfg;
    inf_cfg.infer.threshold = std::numeric_limits<double>::infinity();
    write_config(inf_cfg, "cli_infer/inf.cfg");
    const RunResult r = run_cli("infer --config cli_infer/inf.cfg");
    CHECK(r.exit_code == 0);
    CHECK(read_points_csv(cfg.paths.localizations).empty());
  }
}

TEST_CASE("render") {
  fs::create_directories("cli_render");
  PipelineConfig cfg = tiny_config("cli_render");
  std::vector<PointRecord> rows = {
      {0, Space::Bmode, std::nan(""), 0.5, 5.0, 1.0},
      {1, Space::Bmode, std::nan(""), 0.5, 5.0, 1.0},
      {2, Space::Bmode, std::nan(""), -1.0, 4.5, 1.0}};
  write_points_csv(cfg.paths.localizations, rows);
  cfg.paths.canvas = "cli_render/canvas.ulc";
  write_config(cfg, "cli_render/c.cfg");

  SUBCASE("renders deterministically and reports mass conservation") {
    const RunResult r1 = run_cli("render --config cli_render/c.cfg");
    CHECK(r1.exit_code == 0);
    CHECK(r1.output.find("3 points, 3 binned, 0 dropped") !=
          std::string::npos);
    const std::string png = slurp(cfg.paths.image);
    REQUIRE(run_cli("render --config cli_render/c.cfg").exit_code == 0);
    CHECK(slurp(cfg.paths.image) == png);
  }

  SUBCASE("empty localizations render an all-black image") {
    write_points_csv(cfg.paths.localizations, {});
    PipelineConfig pgm = cfg;
    pgm.paths.image = "cli_render/black.pgm";
    write_config(pgm, "cli_render/black.cfg");
    REQUIRE(run_cli("render --config cli_render/black.cfg").exit_code == 0);
    const std::string bytes = slurp("cli_render/black.pgm");
    const auto header_end = bytes.find("65535\n") + 6;
    bool all_black = true;
    for (std::size_t i = header_end; i < bytes.size(); ++i)
      if (bytes[i] != 0) all_black = false;
    CHECK(all_black);
  }
}

TEST_CASE("config env variable is honored") {
  fs::create_directories("cli_env");
  PipelineConfig cfg = tiny_config("cli_env");
  cfg.simulate.frames = 0;
  write_config(cfg, "cli_env/c.cfg");
  const std::string cmd = std::string("RFULM_CONFIG=cli_env/c.cfg ") +
                          RFULM_CLI_PATH + " simulate 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[256];
  while (fgets(buf, sizeof(buf), pipe)) {
  }
  CHECK(WEXITSTATUS(pclose(pipe)) == 0);
}
