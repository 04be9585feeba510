// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rfulm/geometry.hpp"
#include "rfulm/localizer.hpp"
#include "rfulm/transform.hpp"

namespace rfulm {

/// Invalid configuration (unknown key, bad value, missing path).
/// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryConfig {
  int elements_count = 32;
  double elements_pitch_m = 1.54e-4;  // half a wavelength at 5 MHz
  double speed_of_sound = 1540.0;
  double sample_rate = 20.0e6;
  double center_frequency = 5.0e6;
  double start_offset_m = 0.0;
  int num_samples = 128;
  std::vector<double> tx_angles_deg = {-5.0, 0.0, 5.0};
  double standoff_factor = 1000.0;  // plane-wave source distance / aperture
};

struct SimulateConfig {
  int frames = 200;  // compound events; each event spans all angles
  int bubbles_min = 1;
  int bubbles_max = 3;
  double amp_min = 0.5;
  double amp_max = 1.0;
  double clutter_db = 30.0;
  double fractional_bandwidth = 0.67;
  // nan = auto: the central 80% of the calibration region.
  double lat_min = std::numeric_limits<double>::quiet_NaN();
  double lat_max = std::numeric_limits<double>::quiet_NaN();
  double ax_min = std::numeric_limits<double>::quiet_NaN();
  double ax_max = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 1;
};

struct AffineConfig {
  int points = 1000;
  std::uint64_t seed = 4242;
};

struct InferConfig {
  int svd_cut_low = 1;
  int svd_cut_high = 0;
  // nan = auto: [fc/2, min(1.5 fc, fs/2)].
  double band_lo_hz = std::numeric_limits<double>::quiet_NaN();
  double band_hi_hz = std::numeric_limits<double>::quiet_NaN();
  int nms_window = 3;
  // nan = auto: G-means threshold fitted on the calibration frames.
  double threshold = std::numeric_limits<double>::quiet_NaN();
  int threshold_frames = 25;
  // Candidates entering the ROC pool per frame and angle, strongest
  // first. Bounding the pool keeps the false-positive rate meaningful;
  // an unbounded pool is dominated by noise-floor peaks and drives the
  // G-means optimum toward threshold zero.
  int threshold_topk = 16;
  std::string calibration_rf;      // defaults to paths.rf
  std::string calibration_labels;  // defaults to paths.labels_bmode
};

struct BaselineConfig {
  int window = 5;
  double threshold_rel = 0.35;  // fraction of the per-frame envelope peak
  double f_number = 1.0;
};

struct EvalConfig {
  double gate_wavelengths = 0.25;
  std::string method_name = "ours";
  std::string time_s = "-";  // free-form column copied into the table
};

struct RenderConfig {
  int upsample = 10;  // canvas bins per B-mode pixel
  double gamma = 1.0;
  bool dither = true;
  // nan = auto: min(grid pitches) / train.upsample.
  double dither_pixel = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 9;
};

struct GridConfig {
  double dlat = 0.5;  // wavelengths per B-mode pixel
  double dax = 0.5;
};

struct PathsConfig {
  std::string rf = "out/frames.rfb";
  std::string labels_bmode = "out/labels_bmode.csv";
  std::string labels_rf = "out/labels_rf.csv";
  std::string affine = "out/affine.txt";
  std::string checkpoint = "out/localizer.srn";
  std::string loss = "out/loss.csv";
  std::string localizations = "out/localizations.csv";
  std::string metrics = "out/metrics.csv";
  std::string image = "out/ulm.png";
  std::string canvas;  // optional raw count dump, empty = off
};

/// All pipeline settings, parsed from a flat `section.key = value`
/// text file. Unknown keys are rejected; parse(serialize(c)) == c.
struct PipelineConfig {
  GeometryConfig geometry;
  SimulateConfig simulate;
  TrainConfig train;  // localizer module settings
  AffineConfig affine;
  InferConfig infer;
  BaselineConfig baseline;
  EvalConfig eval;
  RenderConfig render;
  GridConfig grid;
  PathsConfig paths;
  int threads = 0;  // 0 = hardware concurrency

  int effective_threads() const;
};

PipelineConfig parse_config_text(const std::string& text);
PipelineConfig parse_config_file(const std::string& path);
std::string serialize_config(const PipelineConfig& cfg);

/// Transmit angles in radians, in config order.
std::vector<double> tx_angles_rad(const GeometryConfig& g);

/// Plane-wave standoff distance in meters.
double standoff_m(const GeometryConfig& g);

/// Geometry for one steering angle. The timing origin is the standoff
/// plus start_offset_m, so arrival samples are measured from the
/// moment the steered plane wave crosses the array center.
ArrayGeometry build_geometry(const GeometryConfig& g, double angle_rad);

/// Geometry sidecar next to an RFB1 file (same grammar as the config).
void write_geometry_sidecar(const std::string& path, const GeometryConfig& g);
GeometryConfig read_geometry_sidecar(const std::string& path);

}  // namespace rfulm
