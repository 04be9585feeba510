// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rfulm/localizer.hpp"
#include "rfulm/metrics.hpp"
#include "rfulm/postproc.hpp"
#include "rfulm/signal.hpp"
#include "rfulm/transform.hpp"

namespace rfulm {

/// RFB1 channel-data container. Frames are stored event-major with the
/// transmit angles interleaved: record e * angles.size() + a belongs to
/// event e and angle a. Single-angle data has angles.size() == 1.
struct RfDataset {
  int num_samples = 0;   // U
  int num_channels = 0;  // V
  std::vector<double> angles;  // radians, one per transmit direction
  std::vector<RfFrame> frames;

  int events() const {
    return angles.empty() ? 0
                          : static_cast<int>(frames.size() / angles.size());
  }
};

/// Binary RF interchange, format RFB1: magic "RFB1", little-endian u32
/// {version=1, F, U, V, angles_count}, angles as f32 radians, then
/// F*U*V complex samples as interleaved f32 (re, im), frame-major,
/// samples contiguous within each channel. Readers reject wrong magic
/// or version.
void write_rfb1(const std::string& path, const RfDataset& data);
RfDataset read_rfb1(const std::string& path);

/// One row of the shared point-set CSV (ground-truth labels and
/// localizations use the same schema). Coordinates are (channel,
/// sample) for RF rows and (lateral, axial) wavelengths for B-mode
/// rows; fused rows carry angle_deg = nan.
struct PointRecord {
  int frame_index = 0;
  Space space = Space::Bmode;
  double angle_deg = 0.0;
  double coord1 = 0.0;
  double coord2 = 0.0;
  double score = 0.0;
};

/// CSV with header frame_index,space,angle_deg,coord1,coord2,score;
/// numeric fields printed with 9 significant digits.
void write_points_csv(const std::string& path,
                      const std::vector<PointRecord>& rows);
std::vector<PointRecord> read_points_csv(const std::string& path);

/// Loss history CSV: epoch,mean_loss,lr.
void write_loss_csv(const std::string& path,
                    const std::vector<EpochStats>& history);

/// Affine map text file: one line per angle with angle_deg, the six
/// coefficients and the fit residual, 17 significant digits so values
/// round-trip bit-exactly through decimal.
void save_affine_maps(const std::string& path,
                      const std::vector<AffineMap>& maps);
std::vector<AffineMap> load_affine_maps(const std::string& path);

/// One result-table row; time is free-form ("-" when not measured).
struct MetricsRow {
  std::string method;
  RmseSummary rmse;
  JaccardSummary jac;
  std::string time_s = "-";
};
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
std::string metrics_table(const std::vector<MetricsRow>& rows);

/// 16-bit grayscale writers; values are row-major pixel intensities.
void write_png16(
    const std::string& path,
    const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img);
void write_pgm16(
    const std::string& path,
    const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img);

}  // namespace rfulm
