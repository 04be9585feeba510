// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rfulm {

/// Gated matching of one frame's estimates against its ground truth.
/// Every matched pair sits strictly inside the gate; tp + fn equals the
/// ground-truth count and tp + fp the estimate count.
struct MatchResult {
  struct Pair {
    int gt_index = -1;
    int est_index = -1;
    double distance = 0.0;  // wavelength units
  };
  std::vector<Pair> pairs;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double frame_rmse = 0.0;  // wavelength units, over matched pairs
};

/// Greedy globally-minimum-distance matching: repeatedly pairs the
/// closest unmatched (gt, est) while the distance stays below the gate
/// (default: quarter wavelength). Unmatched estimates become false
/// positives, unmatched ground truth false negatives. Both point sets
/// are B-mode coordinates in wavelength units.
MatchResult match_points(const std::vector<Eigen::Vector2d>& gt,
                         const std::vector<Eigen::Vector2d>& est,
                         double gate = 0.25);

/// Mean and population standard deviation of per-frame RMSE across
/// frames with at least one true positive, reported in lambda/10 units.
/// Undefined (defined == false) when no frame has a true positive.
struct RmseSummary {
  double mean = 0.0;
  double stddev = 0.0;
  int frames = 0;
  bool defined = false;
};
RmseSummary rmse_lambda10(const std::vector<MatchResult>& frames);

/// Aggregate Jaccard index 100 * tp / (tp + fp + fn) over all frames;
/// undefined when every count is zero.
struct JaccardSummary {
  double percent = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  bool defined = false;
};
JaccardSummary jaccard(const std::vector<MatchResult>& frames);

/// Accumulates wall-clock seconds per pipeline stage; the report lists
/// per-frame means in first-recorded order, so a stage that never ran
/// (e.g. DAS on the beamforming-free path) simply has no line.
class StageTimer {
 public:
  void add(const std::string& stage, double seconds);
  void set_frames(long frames) { frames_ = frames; }
  double total_seconds() const;
  std::string table() const;

 private:
  std::vector<std::pair<std::string, double>> totals_;
  long frames_ = 0;
};

/// RAII helper adding the elapsed scope time to a StageTimer.
class ScopedStageTime {
 public:
  ScopedStageTime(StageTimer& timer, std::string stage);
  ~ScopedStageTime();
  ScopedStageTime(const ScopedStageTime&) = delete;
  ScopedStageTime& operator=(const ScopedStageTime&) = delete;

 private:
  StageTimer& timer_;
  std::string stage_;
  double start_;
};

}  // namespace rfulm
