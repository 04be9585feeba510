// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace rfulm {

MatchResult match_points(const std::vector<Eigen::Vector2d>& gt,
                         const std::vector<Eigen::Vector2d>& est,
                         double gate) {
  struct Candidate {
    double distance;
    int gt_index;
    int est_index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < gt.size(); ++i)
    for (std::size_t j = 0; j < est.size(); ++j) {
      const double d = (gt[i] - est[j]).norm();
      if (d < gate)
        candidates.push_back({d, static_cast<int>(i), static_cast<int>(j)});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              if (a.distance != b.distance) return a.distance < b.distance;
              if (a.gt_index != b.gt_index) return a.gt_index < b.gt_index;
              return a.est_index < b.est_index;
            });

  MatchResult result;
  std::vector<bool> gt_used(gt.size(), false), est_used(est.size(), false);
  double sq_sum = 0.0;
  for (const auto& c : candidates) {
    if (gt_used[c.gt_index] || est_used[c.est_index]) continue;
    gt_used[c.gt_index] = true;
    est_used[c.est_index] = true;
    result.pairs.push_back({c.gt_index, c.est_index, c.distance});
    sq_sum += c.distance * c.distance;
  }
  result.tp = static_cast<int>(result.pairs.size());
  result.fp = static_cast<int>(est.size()) - result.tp;
  result.fn = static_cast<int>(gt.size()) - result.tp;
  result.frame_rmse = result.tp > 0 ? std::sqrt(sq_sum / result.tp) : 0.0;
  return result;
}

RmseSummary rmse_lambda10(const std::vector<MatchResult>& frames) {
  RmseSummary summary;
  std::vector<double> values;
  for (const auto& frame : frames)
    if (frame.tp > 0) values.push_back(frame.frame_rmse * 10.0);
  summary.frames = static_cast<int>(values.size());
  if (values.empty()) return summary;
  double mean = 0.0;
  for (const double v : values) mean += v;
  mean /= values.size();
  double var = 0.0;
  for (const double v : values) var += (v - mean) * (v - mean);
  var /= values.size();
  summary.mean = mean;
  summary.stddev = std::sqrt(var);
  summary.defined = true;
  return summary;
}

JaccardSummary jaccard(const std::vector<MatchResult>& frames) {
  JaccardSummary summary;
  for (const auto& frame : frames) {
    summary.tp += frame.tp;
    summary.fp += frame.fp;
    summary.fn += frame.fn;
  }
  const long denom = summary.tp + summary.fp + summary.fn;
  if (denom == 0) return summary;
  summary.percent = 100.0 * static_cast<double>(summary.tp) / denom;
  summary.defined = true;
  return summary;
}

void StageTimer::add(const std::string& stage, double seconds) {
  for (auto& [name, total] : totals_) {
    if (name == stage) {
      total += seconds;
      return;
    }
  }
  totals_.emplace_back(stage, seconds);
}

double StageTimer::total_seconds() const {
  double total = 0.0;
  for (const auto& [name, seconds] : totals_) total += seconds;
  return total;
}

std::string StageTimer::table() const {
  std::ostringstream out;
  out << "stage          total [s]   per-frame [ms]\n";
  char line[128];
  for (const auto& [name, seconds] : totals_) {
    const double per_frame = frames_ > 0 ? seconds / frames_ * 1e3 : 0.0;
    std::snprintf(line, sizeof(line), "%-14s %10.3f %16.3f\n", name.c_str(),
                  seconds, per_frame);
    out << line;
  }
  std::snprintf(line, sizeof(line), "%-14s %10.3f\n", "total",
                total_seconds());
  out << line;
  return out.str();
}

ScopedStageTime::ScopedStageTime(StageTimer& timer, std::string stage)
    : timer_(timer), stage_(std::move(stage)) {
  start_ = std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
               .count();
}

ScopedStageTime::~ScopedStageTime() {
  const double end = std::chrono::duration<double>(
                         std::chrono::steady_clock::now().time_since_epoch())
                         .count();
  timer_.add(stage_, end - start_);
}

}  // namespace rfulm
