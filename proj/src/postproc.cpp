// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/postproc.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace rfulm {

Eigen::MatrixXd nms(const Eigen::MatrixXd& heatmap, int window) {
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("nms: window must be odd and >= 3");
  const int h = static_cast<int>(heatmap.rows());
  const int w = static_cast<int>(heatmap.cols());
  const int half = window / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(h, w);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const double value = heatmap(i, j);
      bool keep = true;
      for (int p = std::max(0, i - half); keep && p <= std::min(h - 1, i + half);
           ++p) {
        for (int q = std::max(0, j - half); q <= std::min(w - 1, j + half);
             ++q) {
          if (p == i && q == j) continue;
          if (heatmap(p, q) > value ||
              (heatmap(p, q) == value && (p < i || (p == i && q < j)))) {
            keep = false;
            break;
          }
        }
      }
      if (keep) out(i, j) = value;
    }
  }
  return out;
}

double gmeans_threshold(
    const std::vector<std::pair<double, bool>>& scored) {
  long positives = 0, negatives = 0;
  for (const auto& [score, hit] : scored) (hit ? positives : negatives)++;
  if (positives == 0 || negatives == 0)
    throw std::invalid_argument(
        "gmeans_threshold: need both positive and negative detections");

  std::vector<double> grid;
  grid.reserve(2 * scored.size());
  for (const auto& [score, hit] : scored) grid.push_back(score);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const std::size_t distinct = grid.size();
  for (std::size_t i = 0; i + 1 < distinct; ++i)
    grid.push_back(0.5 * (grid[i] + grid[i + 1]));
  std::sort(grid.begin(), grid.end());

  double best_g = -1.0;
  double best_threshold = grid.front();
  for (const double t : grid) {
    long tp = 0, fp = 0;
    for (const auto& [score, hit] : scored) {
      if (score >= t) (hit ? tp : fp)++;
    }
    const double tpr = static_cast<double>(tp) / positives;
    const double fpr = static_cast<double>(fp) / negatives;
    const double g = std::sqrt(tpr * (1.0 - fpr));
    if (g > best_g || (g == best_g && t > best_threshold)) {
      best_g = g;
      best_threshold = t;
    }
  }
  return best_threshold;
}

LocalizationSet extract_points(const Eigen::MatrixXd& peaks, double threshold,
                               int upsample) {
  if (upsample < 1)
    throw std::invalid_argument("extract_points: upsample must be >= 1");
  LocalizationSet out;
  out.space = Space::Rf;
  const double r = static_cast<double>(upsample);
  for (int i = 0; i < peaks.rows(); ++i)
    for (int j = 0; j < peaks.cols(); ++j) {
      const double score = peaks(i, j);
      if (score == 0.0 || score < threshold) continue;
      Localization p;
      p.coords = {j / r, i / r};  // (channel, sample)
      p.score = score;
      out.points.push_back(p);
    }
  return out;
}

LocalizationSet to_bmode(const LocalizationSet& s, const AffineMap& map) {
  if (s.space != Space::Rf)
    throw std::invalid_argument("to_bmode: set is not in RF space");
  LocalizationSet out = s;
  out.space = Space::Bmode;
  for (auto& p : out.points) {
    const BmodePoint mapped =
        apply_affine(map, {p.coords.x(), p.coords.y(), -1});
    p.coords = {mapped.lateral, mapped.axial};
  }
  return out;
}

LocalizationSet to_bmode(const LocalizationSet& s,
                         const std::vector<AffineMap>& maps) {
  // Angles cross file formats with f32 precision, so the lookup
  // tolerates rounding at that level.
  for (const auto& map : maps)
    if (std::abs(map.tx_angle - s.tx_angle) < 1e-6) return to_bmode(s, map);
  throw std::invalid_argument(
      "to_bmode: no affine map fitted for the set's transmit angle");
}

std::vector<std::vector<int>> dbscan_clusters(
    const std::vector<Eigen::Vector2d>& points, double eps, int min_samples) {
  const int n = static_cast<int>(points.size());
  if (eps <= 0.0) throw std::invalid_argument("dbscan: eps must be > 0");
  if (min_samples < 1)
    throw std::invalid_argument("dbscan: min_samples must be >= 1");

  const double eps_sq = eps * eps;
  std::vector<std::vector<int>> neighbors(n);
  for (int i = 0; i < n; ++i) {
    neighbors[i].push_back(i);
    for (int j = i + 1; j < n; ++j) {
      if ((points[i] - points[j]).squaredNorm() <= eps_sq) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
      }
    }
  }
  std::vector<bool> core(n);
  for (int i = 0; i < n; ++i)
    core[i] = static_cast<int>(neighbors[i].size()) >= min_samples;

  std::vector<int> label(n, -1);
  std::vector<std::vector<int>> clusters;
  for (int i = 0; i < n; ++i) {
    if (!core[i] || label[i] >= 0) continue;
    const int id = static_cast<int>(clusters.size());
    clusters.emplace_back();
    std::deque<int> frontier{i};
    label[i] = id;
    while (!frontier.empty()) {
      const int p = frontier.front();
      frontier.pop_front();
      clusters[id].push_back(p);
      for (const int q : neighbors[p]) {
        if (label[q] >= 0) continue;
        label[q] = id;
        if (core[q])
          frontier.push_back(q);  // expand through core points only
        else
          clusters[id].push_back(q);  // border point attaches here
      }
    }
    std::sort(clusters[id].begin(), clusters[id].end());
  }
  return clusters;
}

LocalizationSet dbscan_fuse(const std::vector<LocalizationSet>& per_angle,
                            double eps_wavelengths, int min_samples) {
  std::vector<Eigen::Vector2d> coords;
  std::vector<double> scores;
  int frame_index = 0;
  for (const auto& set : per_angle) {
    if (set.space != Space::Bmode)
      throw std::invalid_argument("dbscan_fuse: sets must be in B-mode space");
    frame_index = set.frame_index;
    for (const auto& p : set.points) {
      coords.push_back(p.coords);
      scores.push_back(p.score);
    }
  }

  LocalizationSet fused;
  fused.space = Space::Bmode;
  fused.frame_index = frame_index;
  fused.tx_angle = std::numeric_limits<double>::quiet_NaN();
  for (const auto& cluster : dbscan_clusters(coords, eps_wavelengths,
                                             min_samples)) {
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    double total = 0.0;
    for (const int idx : cluster) {
      weighted += scores[idx] * coords[idx];
      total += scores[idx];
    }
    Localization p;
    if (total > 0.0) {
      p.coords = weighted / total;
    } else {
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (const int idx : cluster) mean += coords[idx];
      p.coords = mean / static_cast<double>(cluster.size());
    }
    p.score = total;
    fused.points.push_back(p);
  }
  return fused;
}

}  // namespace rfulm
