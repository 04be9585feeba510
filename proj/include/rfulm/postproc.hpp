// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rfulm/transform.hpp"

namespace rfulm {

enum class Space { Rf, Bmode };

/// One detection: coords are (channel, sample) in RF space or
/// (lateral, axial) wavelengths in B-mode space, plus a confidence
/// score. The pair ordering matches the affine map's homogeneous
/// vector, so back-mapping is a plain matrix multiply.
struct Localization {
  Eigen::Vector2d coords = Eigen::Vector2d::Zero();
  double score = 0.0;
};

struct LocalizationSet {
  std::vector<Localization> points;
  Space space = Space::Rf;
  double tx_angle = 0.0;
  int frame_index = 0;
};

/// Keeps a pixel iff it is the maximum of its (window x window)
/// neighborhood; on ties only the first pixel in row-major scan order
/// survives. All other pixels are zeroed. Window must be odd and >= 3.
Eigen::MatrixXd nms(const Eigen::MatrixXd& heatmap, int window);

/// Threshold maximizing the geometric mean sqrt(TPR * (1 - FPR)) over
/// scored validation detections labeled hit (true positive candidate)
/// or miss. Candidates are all distinct scores plus midpoints; a
/// detection counts as kept when score >= threshold; G ties resolve to
/// the larger threshold. Throws when either class is empty.
double gmeans_threshold(const std::vector<std::pair<double, bool>>& scored);

/// Upsampled-grid peaks (rows: R*sample, cols: R*channel) with
/// score >= threshold, rescaled to RF units by dividing through R.
LocalizationSet extract_points(const Eigen::MatrixXd& peaks, double threshold,
                               int upsample);

/// Back-maps an RF-space set through the affine map fitted for its
/// transmit angle; the space tag flips to B-mode.
LocalizationSet to_bmode(const LocalizationSet& s, const AffineMap& map);

/// Variant selecting the map whose tx_angle matches the set's angle.
/// Throws when no map matches.
LocalizationSet to_bmode(const LocalizationSet& s,
                         const std::vector<AffineMap>& maps);

/// DBSCAN partition over 2-D points with Euclidean eps-neighborhoods
/// (distance <= eps, min_samples counts the point itself). Returns
/// clusters as index lists ordered by their smallest member; noise
/// points (non-core, unreachable) are omitted. With min_samples = 1
/// this is exactly the connected components of the eps-graph.
std::vector<std::vector<int>> dbscan_clusters(
    const std::vector<Eigen::Vector2d>& points, double eps, int min_samples);

/// Fuses B-mode detections from all compounded angles of one frame:
/// DBSCAN with the given eps (wavelength units), each cluster reduced
/// to its score-weighted centroid carrying the summed score.
LocalizationSet dbscan_fuse(const std::vector<LocalizationSet>& per_angle,
                            double eps_wavelengths, int min_samples = 1);

}  // namespace rfulm
