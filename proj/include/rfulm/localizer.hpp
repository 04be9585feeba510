// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rfulm/network.hpp"
#include "rfulm/postproc.hpp"
#include "rfulm/signal.hpp"

namespace rfulm {

/// Gaussian-blurred, amplified training target on the R-upsampled RF
/// grid. The underlying binary mask has ones at the rounded label
/// coordinates; the stored values are lambda0 * (G_sigma conv Y) with
/// lambda0 = 120 / max(G_sigma conv Y), so a single blurred label peaks
/// at exactly 120. An empty mask keeps lambda0 = 1.
struct TargetMask {
  Eigen::MatrixXd values;  // (R*U) x (R*V)
  int upsample = 1;
  double sigma = 1.0;
  double amplification = 1.0;  // lambda0
};

/// Builds the target for one frame's in-aperture labels. The Gaussian
/// kernel is truncated at radius 3*sigma and normalized to unit sum;
/// coincident labels collapse to one mask pixel. Rounding is
/// nearest-integer, ties to even. Labels outside the upsampled grid
/// are a precondition violation and throw.
TargetMask build_target(const std::vector<RfLabel>& labels, int upsample,
                        double sigma, int u, int v);

/// |pred - target|_2^2 + lambda1 * |pred|_1. Throws on shape mismatch.
double loss_value(const Eigen::MatrixXd& pred, const TargetMask& target,
                  double lambda1);

/// d(loss)/d(pred): 2*(pred - target) + lambda1 * sign(pred).
Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& pred,
                              const TargetMask& target, double lambda1);

/// Gradient of the loss w.r.t. every network parameter for one sample.
Eigen::VectorXd loss_parameter_gradient(const SrNetwork& net,
                                        const Eigen::MatrixXd& input, int u,
                                        int v, const TargetMask& target,
                                        double lambda1,
                                        double* loss_out = nullptr);

/// Cosine annealing from lr_init at epoch 0 down to 0 at max_epochs.
double cosine_lr(double lr_init, int epoch, int max_epochs);

struct TrainConfig {
  int batch_size = 4;
  double weight_decay = 1e-8;
  double lr_init = 1e-3;
  int max_epochs = 40;
  double lambda1 = 1e-2;
  double sigma = 1.0;
  int upsample = 4;
  bool augment_normalize = true;
  double augment_clutter_db = 50.0;  // +inf disables the clutter augmentation
  int hidden_channels = 32;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;  // positive settings, upsample in {2,4,8,10}
};

struct TrainSample {
  RfFrame frame;
  std::vector<RfLabel> labels;  // in-aperture RF labels for this frame
};

struct EpochStats {
  double mean_loss = 0.0;
  double learning_rate = 0.0;
};

struct TrainResult {
  SrNetwork network;
  std::vector<EpochStats> history;  // one row per epoch
};

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) with weight decay folded
/// into the gradient and per-epoch cosine-annealed learning rate.
/// Each sample is augmented per epoch (clutter noise, amplitude
/// normalization) from seeds derived deterministically, and gradient
/// accumulation runs in ascending sample order, so two runs with the
/// same seed produce bit-identical parameters. Batch items may be
/// evaluated on cfg.threads workers. Aborts with epoch/step context
/// when the loss turns non-finite.
TrainResult train(const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg);

/// Intensity-centroid refinement of local maxima on a beamformed
/// envelope image: every strict window-maximum above the threshold is
/// refined to its intensity-weighted centroid within the window.
/// Returns B-mode localizations in wavelength units.
LocalizationSet weighted_average_baseline(const Eigen::MatrixXd& envelope,
                                          const BmodeGrid& grid, int window,
                                          double threshold);

}  // namespace rfulm
