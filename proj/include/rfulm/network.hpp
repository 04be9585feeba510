// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rfulm/signal.hpp"

namespace rfulm {

/// Rearranges R^2 feature planes into an R-times upsampled image:
/// plane r1*R + r2 feeds output offsets (r1, r2). `planes` holds one
/// feature channel per row, sites flattened column-major (index v*U+u).
/// Throws when the plane count is not a perfect square.
Eigen::MatrixXd pixel_shuffle(const Eigen::MatrixXd& planes, int u, int v);

/// Exact inverse of pixel_shuffle.
Eigen::MatrixXd pixel_unshuffle(const Eigen::MatrixXd& image, int r);

/// Complex frame as two stacked real feature planes (real, imag),
/// flattened column-major per plane.
Eigen::MatrixXd frame_to_planes(const RfFrame& f);

struct ConvSpec {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  bool relu = true;
};

/// Small sub-pixel super-resolution CNN: a chain of same-padded
/// convolutions (ReLU between, linear last) whose final R^2 feature
/// planes are pixel-shuffled to one R-times upsampled heatmap.
/// Shape contract: 2 x U x V in, 1 x RU x RV out, for any U, V.
/// Parameters live in a single vector in declaration order
/// (per layer: column-major weights, then biases).
class SrNetwork {
 public:
  SrNetwork(std::vector<ConvSpec> layers, int upsample_factor,
            std::uint64_t seed);

  /// Default toy architecture: in -> hidden (x3) -> R^2, 3x3 kernels,
  /// He fan-in initialization from the given seed.
  static SrNetwork make_default(int in_channels, int hidden_channels,
                                int upsample_factor, std::uint64_t seed);

  int upsample_factor() const { return upsample_; }
  const std::vector<ConvSpec>& layers() const { return layers_; }
  int parameter_count() const { return static_cast<int>(params_.size()); }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::VectorXd& parameters() { return params_; }

  /// Forward workspace: patch matrices and pre-activations kept for
  /// the backward pass plus backward scratch. Reusing one Cache across
  /// steps keeps the training loop free of large allocations.
  struct Cache {
    int u = 0;
    int v = 0;
    std::vector<Eigen::MatrixXd> patches;  // im2col of each layer input
    std::vector<Eigen::MatrixXd> pre_act;  // z before the nonlinearity
    std::vector<Eigen::MatrixXd> act;      // post-nonlinearity
    std::vector<Eigen::MatrixXd> dx;       // backward scratch
    std::vector<Eigen::MatrixXd> dcols;    // backward scratch
  };

  /// Heatmap (RU x RV) for one input feature matrix (C0 x U*V).
  /// Throws std::runtime_error naming the layer when an activation
  /// turns non-finite.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, int u, int v,
                          Cache* cache = nullptr) const;

  /// Gradient of a scalar loss w.r.t. every parameter given the
  /// gradient w.r.t. the heatmap. Exact reverse-mode differentiation
  /// through the cache of the matching forward call.
  Eigen::VectorXd backward(Cache& cache,
                           const Eigen::MatrixXd& d_heatmap) const;

  /// Checkpoint IO, format SRN1 (see README). Load rejects wrong
  /// magic or version.
  void save(const std::string& path) const;
  static SrNetwork load(const std::string& path);

 private:
  struct Slice {
    long weight_offset = 0;
    long bias_offset = 0;
  };
  Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(int layer) const;

  std::vector<ConvSpec> layers_;
  std::vector<Slice> slices_;
  int upsample_ = 1;
  Eigen::VectorXd params_;
};

}  // namespace rfulm
