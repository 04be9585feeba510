// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/localizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rfulm/util.hpp"

namespace rfulm {

TargetMask build_target(const std::vector<RfLabel>& labels, int upsample,
                        double sigma, int u, int v) {
  if (upsample < 1 || sigma <= 0.0 || u < 1 || v < 1)
    throw std::invalid_argument("build_target: bad settings");
  const long ru = static_cast<long>(upsample) * u;
  const long rv = static_cast<long>(upsample) * v;
  TargetMask target;
  target.upsample = upsample;
  target.sigma = sigma;
  target.values = Eigen::MatrixXd::Zero(ru, rv);

  std::set<std::pair<long, long>> pixels;  // coincident labels collapse
  for (const auto& label : labels) {
    const long row = round_half_even(upsample * label.sample);
    const long col = round_half_even(upsample * label.channel);
    if (row < 0 || row >= ru || col < 0 || col >= rv)
      throw std::invalid_argument(
          "build_target: label outside the upsampled grid");
    pixels.insert({row, col});
  }
  if (pixels.empty()) {
    target.amplification = 1.0;  // sentinel for an empty mask
    return target;
  }

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const int ksize = 2 * radius + 1;
  Eigen::MatrixXd kernel(ksize, ksize);
  for (int dr = -radius; dr <= radius; ++dr)
    for (int dc = -radius; dc <= radius; ++dc)
      kernel(dr + radius, dc + radius) =
          std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
  kernel /= kernel.sum();

  for (const auto& [row, col] : pixels) {
    for (int dr = -radius; dr <= radius; ++dr) {
      const long r = row + dr;
      if (r < 0 || r >= ru) continue;
      for (int dc = -radius; dc <= radius; ++dc) {
        const long ccol = col + dc;
        if (ccol < 0 || ccol >= rv) continue;
        target.values(r, ccol) += kernel(dr + radius, dc + radius);
      }
    }
  }

  const double peak = target.values.maxCoeff();
  target.amplification = 120.0 / peak;
  // Divide by the peak first so the maximum amplifies to exactly 120.
  target.values = (target.values / peak) * 120.0;
  return target;
}

double loss_value(const Eigen::MatrixXd& pred, const TargetMask& target,
                  double lambda1) {
  if (pred.rows() != target.values.rows() ||
      pred.cols() != target.values.cols())
    throw std::invalid_argument("loss_value: shape mismatch");
  return (pred - target.values).squaredNorm() +
         lambda1 * pred.cwiseAbs().sum();
}

Eigen::MatrixXd loss_gradient(const Eigen::MatrixXd& pred,
                              const TargetMask& target, double lambda1) {
  if (pred.rows() != target.values.rows() ||
      pred.cols() != target.values.cols())
    throw std::invalid_argument("loss_gradient: shape mismatch");
  return 2.0 * (pred - target.values) +
         lambda1 * pred.array().sign().matrix();
}

Eigen::VectorXd loss_parameter_gradient(const SrNetwork& net,
                                        const Eigen::MatrixXd& input, int u,
                                        int v, const TargetMask& target,
                                        double lambda1, double* loss_out) {
  SrNetwork::Cache cache;
  const Eigen::MatrixXd pred = net.forward(input, u, v, &cache);
  if (loss_out) *loss_out = loss_value(pred, target, lambda1);
  return net.backward(cache, loss_gradient(pred, target, lambda1));
}

double cosine_lr(double lr_init, int epoch, int max_epochs) {
  if (max_epochs <= 0) return lr_init;
  return lr_init * 0.5 *
         (1.0 + std::cos(std::numbers::pi * epoch / max_epochs));
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (weight_decay < 0.0)
    throw std::invalid_argument("train: weight_decay < 0");
  if (!(lr_init > 0.0)) throw std::invalid_argument("train: lr_init <= 0");
  if (max_epochs < 0) throw std::invalid_argument("train: max_epochs < 0");
  if (lambda1 < 0.0) throw std::invalid_argument("train: lambda1 < 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("train: sigma <= 0");
  if (upsample != 2 && upsample != 4 && upsample != 8 && upsample != 10)
    throw std::invalid_argument("train: upsample must be one of {2,4,8,10}");
  if (hidden_channels < 1)
    throw std::invalid_argument("train: hidden_channels < 1");
  if (threads < 1) throw std::invalid_argument("train: threads < 1");
}

namespace {

Eigen::MatrixXd augmented_input(const TrainSample& sample,
                                const TrainConfig& cfg, std::uint64_t seed) {
  RfFrame frame = sample.frame;
  if (frame.data.squaredNorm() > 0.0)
    frame = add_clutter_noise(frame, cfg.augment_clutter_db, seed);
  if (cfg.augment_normalize) frame = normalize_amplitude(frame);
  return frame_to_planes(frame);
}

}  // namespace

TrainResult train(const std::vector<TrainSample>& samples,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (samples.empty())
    throw std::invalid_argument("train: need at least one training frame");

  const int u = samples.front().frame.num_samples();
  const int v = samples.front().frame.num_channels();
  for (const auto& s : samples)
    if (s.frame.num_samples() != u || s.frame.num_channels() != v)
      throw std::invalid_argument("train: mixed frame shapes");

  std::vector<TargetMask> targets;
  targets.reserve(samples.size());
  for (const auto& s : samples)
    targets.push_back(build_target(s.labels, cfg.upsample, cfg.sigma, u, v));

  TrainResult result{
      SrNetwork::make_default(2, cfg.hidden_channels, cfg.upsample,
                              derive_seed(cfg.seed, 0x1417)),
      {}};
  SrNetwork& net = result.network;

  const long n_params = net.parameter_count();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(n_params);
  Eigen::VectorXd v_adam = Eigen::VectorXd::Zero(n_params);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  const int n = static_cast<int>(samples.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  // Per-slot workspaces reused across the whole run keep the hot loop
  // free of large allocations.
  std::vector<SrNetwork::Cache> caches(cfg.batch_size);
  std::vector<Eigen::VectorXd> grads(cfg.batch_size);
  std::vector<double> losses(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = cosine_lr(cfg.lr_init, epoch, cfg.max_epochs);

    Rng shuffle_rng(derive_seed(cfg.seed, 0x5EED + epoch));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.uniform_int(0, i)]);

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      std::vector<int> batch(order.begin() + start,
                             order.begin() + start + count);
      std::sort(batch.begin(), batch.end());  // fixed accumulation order

      parallel_for(count, cfg.threads, [&](int slot) {
        const int idx = batch[slot];
        const Eigen::MatrixXd input = augmented_input(
            samples[idx], cfg,
            derive_seed(cfg.seed,
                        0xA06ULL + static_cast<std::uint64_t>(epoch) * n +
                            idx));
        const Eigen::MatrixXd pred = net.forward(input, u, v, &caches[slot]);
        losses[slot] = loss_value(pred, targets[idx], cfg.lambda1);
        grads[slot] = net.backward(
            caches[slot], loss_gradient(pred, targets[idx], cfg.lambda1));
      });

      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
      double batch_loss = 0.0;
      for (int slot = 0; slot < count; ++slot) {
        grad += grads[slot];
        batch_loss += losses[slot];
      }
      grad /= count;
      batch_loss /= count;
      loss_sum += batch_loss * count;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << ", step "
            << step;
        throw std::runtime_error(msg.str());
      }

      grad += cfg.weight_decay * net.parameters();
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      m = beta1 * m + (1.0 - beta1) * grad;
      v_adam = beta2 * v_adam + (1.0 - beta2) * grad.cwiseAbs2();
      net.parameters() -=
          (lr / bc1) * m.cwiseQuotient(((v_adam / bc2).cwiseSqrt().array() +
                                        eps).matrix());
    }
    if (!net.parameters().allFinite()) {
      std::ostringstream msg;
      msg << "train: non-finite parameters after epoch " << epoch;
      throw std::runtime_error(msg.str());
    }
    result.history.push_back({loss_sum / n, lr});
  }
  return result;
}

LocalizationSet weighted_average_baseline(const Eigen::MatrixXd& envelope,
                                          const BmodeGrid& grid, int window,
                                          double threshold) {
  const Eigen::MatrixXd peaks = nms(envelope, window);
  const int h = static_cast<int>(envelope.rows());
  const int w = static_cast<int>(envelope.cols());
  const int half = window / 2;

  LocalizationSet out;
  out.space = Space::Bmode;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      if (peaks(i, j) == 0.0 || peaks(i, j) < threshold) continue;
      double mass = 0.0, mr = 0.0, mc = 0.0;
      for (int r = std::max(0, i - half); r <= std::min(h - 1, i + half); ++r)
        for (int c = std::max(0, j - half); c <= std::min(w - 1, j + half);
             ++c) {
          mass += envelope(r, c);
          mr += envelope(r, c) * r;
          mc += envelope(r, c) * c;
        }
      if (mass <= 0.0) continue;
      Localization p;
      p.coords = {grid.lateral_of(mc / mass), grid.axial_of(mr / mass)};
      p.score = peaks(i, j);
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace rfulm
