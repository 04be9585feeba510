// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/network.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "rfulm/util.hpp"

namespace rfulm {

namespace {

// Patch matrix for a same-padded convolution: row c*k*k + du*k + dv of
// column (v*U + u) holds input channel c at (u + du - pad, v + dv - pad),
// zero outside the frame. Writes into a caller-owned buffer so repeated
// steps reuse their allocation.
void im2col(const Eigen::MatrixXd& x, int k, int u_dim, int v_dim,
            Eigen::MatrixXd& cols) {
  const int channels = static_cast<int>(x.rows());
  const int pad = k / 2;
  cols.resize(static_cast<long>(channels) * k * k,
              static_cast<long>(u_dim) * v_dim);
  cols.setZero();
  for (int v = 0; v < v_dim; ++v) {
    for (int u = 0; u < u_dim; ++u) {
      const long site = static_cast<long>(v) * u_dim + u;
      for (int du = 0; du < k; ++du) {
        const int su = u + du - pad;
        if (su < 0 || su >= u_dim) continue;
        for (int dv = 0; dv < k; ++dv) {
          const int sv = v + dv - pad;
          if (sv < 0 || sv >= v_dim) continue;
          const long src = static_cast<long>(sv) * u_dim + su;
          for (int c = 0; c < channels; ++c)
            cols(static_cast<long>(c) * k * k + du * k + dv, site) = x(c, src);
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds patch gradients back onto the input.
void col2im(const Eigen::MatrixXd& cols, int channels, int k, int u_dim,
            int v_dim, Eigen::MatrixXd& x) {
  const int pad = k / 2;
  x.resize(channels, static_cast<long>(u_dim) * v_dim);
  x.setZero();
  for (int v = 0; v < v_dim; ++v) {
    for (int u = 0; u < u_dim; ++u) {
      const long site = static_cast<long>(v) * u_dim + u;
      for (int du = 0; du < k; ++du) {
        const int su = u + du - pad;
        if (su < 0 || su >= u_dim) continue;
        for (int dv = 0; dv < k; ++dv) {
          const int sv = v + dv - pad;
          if (sv < 0 || sv >= v_dim) continue;
          const long src = static_cast<long>(sv) * u_dim + su;
          for (int c = 0; c < channels; ++c)
            x(c, src) += cols(static_cast<long>(c) * k * k + du * k + dv, site);
        }
      }
    }
  }
}

int isqrt_exact(int n) {
  const int r =
      static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  return r * r == n ? r : -1;
}

}  // namespace

Eigen::MatrixXd pixel_shuffle(const Eigen::MatrixXd& planes, int u, int v) {
  const int r = isqrt_exact(static_cast<int>(planes.rows()));
  if (r < 1)
    throw std::invalid_argument(
        "pixel_shuffle: plane count must be a perfect square");
  if (planes.cols() != static_cast<long>(u) * v)
    throw std::invalid_argument("pixel_shuffle: site count mismatch");
  Eigen::MatrixXd out(static_cast<long>(r) * u, static_cast<long>(r) * v);
  for (int vv = 0; vv < v; ++vv) {
    for (int uu = 0; uu < u; ++uu) {
      const long site = static_cast<long>(vv) * u + uu;
      for (int r1 = 0; r1 < r; ++r1)
        for (int r2 = 0; r2 < r; ++r2)
          out(static_cast<long>(r) * uu + r1, static_cast<long>(r) * vv + r2) =
              planes(r1 * r + r2, site);
    }
  }
  return out;
}

Eigen::MatrixXd pixel_unshuffle(const Eigen::MatrixXd& image, int r) {
  if (r < 1 || image.rows() % r != 0 || image.cols() % r != 0)
    throw std::invalid_argument("pixel_unshuffle: shape not divisible by r");
  const int u = static_cast<int>(image.rows()) / r;
  const int v = static_cast<int>(image.cols()) / r;
  Eigen::MatrixXd planes(static_cast<long>(r) * r, static_cast<long>(u) * v);
  for (int vv = 0; vv < v; ++vv)
    for (int uu = 0; uu < u; ++uu) {
      const long site = static_cast<long>(vv) * u + uu;
      for (int r1 = 0; r1 < r; ++r1)
        for (int r2 = 0; r2 < r; ++r2)
          planes(r1 * r + r2, site) = image(static_cast<long>(r) * uu + r1,
                                            static_cast<long>(r) * vv + r2);
    }
  return planes;
}

Eigen::MatrixXd frame_to_planes(const RfFrame& f) {
  Eigen::MatrixXd planes(2, f.data.size());
  planes.row(0) = f.data.real().reshaped().transpose();
  planes.row(1) = f.data.imag().reshaped().transpose();
  return planes;
}

SrNetwork::SrNetwork(std::vector<ConvSpec> layers, int upsample_factor,
                     std::uint64_t seed)
    : layers_(std::move(layers)), upsample_(upsample_factor) {
  if (layers_.empty()) throw std::invalid_argument("SrNetwork: no layers");
  if (upsample_ < 1) throw std::invalid_argument("SrNetwork: upsample < 1");
  long total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& spec = layers_[l];
    if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 ||
        spec.kernel % 2 == 0)
      throw std::invalid_argument("SrNetwork: bad layer spec");
    if (l > 0 && spec.in_channels != layers_[l - 1].out_channels)
      throw std::invalid_argument("SrNetwork: channel chain mismatch");
    Slice s;
    s.weight_offset = total;
    total += static_cast<long>(spec.out_channels) * spec.in_channels *
             spec.kernel * spec.kernel;
    s.bias_offset = total;
    total += spec.out_channels;
    slices_.push_back(s);
  }
  if (layers_.back().out_channels != upsample_ * upsample_)
    throw std::invalid_argument(
        "SrNetwork: final layer must emit R^2 feature planes");
  if (layers_.back().relu)
    throw std::invalid_argument("SrNetwork: final layer must be linear");

  params_.resize(total);
  Rng rng(seed);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& spec = layers_[l];
    const long wsize = static_cast<long>(spec.out_channels) *
                       spec.in_channels * spec.kernel * spec.kernel;
    const double fan_in =
        static_cast<double>(spec.in_channels) * spec.kernel * spec.kernel;
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (long i = 0; i < wsize; ++i)
      params_(slices_[l].weight_offset + i) = std_dev * rng.normal();
    for (int i = 0; i < spec.out_channels; ++i)
      params_(slices_[l].bias_offset + i) = 0.0;
  }
}

SrNetwork SrNetwork::make_default(int in_channels, int hidden_channels,
                                  int upsample_factor, std::uint64_t seed) {
  const int r2 = upsample_factor * upsample_factor;
  std::vector<ConvSpec> layers = {
      {in_channels, hidden_channels, 3, true},
      {hidden_channels, hidden_channels, 3, true},
      {hidden_channels, hidden_channels, 3, true},
      {hidden_channels, r2, 3, false},
  };
  return SrNetwork(std::move(layers), upsample_factor, seed);
}

Eigen::Map<const Eigen::MatrixXd> SrNetwork::weight(int layer) const {
  const auto& spec = layers_[layer];
  return {params_.data() + slices_[layer].weight_offset, spec.out_channels,
          static_cast<long>(spec.in_channels) * spec.kernel * spec.kernel};
}

Eigen::Map<const Eigen::VectorXd> SrNetwork::bias(int layer) const {
  return {params_.data() + slices_[layer].bias_offset,
          layers_[layer].out_channels};
}

Eigen::MatrixXd SrNetwork::forward(const Eigen::MatrixXd& input, int u, int v,
                                   Cache* cache) const {
  if (input.rows() != layers_.front().in_channels ||
      input.cols() != static_cast<long>(u) * v)
    throw std::invalid_argument("SrNetwork::forward: input shape mismatch");
  const std::size_t n_layers = layers_.size();
  Cache local;
  Cache& ws = cache ? *cache : local;
  ws.u = u;
  ws.v = v;
  ws.patches.resize(n_layers);
  ws.pre_act.resize(n_layers);
  ws.act.resize(n_layers);

  const Eigen::MatrixXd* x = &input;
  for (std::size_t l = 0; l < n_layers; ++l) {
    im2col(*x, layers_[l].kernel, u, v, ws.patches[l]);
    ws.pre_act[l].noalias() = weight(static_cast<int>(l)) * ws.patches[l];
    ws.pre_act[l].colwise() += bias(static_cast<int>(l));
    if (!ws.pre_act[l].allFinite())
      throw std::runtime_error("SrNetwork: non-finite activation in conv" +
                               std::to_string(l + 1));
    if (layers_[l].relu) {
      ws.act[l] = ws.pre_act[l].cwiseMax(0.0);
      x = &ws.act[l];
    } else {
      x = &ws.pre_act[l];
    }
  }
  return pixel_shuffle(*x, u, v);
}

Eigen::VectorXd SrNetwork::backward(Cache& cache,
                                    const Eigen::MatrixXd& d_heatmap) const {
  const std::size_t n_layers = layers_.size();
  if (cache.patches.size() != n_layers)
    throw std::invalid_argument("SrNetwork::backward: stale cache");
  Eigen::VectorXd grad(params_.size());
  cache.dx.resize(n_layers);
  cache.dcols.resize(n_layers);
  cache.dx.back() = pixel_unshuffle(d_heatmap, upsample_);
  for (int l = static_cast<int>(n_layers) - 1; l >= 0; --l) {
    const auto& spec = layers_[l];
    Eigen::MatrixXd& dx = cache.dx[l];
    if (spec.relu)
      dx.array() *= (cache.pre_act[l].array() > 0.0).cast<double>();
    Eigen::Map<Eigen::MatrixXd>(
        grad.data() + slices_[l].weight_offset, spec.out_channels,
        static_cast<long>(spec.in_channels) * spec.kernel * spec.kernel)
        .noalias() = dx * cache.patches[l].transpose();
    Eigen::Map<Eigen::VectorXd>(grad.data() + slices_[l].bias_offset,
                                spec.out_channels) = dx.rowwise().sum();
    if (l > 0) {
      cache.dcols[l].noalias() = weight(l).transpose() * dx;
      col2im(cache.dcols[l], spec.in_channels, spec.kernel, cache.u, cache.v,
             cache.dx[l - 1]);
    }
  }
  return grad;
}

namespace {

constexpr char kMagic[4] = {'S', 'R', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void SrNetwork::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("SrNetwork::save: cannot open " + path);
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(layers_.size()));
  put_u32(out, static_cast<std::uint32_t>(upsample_));
  for (const auto& spec : layers_) {
    put_u32(out, static_cast<std::uint32_t>(spec.in_channels));
    put_u32(out, static_cast<std::uint32_t>(spec.out_channels));
    put_u32(out, static_cast<std::uint32_t>(spec.kernel));
    put_u32(out, spec.relu ? 1 : 0);
  }
  for (long i = 0; i < params_.size(); ++i) {
    const float f = static_cast<float>(params_(i));
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
  if (!out) throw std::runtime_error("SrNetwork::save: write failed");
}

SrNetwork SrNetwork::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("SrNetwork::load: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("SrNetwork::load: bad magic");
  if (get_u32(in) != kVersion)
    throw std::runtime_error("SrNetwork::load: unsupported version");
  const std::uint32_t n_layers = get_u32(in);
  const std::uint32_t upsample = get_u32(in);
  std::vector<ConvSpec> layers;
  for (std::uint32_t l = 0; l < n_layers; ++l) {
    ConvSpec spec;
    spec.in_channels = static_cast<int>(get_u32(in));
    spec.out_channels = static_cast<int>(get_u32(in));
    spec.kernel = static_cast<int>(get_u32(in));
    spec.relu = get_u32(in) != 0;
    layers.push_back(spec);
  }
  if (!in) throw std::runtime_error("SrNetwork::load: truncated header");
  SrNetwork net(std::move(layers), static_cast<int>(upsample), 0);
  for (long i = 0; i < net.params_.size(); ++i) {
    const std::uint32_t bits = get_u32(in);
    float f;
    std::memcpy(&f, &bits, 4);
    net.params_(i) = static_cast<double>(f);
  }
  if (!in) throw std::runtime_error("SrNetwork::load: truncated parameters");
  return net;
}

}  // namespace rfulm
