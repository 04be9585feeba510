// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rfulm/util.hpp"

namespace rfulm {

namespace {
constexpr double kPi = std::numbers::pi;
}

Eigen::MatrixXcd casorati_matrix(const FrameStack& s) {
  if (s.frames.empty()) return {};
  const int u = s.frames.front().num_samples();
  const int v = s.frames.front().num_channels();
  Eigen::MatrixXcd x(static_cast<long>(u) * v, s.frames.size());
  for (std::size_t f = 0; f < s.frames.size(); ++f) {
    if (s.frames[f].num_samples() != u || s.frames[f].num_channels() != v)
      throw std::invalid_argument("casorati_matrix: mixed frame shapes");
    x.col(f) = s.frames[f].data.reshaped();
  }
  return x;
}

BmodeGrid default_bmode_grid(const ArrayGeometry& g, double dlat_wl,
                             double dax_wl) {
  if (dlat_wl <= 0.0 || dax_wl <= 0.0)
    throw std::invalid_argument("default_bmode_grid: pitches must be > 0");
  const double lam = g.wavelength();
  const double pitch = (g.element(1) - g.element(0)).x();
  const double lat_min = (g.elements().front().x() + pitch) / lam;
  const double lat_max = (g.elements().back().x() - pitch) / lam;
  const double depth =
      0.5 * g.speed_of_sound() * g.num_samples() / g.sample_rate() / lam;
  BmodeGrid grid;
  grid.lat0 = lat_min;
  grid.ax0 = 2.0;
  grid.dlat = dlat_wl;
  grid.dax = dax_wl;
  grid.width = static_cast<int>(std::floor((lat_max - lat_min) / dlat_wl)) + 1;
  grid.height = static_cast<int>(std::floor((depth - 4.0) / dax_wl)) + 1;
  if (grid.width < 2 || grid.height < 2)
    throw std::invalid_argument("default_bmode_grid: degenerate field");
  return grid;
}

double PulseSpec::sigma_t() const {
  // Gaussian envelope whose spectrum is -6 dB down at
  // +/- fractional_bandwidth * fc / 2 around the carrier.
  const double half_band = 0.5 * fractional_bandwidth * center_frequency;
  return std::sqrt(2.0 * std::log(2.0)) / (2.0 * kPi * half_band);
}

SimResult simulate_rf_frame(const std::vector<Scatterer>& scatterers,
                            const ArrayGeometry& g, const PulseSpec& pulse) {
  const int u_count = g.num_samples();
  const int k_count = g.num_channels();
  SimResult result;
  result.frame.data = Eigen::MatrixXcd::Zero(u_count, k_count);

  const double sigma_t = pulse.sigma_t();
  const double fs = g.sample_rate();
  const double omega = 2.0 * kPi * pulse.center_frequency;

  for (std::size_t i = 0; i < scatterers.size(); ++i) {
    const auto& sc = scatterers[i];
    if (!(sc.amplitude > 0.0))
      throw std::invalid_argument("simulate_rf_frame: amplitude must be > 0");
    const auto wavefront = project_all_channels(sc.position, g);
    for (const auto& [k, arrival] : wavefront) {
      for (int u = 0; u < u_count; ++u) {
        const double dt = (u - arrival) / fs;
        const double envelope =
            sc.amplitude * std::exp(-dt * dt / (2.0 * sigma_t * sigma_t));
        result.frame.data(u, k) +=
            envelope * std::complex<double>(std::cos(omega * dt),
                                            -std::sin(omega * dt));
      }
    }
    RfLabel apex = isolate_apex(wavefront);
    apex.source_index = static_cast<int>(i);
    if (in_aperture(apex, g)) {
      result.rf_labels.push_back(apex);
      result.bmode_labels.push_back(sc.position);
    } else {
      ++result.dropped_labels;
    }
  }
  return result;
}

RfFrame add_clutter_noise(const RfFrame& f, double ratio_db,
                          std::uint64_t seed) {
  if (f.data.size() == 0)
    throw std::invalid_argument("add_clutter_noise: empty frame");
  if (std::isinf(ratio_db) && ratio_db > 0.0) return f;  // "off" sentinel
  if (!std::isfinite(ratio_db))
    throw std::invalid_argument("add_clutter_noise: invalid ratio");

  const double signal_power = f.data.squaredNorm() / f.data.size();
  if (signal_power == 0.0)
    throw std::invalid_argument(
        "add_clutter_noise: signal power undefined for an all-zero frame");

  const int u = f.num_samples();
  const int v = f.num_channels();
  Rng rng(seed);
  Eigen::MatrixXcd white(u, v);
  for (int col = 0; col < v; ++col)
    for (int row = 0; row < u; ++row)
      white(row, col) = std::complex<double>(rng.normal(), rng.normal());

  // 3x3 Gaussian smoothing kernel, zero-padded borders.
  const double kw[3] = {0.25, 0.5, 0.25};
  Eigen::MatrixXcd smooth = Eigen::MatrixXcd::Zero(u, v);
  for (int col = 0; col < v; ++col) {
    for (int row = 0; row < u; ++row) {
      std::complex<double> acc(0.0, 0.0);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int r = row + dr;
          const int c = col + dc;
          if (r < 0 || r >= u || c < 0 || c >= v) continue;
          acc += kw[dr + 1] * kw[dc + 1] * white(r, c);
        }
      }
      smooth(row, col) = acc;
    }
  }

  const double noise_power = smooth.squaredNorm() / smooth.size();
  const double target_power = signal_power / std::pow(10.0, ratio_db / 10.0);
  const double scale = std::sqrt(target_power / noise_power);

  RfFrame out = f;
  out.data += scale * smooth;
  return out;
}

RfFrame normalize_amplitude(const RfFrame& f) {
  const double peak = std::max(f.data.real().cwiseAbs().maxCoeff(),
                               f.data.imag().cwiseAbs().maxCoeff());
  RfFrame out = f;
  if (peak == 0.0) {
    std::cerr << "rfulm: warning: normalize_amplitude on an all-zero frame\n";
    out.normalization_scale = 1.0;
    return out;
  }
  out.data /= peak;
  out.normalization_scale = f.normalization_scale * peak;
  return out;
}

RfFrame hilbert_analytic(const Eigen::MatrixXd& real_frame) {
  const int u = static_cast<int>(real_frame.rows());
  const int v = static_cast<int>(real_frame.cols());
  if (u < 4)
    throw std::invalid_argument("hilbert_analytic: need at least 4 samples");

  RfFrame out;
  out.data.resize(u, v);
  Eigen::FFT<double> fft;
  Eigen::VectorXcd time(u), freq(u);
  for (int col = 0; col < v; ++col) {
    time = real_frame.col(col).cast<std::complex<double>>();
    fft.fwd(freq, time);
    // Analytic-signal weights: keep DC (and Nyquist for even lengths),
    // double positive frequencies, zero negative ones.
    const int half = u / 2;
    for (int i = 1; i < half; ++i) freq(i) *= 2.0;
    if (u % 2 == 1) freq(half) *= 2.0;
    for (int i = half + 1; i < u; ++i) freq(i) = 0.0;
    fft.inv(time, freq);
    out.data.col(col) = time;
  }
  // The real plane is the input by construction.
  out.data.real() = real_frame;
  return out;
}

FrameStack svd_filter(const FrameStack& s, int cut_low, int cut_high) {
  const int f_count = static_cast<int>(s.frames.size());
  if (f_count < 2)
    throw std::invalid_argument("svd_filter: need at least 2 frames");
  if (cut_low < 0 || cut_high < 0)
    throw std::invalid_argument("svd_filter: cuts must be >= 0");

  const Eigen::MatrixXcd x = casorati_matrix(s);
  const int space = static_cast<int>(x.rows());
  const int components = std::min(space, f_count);
  if (cut_low + cut_high >= components)
    throw std::invalid_argument("svd_filter: cuts exhaust the rank");

  const int keep = components - cut_low - cut_high;
  Eigen::MatrixXcd filtered;
  if (f_count <= space) {
    // Eigen-decompose the F x F Gram matrix; eigenvalues come ascending,
    // so the cut_high smallest components are the leading columns and the
    // cut_low largest are the trailing ones.
    const Eigen::MatrixXcd gram = x.adjoint() * x;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("svd_filter: eigendecomposition failed");
    const Eigen::MatrixXcd basis = es.eigenvectors().middleCols(cut_high, keep);
    filtered = (x * basis) * basis.adjoint();
  } else {
    const Eigen::MatrixXcd gram = x * x.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("svd_filter: eigendecomposition failed");
    const Eigen::MatrixXcd basis = es.eigenvectors().middleCols(cut_high, keep);
    filtered = basis * (basis.adjoint() * x);
  }

  FrameStack out = s;
  const int u = s.frames.front().num_samples();
  const int v = s.frames.front().num_channels();
  for (int f = 0; f < f_count; ++f)
    out.frames[f].data = filtered.col(f).reshaped(u, v);
  return out;
}

RfFrame bandpass_filter(const RfFrame& f, double f_lo, double f_hi,
                        double sample_rate) {
  if (!(f_lo >= 0.0) || !(f_lo < f_hi) || !(f_hi <= 0.5 * sample_rate))
    throw std::invalid_argument(
        "bandpass_filter: need 0 <= f_lo < f_hi <= fs/2");
  const int u = f.num_samples();
  const int v = f.num_channels();
  RfFrame out = f;
  Eigen::FFT<double> fft;
  Eigen::VectorXcd time(u), freq(u);
  for (int col = 0; col < v; ++col) {
    time = f.data.col(col);
    fft.fwd(freq, time);
    for (int i = 0; i < u; ++i) {
      const double bin_hz = (i <= u / 2 ? i : i - u) * sample_rate / u;
      const double mag = std::abs(bin_hz);
      if (mag < f_lo || mag > f_hi) freq(i) = 0.0;
    }
    fft.inv(time, freq);
    out.data.col(col) = time;
  }
  return out;
}

BmodeImage das_beamform(const RfFrame& f, const ArrayGeometry& g,
                        const BmodeGrid& grid, double f_number) {
  const int u = f.num_samples();
  if (f.num_channels() != g.num_channels())
    throw std::invalid_argument("das_beamform: channel count mismatch");
  BmodeImage img;
  img.grid = grid;
  img.data = Eigen::MatrixXcd::Zero(grid.height, grid.width);
  const double fs_over_c = g.sample_rate() / g.speed_of_sound();

  for (int j = 0; j < grid.width; ++j) {
    for (int i = 0; i < grid.height; ++i) {
      const BmodePoint p{grid.lateral_of(j), grid.axial_of(i)};
      const Eigen::Vector3d pm = g.point_to_meters(p);
      const double tx = (pm - g.virtual_source()).norm() - g.start_offset();
      const double half_aperture =
          f_number > 0.0 ? pm.z() / (2.0 * f_number)
                         : std::numeric_limits<double>::infinity();
      std::complex<double> acc(0.0, 0.0);
      for (int k = 0; k < g.num_channels(); ++k) {
        if (std::abs(pm.x() - g.element(k).x()) > half_aperture) continue;
        const double tau = (tx + (pm - g.element(k)).norm()) * fs_over_c;
        if (tau < 0.0 || tau > u - 1) continue;
        const int lo = static_cast<int>(tau);
        const double w = tau - lo;
        const std::complex<double> sample =
            lo + 1 <= u - 1
                ? (1.0 - w) * f.data(lo, k) + w * f.data(lo + 1, k)
                : f.data(lo, k);
        acc += sample;
      }
      img.data(i, j) = acc;
    }
  }
  return img;
}

BmodeImage compound(const std::vector<BmodeImage>& images) {
  if (images.empty())
    throw std::invalid_argument("compound: need at least one image");
  BmodeImage out = images.front();
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (!(images[i].grid == out.grid))
      throw std::invalid_argument("compound: grid mismatch");
    out.data += images[i].data;
  }
  out.data /= static_cast<double>(images.size());
  return out;
}

}  // namespace rfulm
