// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "rfulm/geometry.hpp"

namespace rfulm {

/// One RF channel-data record: complex samples, fast time down the
/// rows (U samples) and transducer channels across the columns (V = K).
/// The network consumes it as two real feature planes (real, imag).
struct RfFrame {
  Eigen::MatrixXcd data;  // U x V
  double tx_angle = 0.0;
  int frame_index = 0;
  double normalization_scale = 1.0;

  int num_samples() const { return static_cast<int>(data.rows()); }
  int num_channels() const { return static_cast<int>(data.cols()); }
};

/// Frames sharing geometry and transmit angle, filtered jointly.
struct FrameStack {
  std::vector<RfFrame> frames;
};

/// Casorati view of a stack: one flattened frame per column.
Eigen::MatrixXcd casorati_matrix(const FrameStack& s);

/// Regular B-mode pixel grid in wavelength units. Row i maps to axial
/// ax0 + i*dax, column j to lateral lat0 + j*dlat.
struct BmodeGrid {
  double lat0 = 0.0;
  double ax0 = 0.0;
  double dlat = 0.5;
  double dax = 0.5;
  int height = 0;
  int width = 0;

  double lateral_of(double col) const { return lat0 + col * dlat; }
  double axial_of(double row) const { return ax0 + row * dax; }
  bool operator==(const BmodeGrid&) const = default;
};

struct BmodeImage {
  Eigen::MatrixXcd data;  // height x width
  BmodeGrid grid;
};

/// Grid covering the aperture minus one pitch laterally and
/// [2, depth-2] wavelengths axially.
BmodeGrid default_bmode_grid(const ArrayGeometry& g, double dlat_wl = 0.5,
                             double dax_wl = 0.5);

struct Scatterer {
  BmodePoint position;  // wavelength units
  double amplitude = 1.0;
};

/// Gaussian-envelope pulse; sigma_t is derived from the -6 dB
/// fractional bandwidth of the envelope spectrum.
struct PulseSpec {
  double center_frequency = 5.0e6;
  double fractional_bandwidth = 0.67;

  double sigma_t() const;
};

struct SimResult {
  RfFrame frame;
  std::vector<RfLabel> rf_labels;       // apex labels, in-aperture only
  std::vector<BmodePoint> bmode_labels; // aligned with rf_labels
  int dropped_labels = 0;               // scatterers projecting off-frame
};

/// Forward model consistent with the ToF projection: each scatterer
/// contributes, on every channel, a Gaussian-envelope complex
/// exponential a*exp(-(t-t_ik)^2/(2 sigma^2))*exp(-j*2*pi*fc*(t-t_ik))
/// centered at that channel's projected arrival time.
SimResult simulate_rf_frame(const std::vector<Scatterer>& scatterers,
                            const ArrayGeometry& g, const PulseSpec& pulse);

/// Adds spatially smoothed complex Gaussian noise scaled so that
/// 10*log10(P_signal/P_noise) equals ratio_db against the pre-noise
/// frame. ratio_db = +infinity is the "off" sentinel. Throws for an
/// all-zero frame with a finite ratio.
RfFrame add_clutter_noise(const RfFrame& f, double ratio_db,
                          std::uint64_t seed);

/// Divides by the frame peak max(|real|, |imag|) and records the scale;
/// output lies in [-1, 1] on both planes. An all-zero frame passes
/// through with scale 1.
RfFrame normalize_amplitude(const RfFrame& f);

/// FFT-based analytic signal along fast time, one channel at a time.
/// The real part of the output equals the input exactly.
RfFrame hilbert_analytic(const Eigen::MatrixXd& real_frame);

/// Spatio-temporal clutter filter: zeroes the cut_low largest and
/// cut_high smallest singular components of the Casorati matrix and
/// reconstructs. Throws when the cuts exhaust min(U*V, F).
FrameStack svd_filter(const FrameStack& s, int cut_low, int cut_high);

/// Fast-time FFT bandpass keeping bins with |f| in [f_lo, f_hi]
/// (two-sided, so analytic and real signals are handled alike).
RfFrame bandpass_filter(const RfFrame& f, double f_lo, double f_hi,
                        double sample_rate);

/// Plane-wave delay-and-sum on the given grid with rectangular
/// f-number apodization; transmit delays use the same ToF model as the
/// simulator. Out-of-range delays contribute zero.
BmodeImage das_beamform(const RfFrame& f, const ArrayGeometry& g,
                        const BmodeGrid& grid, double f_number = 1.0);

/// Coherent compounding: complex mean across per-angle images.
BmodeImage compound(const std::vector<BmodeImage>& images);

}  // namespace rfulm
