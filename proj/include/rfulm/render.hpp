// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "rfulm/geometry.hpp"
#include "rfulm/signal.hpp"
#include "rfulm/util.hpp"

namespace rfulm {

/// Accumulation grid at upsample factor rho relative to a B-mode grid.
/// Bin (i, j) covers axial [ax0 + i*bin_ax, ...) and lateral
/// [lat0 + j*bin_lat, ...), all in wavelength units.
struct CanvasSpec {
  double lat0 = 0.0;
  double ax0 = 0.0;
  double bin_lat = 0.05;
  double bin_ax = 0.05;
  int height = 0;
  int width = 0;
  double dither_pixel = 0.0;  // localization pixel size; 0 turns dither off
  std::uint64_t seed = 0;
};

/// Canvas covering the B-mode grid extent with rho x rho bins per
/// B-mode pixel.
CanvasSpec canvas_for_grid(const BmodeGrid& grid, int rho,
                           double dither_pixel, std::uint64_t seed);

struct UlmCanvas {
  Eigen::Array<std::uint32_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  CanvasSpec spec;
  long dropped = 0;  // points falling outside the canvas
};

/// Additive rendering dither: independent uniform offsets in
/// [-pixel/4, +pixel/4] per axis, a total spread of half the
/// localization pixel. pixel == 0 is the "off" sentinel and consumes
/// no random numbers.
BmodePoint dither(const BmodePoint& p, double pixel, Rng& rng);
BmodePoint dither(const BmodePoint& p, double pixel, std::uint64_t seed);

/// Increments the bin under each dithered point; out-of-canvas points
/// are counted in `dropped`, so bin mass plus dropped equals the input
/// size exactly.
UlmCanvas accumulate(const std::vector<BmodePoint>& points,
                     const CanvasSpec& spec);

/// Normalizes counts to [0, 1], applies v^gamma and writes a 16-bit
/// grayscale image: PGM when the path ends in .pgm, PNG otherwise.
/// Identical canvas and settings produce identical bytes.
void export_image(const UlmCanvas& c, double gamma, const std::string& path);

/// Raw count dump: magic ULC1, little-endian u32 {version=1, height,
/// width}, then height*width u32 counts column-major.
void export_counts(const UlmCanvas& c, const std::string& path);

}  // namespace rfulm
