// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/render.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "rfulm/io.hpp"

namespace rfulm {

CanvasSpec canvas_for_grid(const BmodeGrid& grid, int rho,
                           double dither_pixel, std::uint64_t seed) {
  if (rho < 1) throw std::invalid_argument("canvas_for_grid: rho must be >= 1");
  CanvasSpec spec;
  spec.bin_lat = grid.dlat / rho;
  spec.bin_ax = grid.dax / rho;
  // Cover the full pixel extent of the grid, half a pixel beyond the
  // outermost pixel centers.
  spec.lat0 = grid.lat0 - 0.5 * grid.dlat;
  spec.ax0 = grid.ax0 - 0.5 * grid.dax;
  spec.width = grid.width * rho;
  spec.height = grid.height * rho;
  spec.dither_pixel = dither_pixel;
  spec.seed = seed;
  return spec;
}

BmodePoint dither(const BmodePoint& p, double pixel, Rng& rng) {
  if (pixel < 0.0) throw std::invalid_argument("dither: pixel size < 0");
  if (pixel == 0.0) return p;
  const double quarter = 0.25 * pixel;
  return {p.lateral + rng.uniform(-quarter, quarter),
          p.axial + rng.uniform(-quarter, quarter)};
}

BmodePoint dither(const BmodePoint& p, double pixel, std::uint64_t seed) {
  Rng rng(seed);
  return dither(p, pixel, rng);
}

UlmCanvas accumulate(const std::vector<BmodePoint>& points,
                     const CanvasSpec& spec) {
  if (spec.height < 1 || spec.width < 1)
    throw std::invalid_argument("accumulate: empty canvas spec");
  UlmCanvas canvas;
  canvas.spec = spec;
  canvas.counts.setZero(spec.height, spec.width);
  Rng rng(spec.seed);
  for (const auto& point : points) {
    const BmodePoint q = dither(point, spec.dither_pixel, rng);
    const double col = std::floor((q.lateral - spec.lat0) / spec.bin_lat);
    const double row = std::floor((q.axial - spec.ax0) / spec.bin_ax);
    if (row < 0.0 || row >= spec.height || col < 0.0 || col >= spec.width) {
      ++canvas.dropped;
      continue;
    }
    ++canvas.counts(static_cast<int>(row), static_cast<int>(col));
  }
  return canvas;
}

void export_image(const UlmCanvas& c, double gamma, const std::string& path) {
  if (!(gamma > 0.0)) throw std::invalid_argument("export_image: gamma <= 0");
  const std::uint32_t peak = c.counts.maxCoeff();
  Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic> img(
      c.counts.rows(), c.counts.cols());
  for (long j = 0; j < c.counts.cols(); ++j) {
    for (long i = 0; i < c.counts.rows(); ++i) {
      const double v =
          peak == 0 ? 0.0
                    : static_cast<double>(c.counts(i, j)) / peak;
      img(i, j) = static_cast<std::uint16_t>(
          std::lround(std::pow(v, gamma) * 65535.0));
    }
  }
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".pgm") == 0)
    write_pgm16(path, img);
  else
    write_png16(path, img);
}

void export_counts(const UlmCanvas& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("export_counts: cannot open " + path);
  const char magic[4] = {'U', 'L', 'C', '1'};
  out.write(magic, 4);
  auto put_u32 = [&out](std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(c.counts.rows()));
  put_u32(static_cast<std::uint32_t>(c.counts.cols()));
  for (long j = 0; j < c.counts.cols(); ++j)
    for (long i = 0; i < c.counts.rows(); ++i) put_u32(c.counts(i, j));
  if (!out) throw std::runtime_error("export_counts: write failed");
}

}  // namespace rfulm
