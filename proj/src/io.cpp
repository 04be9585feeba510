// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace rfulm {

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f32(std::ostream& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

float get_f32(std::istream& in) {
  const std::uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

void write_rfb1(const std::string& path, const RfDataset& data) {
  if (data.angles.empty())
    throw std::invalid_argument("write_rfb1: need at least one angle");
  if (data.frames.size() % data.angles.size() != 0)
    throw std::invalid_argument(
        "write_rfb1: frame count must be a multiple of the angle count");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_rfb1: cannot open " + path);
  out.write("RFB1", 4);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(data.frames.size()));
  put_u32(out, static_cast<std::uint32_t>(data.num_samples));
  put_u32(out, static_cast<std::uint32_t>(data.num_channels));
  put_u32(out, static_cast<std::uint32_t>(data.angles.size()));
  for (const double a : data.angles) put_f32(out, static_cast<float>(a));
  for (const auto& frame : data.frames) {
    if (frame.num_samples() != data.num_samples ||
        frame.num_channels() != data.num_channels)
      throw std::invalid_argument("write_rfb1: frame shape mismatch");
    for (int v = 0; v < data.num_channels; ++v)
      for (int u = 0; u < data.num_samples; ++u) {
        put_f32(out, static_cast<float>(frame.data(u, v).real()));
        put_f32(out, static_cast<float>(frame.data(u, v).imag()));
      }
  }
  if (!out) throw std::runtime_error("write_rfb1: write failed");
}

RfDataset read_rfb1(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_rfb1: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "RFB1", 4) != 0)
    throw std::runtime_error("read_rfb1: bad magic");
  if (get_u32(in) != 1)
    throw std::runtime_error("read_rfb1: unsupported version");
  const std::uint32_t f_count = get_u32(in);
  const std::uint32_t u_count = get_u32(in);
  const std::uint32_t v_count = get_u32(in);
  const std::uint32_t a_count = get_u32(in);
  if (!in || a_count == 0)
    throw std::runtime_error("read_rfb1: corrupt header");
  if (f_count % a_count != 0)
    throw std::runtime_error(
        "read_rfb1: frame count not a multiple of the angle count");

  RfDataset data;
  data.num_samples = static_cast<int>(u_count);
  data.num_channels = static_cast<int>(v_count);
  for (std::uint32_t a = 0; a < a_count; ++a)
    data.angles.push_back(static_cast<double>(get_f32(in)));
  data.frames.reserve(f_count);
  for (std::uint32_t f = 0; f < f_count; ++f) {
    RfFrame frame;
    frame.data.resize(u_count, v_count);
    for (std::uint32_t v = 0; v < v_count; ++v)
      for (std::uint32_t u = 0; u < u_count; ++u) {
        const double re = static_cast<double>(get_f32(in));
        const double im = static_cast<double>(get_f32(in));
        frame.data(u, v) = {re, im};
      }
    frame.tx_angle = data.angles[f % a_count];
    frame.frame_index = static_cast<int>(f / a_count);
    data.frames.push_back(std::move(frame));
  }
  if (!in) throw std::runtime_error("read_rfb1: truncated samples");
  return data;
}

void write_points_csv(const std::string& path,
                      const std::vector<PointRecord>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_points_csv: cannot open " + path);
  out << "frame_index,space,angle_deg,coord1,coord2,score\n";
  char line[256];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%d,%s,%.9g,%.9g,%.9g,%.9g\n",
                  row.frame_index,
                  row.space == Space::Rf ? "rf" : "bmode", row.angle_deg,
                  row.coord1, row.coord2, row.score);
    out << line;
  }
  if (!out) throw std::runtime_error("write_points_csv: write failed");
}

std::vector<PointRecord> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_points_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "frame_index,space,angle_deg,coord1,coord2,score")
    throw std::runtime_error("read_points_csv: bad header in " + path);
  std::vector<PointRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      throw std::runtime_error("read_points_csv: malformed row: " + line);
    PointRecord row;
    row.frame_index = std::stoi(fields[0]);
    if (fields[1] == "rf")
      row.space = Space::Rf;
    else if (fields[1] == "bmode")
      row.space = Space::Bmode;
    else
      throw std::runtime_error("read_points_csv: unknown space " + fields[1]);
    row.angle_deg = std::strtod(fields[2].c_str(), nullptr);
    row.coord1 = std::strtod(fields[3].c_str(), nullptr);
    row.coord2 = std::strtod(fields[4].c_str(), nullptr);
    row.score = std::strtod(fields[5].c_str(), nullptr);
    rows.push_back(row);
  }
  return rows;
}

void write_loss_csv(const std::string& path,
                    const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_loss_csv: cannot open " + path);
  out << "epoch,mean_loss,lr\n";
  char line[128];
  for (std::size_t e = 0; e < history.size(); ++e) {
    std::snprintf(line, sizeof(line), "%zu,%.9g,%.9g\n", e,
                  history[e].mean_loss, history[e].learning_rate);
    out << line;
  }
  if (!out) throw std::runtime_error("write_loss_csv: write failed");
}

void save_affine_maps(const std::string& path,
                      const std::vector<AffineMap>& maps) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_affine_maps: cannot open " + path);
  out << "# rfulm affine maps v1: angle_deg a11 a12 a13 a21 a22 a23 "
         "residual_rms\n";
  char line[512];
  for (const auto& m : maps) {
    std::snprintf(line, sizeof(line),
                  "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n",
                  m.tx_angle * 180.0 / std::numbers::pi, m.coeffs(0, 0),
                  m.coeffs(0, 1), m.coeffs(0, 2), m.coeffs(1, 0),
                  m.coeffs(1, 1), m.coeffs(1, 2), m.fit_residual_rms);
    out << line;
  }
  if (!out) throw std::runtime_error("save_affine_maps: write failed");
}

std::vector<AffineMap> load_affine_maps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_affine_maps: cannot open " + path);
  std::vector<AffineMap> maps;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double angle_deg;
    AffineMap m;
    if (!(ss >> angle_deg >> m.coeffs(0, 0) >> m.coeffs(0, 1) >>
          m.coeffs(0, 2) >> m.coeffs(1, 0) >> m.coeffs(1, 1) >>
          m.coeffs(1, 2) >> m.fit_residual_rms))
      throw std::runtime_error("load_affine_maps: malformed line: " + line);
    m.tx_angle = angle_deg * std::numbers::pi / 180.0;
    maps.push_back(m);
  }
  return maps;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "method,rmse_mean_lambda10,rmse_std_lambda10,jaccard_percent,tp,fp,"
         "fn,time_s\n";
  char line[256];
  for (const auto& row : rows) {
    if (row.rmse.defined)
      std::snprintf(line, sizeof(line), "%s,%.9g,%.9g,", row.method.c_str(),
                    row.rmse.mean, row.rmse.stddev);
    else
      std::snprintf(line, sizeof(line), "%s,n/a,n/a,", row.method.c_str());
    out << line;
    if (row.jac.defined)
      std::snprintf(line, sizeof(line), "%.9g,%ld,%ld,%ld,%s\n",
                    row.jac.percent, row.jac.tp, row.jac.fp, row.jac.fn,
                    row.time_s.c_str());
    else
      std::snprintf(line, sizeof(line), "n/a,%ld,%ld,%ld,%s\n", row.jac.tp,
                    row.jac.fp, row.jac.fn, row.time_s.c_str());
    out << line;
  }
  if (!out) throw std::runtime_error("write_metrics_csv: write failed");
}

std::string metrics_table(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  out << "Method              RMSE [lambda/10]    Jaccard [%]    Time [s]\n";
  char line[256];
  for (const auto& row : rows) {
    char rmse[64], jac[32];
    if (row.rmse.defined)
      std::snprintf(rmse, sizeof(rmse), "%.3f+-%.3f", row.rmse.mean,
                    row.rmse.stddev);
    else
      std::snprintf(rmse, sizeof(rmse), "n/a");
    if (row.jac.defined)
      std::snprintf(jac, sizeof(jac), "%.3f", row.jac.percent);
    else
      std::snprintf(jac, sizeof(jac), "n/a");
    std::snprintf(line, sizeof(line), "%-18s %-19s %-14s %s\n",
                  row.method.c_str(), rmse, jac, row.time_s.c_str());
    out << line;
  }
  return out.str();
}

namespace {

void put_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>((v >> 24) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>(v & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_png_chunk(std::ostream& out, const char type[4],
                     const std::vector<unsigned char>& data) {
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  out.write(type, 4);
  if (!data.empty())
    out.write(reinterpret_cast<const char*>(data.data()), data.size());
  std::uint32_t crc =
      crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), data.size());
  put_u32_be(out, crc);
}

}  // namespace

void write_png16(
    const std::string& path,
    const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img) {
  const long h = img.rows();
  const long w = img.cols();
  if (h < 1 || w < 1) throw std::invalid_argument("write_png16: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_png16: cannot open " + path);
  const unsigned char signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  out.write(reinterpret_cast<const char*>(signature), 8);

  std::vector<unsigned char> ihdr(13);
  ihdr[0] = static_cast<unsigned char>((w >> 24) & 0xff);
  ihdr[1] = static_cast<unsigned char>((w >> 16) & 0xff);
  ihdr[2] = static_cast<unsigned char>((w >> 8) & 0xff);
  ihdr[3] = static_cast<unsigned char>(w & 0xff);
  ihdr[4] = static_cast<unsigned char>((h >> 24) & 0xff);
  ihdr[5] = static_cast<unsigned char>((h >> 16) & 0xff);
  ihdr[6] = static_cast<unsigned char>((h >> 8) & 0xff);
  ihdr[7] = static_cast<unsigned char>(h & 0xff);
  ihdr[8] = 16;  // bit depth
  ihdr[9] = 0;   // grayscale
  ihdr[10] = 0;  // deflate
  ihdr[11] = 0;  // adaptive filtering
  ihdr[12] = 0;  // no interlace
  write_png_chunk(out, "IHDR", ihdr);

  // Raw scanlines: filter byte 0 then big-endian 16-bit samples.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(h) * (1 + 2 * w));
  for (long i = 0; i < h; ++i) {
    raw.push_back(0);
    for (long j = 0; j < w; ++j) {
      raw.push_back(static_cast<unsigned char>(img(i, j) >> 8));
      raw.push_back(static_cast<unsigned char>(img(i, j) & 0xff));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> idat(bound);
  if (compress2(idat.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 6) != Z_OK)
    throw std::runtime_error("write_png16: deflate failed");
  idat.resize(bound);
  write_png_chunk(out, "IDAT", idat);
  write_png_chunk(out, "IEND", {});
  if (!out) throw std::runtime_error("write_png16: write failed");
}

void write_pgm16(
    const std::string& path,
    const Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic>& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n" << img.cols() << " " << img.rows() << "\n65535\n";
  for (long i = 0; i < img.rows(); ++i)
    for (long j = 0; j < img.cols(); ++j) {
      const unsigned char b[2] = {
          static_cast<unsigned char>(img(i, j) >> 8),
          static_cast<unsigned char>(img(i, j) & 0xff)};
      out.write(reinterpret_cast<const char*>(b), 2);
    }
  if (!out) throw std::runtime_error("write_pgm16: write failed");
}

}  // namespace rfulm
