// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "rfulm/util.hpp"

namespace rfulm {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long v = std::strtol(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config: bad integer for " + key + ": " + value);
  return static_cast<int>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config: bad seed for " + key + ": " + value);
  return static_cast<std::uint64_t>(v);
}

double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError("config: bad number for " + key + ": " + value);
  return v;
}

double parse_double_auto(const std::string& key, const std::string& value) {
  if (value == "auto") return std::numeric_limits<double>::quiet_NaN();
  return parse_double(key, value);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1") return true;
  if (value == "off" || value == "false" || value == "0") return false;
  throw ConfigError("config: bad boolean for " + key + ": " + value);
}

std::vector<double> parse_list(const std::string& key,
                               const std::string& value) {
  std::vector<double> out;
  std::istringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_double_auto(double v) {
  return std::isnan(v) ? "auto" : fmt_double(v);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&,
                                  const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"threads",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.threads = parse_int(k, v);
       }},
      {"geometry.elements.count",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.elements_count = parse_int(k, v);
       }},
      {"geometry.elements.pitch_m",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.elements_pitch_m = parse_double(k, v);
       }},
      {"geometry.speed_of_sound",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.speed_of_sound = parse_double(k, v);
       }},
      {"geometry.sample_rate",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.sample_rate = parse_double(k, v);
       }},
      {"geometry.center_frequency",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.center_frequency = parse_double(k, v);
       }},
      {"geometry.start_offset_m",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.start_offset_m = parse_double(k, v);
       }},
      {"geometry.num_samples",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.num_samples = parse_int(k, v);
       }},
      {"geometry.tx_angles_deg",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.tx_angles_deg = parse_list(k, v);
       }},
      {"geometry.standoff_factor",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.geometry.standoff_factor = parse_double(k, v);
       }},
      {"simulate.frames",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.frames = parse_int(k, v);
       }},
      {"simulate.bubbles_min",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.bubbles_min = parse_int(k, v);
       }},
      {"simulate.bubbles_max",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.bubbles_max = parse_int(k, v);
       }},
      {"simulate.amp_min",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.amp_min = parse_double(k, v);
       }},
      {"simulate.amp_max",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.amp_max = parse_double(k, v);
       }},
      {"simulate.clutter_db",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.clutter_db = parse_double(k, v);
       }},
      {"simulate.fractional_bandwidth",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.fractional_bandwidth = parse_double(k, v);
       }},
      {"simulate.lat_min",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.lat_min = parse_double_auto(k, v);
       }},
      {"simulate.lat_max",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.lat_max = parse_double_auto(k, v);
       }},
      {"simulate.ax_min",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.ax_min = parse_double_auto(k, v);
       }},
      {"simulate.ax_max",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.ax_max = parse_double_auto(k, v);
       }},
      {"simulate.seed",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.simulate.seed = parse_u64(k, v);
       }},
      {"train.batch_size",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.batch_size = parse_int(k, v);
       }},
      {"train.weight_decay",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.weight_decay = parse_double(k, v);
       }},
      {"train.lr_init",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.lr_init = parse_double(k, v);
       }},
      {"train.max_epochs",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.max_epochs = parse_int(k, v);
       }},
      {"train.lambda1",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.lambda1 = parse_double(k, v);
       }},
      {"train.sigma",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.sigma = parse_double(k, v);
       }},
      {"train.upsample",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.upsample = parse_int(k, v);
       }},
      {"train.normalize",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.augment_normalize = parse_bool(k, v);
       }},
      {"train.clutter_db",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.augment_clutter_db = parse_double(k, v);
       }},
      {"train.hidden_channels",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.hidden_channels = parse_int(k, v);
       }},
      {"train.seed",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.train.seed = parse_u64(k, v);
       }},
      {"affine.points",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.affine.points = parse_int(k, v);
       }},
      {"affine.seed",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.affine.seed = parse_u64(k, v);
       }},
      {"infer.svd_cut_low",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.svd_cut_low = parse_int(k, v);
       }},
      {"infer.svd_cut_high",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.svd_cut_high = parse_int(k, v);
       }},
      {"infer.band_lo_hz",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.band_lo_hz = parse_double_auto(k, v);
       }},
      {"infer.band_hi_hz",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.band_hi_hz = parse_double_auto(k, v);
       }},
      {"infer.nms_window",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.nms_window = parse_int(k, v);
       }},
      {"infer.threshold",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.threshold = parse_double_auto(k, v);
       }},
      {"infer.threshold_frames",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.threshold_frames = parse_int(k, v);
       }},
      {"infer.threshold_topk",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.infer.threshold_topk = parse_int(k, v);
       }},
      {"infer.calibration_rf",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.infer.calibration_rf = v;
       }},
      {"infer.calibration_labels",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.infer.calibration_labels = v;
       }},
      {"baseline.window",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.baseline.window = parse_int(k, v);
       }},
      {"baseline.threshold_rel",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.baseline.threshold_rel = parse_double(k, v);
       }},
      {"baseline.f_number",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.baseline.f_number = parse_double(k, v);
       }},
      {"eval.gate_wavelengths",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.eval.gate_wavelengths = parse_double(k, v);
       }},
      {"eval.method_name",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.eval.method_name = v;
       }},
      {"eval.time_s",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.eval.time_s = v;
       }},
      {"render.upsample",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.render.upsample = parse_int(k, v);
       }},
      {"render.gamma",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.render.gamma = parse_double(k, v);
       }},
      {"render.dither",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.render.dither = parse_bool(k, v);
       }},
      {"render.dither_pixel",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.render.dither_pixel = parse_double_auto(k, v);
       }},
      {"render.seed",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.render.seed = parse_u64(k, v);
       }},
      {"grid.dlat",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.grid.dlat = parse_double(k, v);
       }},
      {"grid.dax",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.grid.dax = parse_double(k, v);
       }},
      {"paths.rf",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.rf = v;
       }},
      {"paths.labels_bmode",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.labels_bmode = v;
       }},
      {"paths.labels_rf",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.labels_rf = v;
       }},
      {"paths.affine",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.affine = v;
       }},
      {"paths.checkpoint",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.checkpoint = v;
       }},
      {"paths.loss",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.loss = v;
       }},
      {"paths.localizations",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.localizations = v;
       }},
      {"paths.metrics",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.metrics = v;
       }},
      {"paths.image",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.image = v;
       }},
      {"paths.canvas",
       [](PipelineConfig& c, const std::string&, const std::string& v) {
         c.paths.canvas = v;
       }},
  };
  return table;
}

void apply_line(PipelineConfig& cfg, const std::string& raw,
                const std::string& key_prefix) {
  const std::string line = trim(raw);
  if (line.empty() || line[0] == '#') return;
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config: expected 'key = value': " + line);
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("config: unknown key: " + key);
  if (!key_prefix.empty() && key.rfind(key_prefix, 0) != 0)
    throw ConfigError("config: key not allowed here: " + key);
  it->second(cfg, key, value);
}

}  // namespace

int PipelineConfig::effective_threads() const {
  return threads > 0 ? threads : default_thread_count();
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) apply_line(cfg, line, "");
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

std::string serialize_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "threads = " << c.threads << "\n";
  out << "geometry.elements.count = " << c.geometry.elements_count << "\n";
  out << "geometry.elements.pitch_m = " << fmt_double(c.geometry.elements_pitch_m) << "\n";
  out << "geometry.speed_of_sound = " << fmt_double(c.geometry.speed_of_sound) << "\n";
  out << "geometry.sample_rate = " << fmt_double(c.geometry.sample_rate) << "\n";
  out << "geometry.center_frequency = " << fmt_double(c.geometry.center_frequency) << "\n";
  out << "geometry.start_offset_m = " << fmt_double(c.geometry.start_offset_m) << "\n";
  out << "geometry.num_samples = " << c.geometry.num_samples << "\n";
  out << "geometry.tx_angles_deg = " << fmt_list(c.geometry.tx_angles_deg) << "\n";
  out << "geometry.standoff_factor = " << fmt_double(c.geometry.standoff_factor) << "\n";
  out << "simulate.frames = " << c.simulate.frames << "\n";
  out << "simulate.bubbles_min = " << c.simulate.bubbles_min << "\n";
  out << "simulate.bubbles_max = " << c.simulate.bubbles_max << "\n";
  out << "simulate.amp_min = " << fmt_double(c.simulate.amp_min) << "\n";
  out << "simulate.amp_max = " << fmt_double(c.simulate.amp_max) << "\n";
  out << "simulate.clutter_db = " << fmt_double(c.simulate.clutter_db) << "\n";
  out << "simulate.fractional_bandwidth = " << fmt_double(c.simulate.fractional_bandwidth) << "\n";
  out << "simulate.lat_min = " << fmt_double_auto(c.simulate.lat_min) << "\n";
  out << "simulate.lat_max = " << fmt_double_auto(c.simulate.lat_max) << "\n";
  out << "simulate.ax_min = " << fmt_double_auto(c.simulate.ax_min) << "\n";
  out << "simulate.ax_max = " << fmt_double_auto(c.simulate.ax_max) << "\n";
  out << "simulate.seed = " << c.simulate.seed << "\n";
  out << "train.batch_size = " << c.train.batch_size << "\n";
  out << "train.weight_decay = " << fmt_double(c.train.weight_decay) << "\n";
  out << "train.lr_init = " << fmt_double(c.train.lr_init) << "\n";
  out << "train.max_epochs = " << c.train.max_epochs << "\n";
  out << "train.lambda1 = " << fmt_double(c.train.lambda1) << "\n";
  out << "train.sigma = " << fmt_double(c.train.sigma) << "\n";
  out << "train.upsample = " << c.train.upsample << "\n";
  out << "train.normalize = " << (c.train.augment_normalize ? "on" : "off") << "\n";
  out << "train.clutter_db = " << fmt_double(c.train.augment_clutter_db) << "\n";
  out << "train.hidden_channels = " << c.train.hidden_channels << "\n";
  out << "train.seed = " << c.train.seed << "\n";
  out << "affine.points = " << c.affine.points << "\n";
  out << "affine.seed = " << c.affine.seed << "\n";
  out << "infer.svd_cut_low = " << c.infer.svd_cut_low << "\n";
  out << "infer.svd_cut_high = " << c.infer.svd_cut_high << "\n";
  out << "infer.band_lo_hz = " << fmt_double_auto(c.infer.band_lo_hz) << "\n";
  out << "infer.band_hi_hz = " << fmt_double_auto(c.infer.band_hi_hz) << "\n";
  out << "infer.nms_window = " << c.infer.nms_window << "\n";
  out << "infer.threshold = " << fmt_double_auto(c.infer.threshold) << "\n";
  out << "infer.threshold_frames = " << c.infer.threshold_frames << "\n";
  out << "infer.threshold_topk = " << c.infer.threshold_topk << "\n";
  out << "infer.calibration_rf = " << c.infer.calibration_rf << "\n";
  out << "infer.calibration_labels = " << c.infer.calibration_labels << "\n";
  out << "baseline.window = " << c.baseline.window << "\n";
  out << "baseline.threshold_rel = " << fmt_double(c.baseline.threshold_rel) << "\n";
  out << "baseline.f_number = " << fmt_double(c.baseline.f_number) << "\n";
  out << "eval.gate_wavelengths = " << fmt_double(c.eval.gate_wavelengths) << "\n";
  out << "eval.method_name = " << c.eval.method_name << "\n";
  out << "eval.time_s = " << c.eval.time_s << "\n";
  out << "render.upsample = " << c.render.upsample << "\n";
  out << "render.gamma = " << fmt_double(c.render.gamma) << "\n";
  out << "render.dither = " << (c.render.dither ? "on" : "off") << "\n";
  out << "render.dither_pixel = " << fmt_double_auto(c.render.dither_pixel) << "\n";
  out << "render.seed = " << c.render.seed << "\n";
  out << "grid.dlat = " << fmt_double(c.grid.dlat) << "\n";
  out << "grid.dax = " << fmt_double(c.grid.dax) << "\n";
  out << "paths.rf = " << c.paths.rf << "\n";
  out << "paths.labels_bmode = " << c.paths.labels_bmode << "\n";
  out << "paths.labels_rf = " << c.paths.labels_rf << "\n";
  out << "paths.affine = " << c.paths.affine << "\n";
  out << "paths.checkpoint = " << c.paths.checkpoint << "\n";
  out << "paths.loss = " << c.paths.loss << "\n";
  out << "paths.localizations = " << c.paths.localizations << "\n";
  out << "paths.metrics = " << c.paths.metrics << "\n";
  out << "paths.image = " << c.paths.image << "\n";
  out << "paths.canvas = " << c.paths.canvas << "\n";
  return out.str();
}

std::vector<double> tx_angles_rad(const GeometryConfig& g) {
  std::vector<double> out;
  out.reserve(g.tx_angles_deg.size());
  for (const double deg : g.tx_angles_deg)
    out.push_back(deg * std::numbers::pi / 180.0);
  return out;
}

double standoff_m(const GeometryConfig& g) {
  return g.standoff_factor * (g.elements_count - 1) * g.elements_pitch_m;
}

ArrayGeometry build_geometry(const GeometryConfig& g, double angle_rad) {
  if (g.elements_count < 2)
    throw ConfigError("geometry: elements.count must be >= 2");
  if (g.elements_pitch_m <= 0.0)
    throw ConfigError("geometry: elements.pitch_m must be > 0");
  if (g.standoff_factor <= 1.0)
    throw ConfigError("geometry: standoff_factor must exceed 1");
  std::vector<Eigen::Vector3d> elems;
  elems.reserve(g.elements_count);
  for (int k = 0; k < g.elements_count; ++k) {
    const double x = (k - 0.5 * (g.elements_count - 1)) * g.elements_pitch_m;
    elems.push_back({x, 0.0, 0.0});
  }
  const double standoff = standoff_m(g);
  ArrayGeometry base(std::move(elems), {0.0, 0.0, -standoff},
                     standoff + g.start_offset_m, g.speed_of_sound,
                     g.sample_rate, g.center_frequency, g.num_samples);
  return geometry_for_angle(base, angle_rad, standoff);
}

void write_geometry_sidecar(const std::string& path,
                            const GeometryConfig& g) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("write_geometry_sidecar: cannot open " + path);
  out << "geometry.elements.count = " << g.elements_count << "\n";
  out << "geometry.elements.pitch_m = " << fmt_double(g.elements_pitch_m) << "\n";
  out << "geometry.speed_of_sound = " << fmt_double(g.speed_of_sound) << "\n";
  out << "geometry.sample_rate = " << fmt_double(g.sample_rate) << "\n";
  out << "geometry.center_frequency = " << fmt_double(g.center_frequency) << "\n";
  out << "geometry.start_offset_m = " << fmt_double(g.start_offset_m) << "\n";
  out << "geometry.num_samples = " << g.num_samples << "\n";
  out << "geometry.tx_angles_deg = " << fmt_list(g.tx_angles_deg) << "\n";
  out << "geometry.standoff_factor = " << fmt_double(g.standoff_factor) << "\n";
  if (!out) throw std::runtime_error("write_geometry_sidecar: write failed");
}

GeometryConfig read_geometry_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_geometry_sidecar: cannot open " + path);
  PipelineConfig cfg;
  std::string line;
  while (std::getline(in, line)) apply_line(cfg, line, "geometry.");
  return cfg.geometry;
}

}  // namespace rfulm
