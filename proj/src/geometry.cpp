// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/geometry.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfulm {

namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool finite(const Eigen::Vector3d& v) { return v.allFinite(); }

}  // namespace

ArrayGeometry::ArrayGeometry(std::vector<Eigen::Vector3d> element_positions,
                             Eigen::Vector3d virtual_source,
                             double start_offset_m, double speed_of_sound,
                             double sample_rate, double center_frequency,
                             int num_samples)
    : elements_(std::move(element_positions)),
      virtual_source_(std::move(virtual_source)),
      start_offset_(start_offset_m),
      speed_of_sound_(speed_of_sound),
      sample_rate_(sample_rate),
      center_frequency_(center_frequency),
      num_samples_(num_samples) {
  require(elements_.size() >= 2, "ArrayGeometry: need at least 2 elements");
  for (std::size_t k = 0; k < elements_.size(); ++k) {
    require(finite(elements_[k]), "ArrayGeometry: non-finite element position");
    require(elements_[k].z() == 0.0,
            "ArrayGeometry: elements must lie on the z=0 plane");
    if (k > 0) {
      require(elements_[k].x() > elements_[k - 1].x(),
              "ArrayGeometry: element lateral positions must be strictly "
              "increasing");
    }
  }
  require(finite(virtual_source_), "ArrayGeometry: non-finite virtual source");
  require(std::isfinite(start_offset_), "ArrayGeometry: non-finite offset");
  require(speed_of_sound_ > 0.0, "ArrayGeometry: speed_of_sound must be > 0");
  require(sample_rate_ > 0.0, "ArrayGeometry: sample_rate must be > 0");
  require(center_frequency_ > 0.0,
          "ArrayGeometry: center_frequency must be > 0");
  require(num_samples_ > 0, "ArrayGeometry: num_samples must be > 0");
}

Eigen::Vector3d ArrayGeometry::aperture_center() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& e : elements_) c += e;
  return c / static_cast<double>(elements_.size());
}

ArrayGeometry ArrayGeometry::with_virtual_source(const Eigen::Vector3d& vs,
                                                 double start_offset_m) const {
  return ArrayGeometry(elements_, vs, start_offset_m, speed_of_sound_,
                       sample_rate_, center_frequency_, num_samples_);
}

double project_point(const BmodePoint& p, const ArrayGeometry& g, int k) {
  if (k < 0 || k >= g.num_channels())
    throw std::invalid_argument("project_point: channel index out of range");
  if (!std::isfinite(p.lateral) || !std::isfinite(p.axial))
    throw std::invalid_argument("project_point: non-finite point");
  const Eigen::Vector3d pm = g.point_to_meters(p);
  const double tx = (pm - g.virtual_source()).norm();
  const double rx = (pm - g.element(k)).norm();
  return (tx + rx - g.start_offset()) * g.sample_rate() / g.speed_of_sound();
}

std::vector<std::pair<int, double>> project_all_channels(
    const BmodePoint& p, const ArrayGeometry& g) {
  std::vector<std::pair<int, double>> out;
  out.reserve(g.num_channels());
  for (int k = 0; k < g.num_channels(); ++k)
    out.emplace_back(k, project_point(p, g, k));
  return out;
}

RfLabel isolate_apex(const std::vector<std::pair<int, double>>& wavefront) {
  if (wavefront.empty())
    throw std::invalid_argument("isolate_apex: empty wavefront");
  int best_channel = wavefront.front().first;
  double best_sample = wavefront.front().second;
  for (const auto& [channel, sample] : wavefront) {
    if (sample < best_sample ||
        (sample == best_sample && channel < best_channel)) {
      best_channel = channel;
      best_sample = sample;
    }
  }
  RfLabel label;
  label.channel = static_cast<double>(best_channel);
  label.sample = best_sample;
  return label;
}

bool in_aperture(const RfLabel& label, const ArrayGeometry& g) {
  return label.channel >= 0.0 &&
         label.channel <= static_cast<double>(g.num_channels() - 1) &&
         label.sample >= 0.0 &&
         label.sample <= static_cast<double>(g.num_samples() - 1);
}

Eigen::Vector3d plane_wave_virtual_source(double angle_rad, double standoff_m,
                                          const ArrayGeometry& g) {
  if (!(std::abs(angle_rad) < 1.5707963267948966))
    throw std::invalid_argument(
        "plane_wave_virtual_source: |angle| must be < pi/2");
  if (!(standoff_m > g.aperture_width()))
    throw std::invalid_argument(
        "plane_wave_virtual_source: standoff must exceed the aperture width");
  // Unit propagation direction of the steered wave is
  // (sin angle, 0, cos angle); the source sits standoff meters against it.
  const Eigen::Vector3d direction(std::sin(angle_rad), 0.0,
                                  std::cos(angle_rad));
  return g.aperture_center() - standoff_m * direction;
}

ArrayGeometry geometry_for_angle(const ArrayGeometry& base, double angle_rad,
                                 double standoff_m) {
  return base.with_virtual_source(
      plane_wave_virtual_source(angle_rad, standoff_m, base),
      base.start_offset());
}

}  // namespace rfulm
