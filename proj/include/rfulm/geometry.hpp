// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace rfulm {

/// Point in B-mode image space. Coordinates are in wavelength units;
/// the homogeneous third component is implicitly 1.
struct BmodePoint {
  double lateral = 0.0;
  double axial = 0.0;
};

/// Point in RF channel-data space: continuous transducer-channel
/// coordinate and continuous fast-time sample coordinate. The channel
/// is stored as a real number so that integer apex labels and
/// sub-sample network detections share one representation.
struct RfLabel {
  double channel = 0.0;
  double sample = 0.0;
  int source_index = -1;
};

/// Immutable acquisition geometry: transducer element positions, the
/// transmit virtual source, timing origin and acoustic constants.
/// Element positions and the virtual source are in meters; all public
/// point interfaces use wavelength units and conversion is centralized
/// here.
class ArrayGeometry {
 public:
  ArrayGeometry(std::vector<Eigen::Vector3d> element_positions,
                Eigen::Vector3d virtual_source, double start_offset_m,
                double speed_of_sound, double sample_rate,
                double center_frequency, int num_samples);

  int num_channels() const { return static_cast<int>(elements_.size()); }
  int num_samples() const { return num_samples_; }
  double speed_of_sound() const { return speed_of_sound_; }
  double sample_rate() const { return sample_rate_; }
  double center_frequency() const { return center_frequency_; }
  double wavelength() const { return speed_of_sound_ / center_frequency_; }
  double start_offset() const { return start_offset_; }
  const Eigen::Vector3d& virtual_source() const { return virtual_source_; }
  const Eigen::Vector3d& element(int k) const { return elements_.at(k); }
  const std::vector<Eigen::Vector3d>& elements() const { return elements_; }

  double aperture_width() const {
    return elements_.back().x() - elements_.front().x();
  }
  Eigen::Vector3d aperture_center() const;

  /// Wavelength-unit point to meters on the imaging plane (y == 0).
  Eigen::Vector3d point_to_meters(const BmodePoint& p) const {
    const double lam = wavelength();
    return {p.lateral * lam, 0.0, p.axial * lam};
  }

  /// Copy of this geometry with a different transmit virtual source
  /// and timing origin (one per steering angle).
  ArrayGeometry with_virtual_source(const Eigen::Vector3d& vs,
                                    double start_offset_m) const;

 private:
  std::vector<Eigen::Vector3d> elements_;
  Eigen::Vector3d virtual_source_;
  double start_offset_;
  double speed_of_sound_;
  double sample_rate_;
  double center_frequency_;
  int num_samples_;
};

/// Time-of-flight forward projection of one B-mode point onto channel k:
/// (|p - v_s| + |p - x_k| - s) * f_s / c_s, a continuous fast-time
/// sample coordinate.
double project_point(const BmodePoint& p, const ArrayGeometry& g, int k);

/// One (channel, arrival-sample) pair per channel; the hyperbolic
/// wavefront the scatterer traces in RF space.
std::vector<std::pair<int, double>> project_all_channels(
    const BmodePoint& p, const ArrayGeometry& g);

/// Apex of a projected wavefront: the channel with minimal arrival
/// sample and that minimal sample. Ties break toward the lowest
/// channel index. Throws std::invalid_argument on empty input.
RfLabel isolate_apex(const std::vector<std::pair<int, double>>& wavefront);

/// True iff the label lies inside the recorded aperture,
/// 0 <= channel <= K-1 and 0 <= sample <= U-1 (boundaries inclusive).
bool in_aperture(const RfLabel& label, const ArrayGeometry& g);

/// Far-field point realizing a steered plane wave within the
/// virtual-source formalism. Placed `standoff` meters behind the
/// aperture center along the reversed propagation direction, so that
/// wavefront curvature across the aperture stays below 0.01 wavelength
/// for standoff >> aperture. Throws when standoff <= aperture width or
/// |angle| >= pi/2.
Eigen::Vector3d plane_wave_virtual_source(double angle_rad, double standoff_m,
                                          const ArrayGeometry& g);

/// Geometry variant serving one steering angle: virtual source from
/// plane_wave_virtual_source at the given standoff, timing origin kept.
ArrayGeometry geometry_for_angle(const ArrayGeometry& base, double angle_rad,
                                 double standoff_m);

}  // namespace rfulm
