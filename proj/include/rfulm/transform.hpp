// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rfulm/geometry.hpp"

namespace rfulm {

/// Six-parameter 2-D affine map from RF space (channel, sample) to
/// B-mode space (lateral, axial). The homogeneous 3x3 form has third
/// row fixed to [0, 0, 1]. One map is fitted per transmit angle.
struct AffineMap {
  // Row-stacked coefficients: [a11 a12 a13; a21 a22 a23].
  Eigen::Matrix<double, 2, 3> coeffs = Eigen::Matrix<double, 2, 3>::Zero();
  double tx_angle = 0.0;
  double fit_residual_rms = 0.0;  // wavelength units

  Eigen::Matrix3d matrix() const {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m.topRows<2>() = coeffs;
    return m;
  }
  double det2x2() const {
    return coeffs(0, 0) * coeffs(1, 1) - coeffs(0, 1) * coeffs(1, 0);
  }
  static AffineMap identity() {
    AffineMap m;
    m.coeffs << 1, 0, 0, 0, 1, 0;
    return m;
  }
};

/// Homogeneous multiply [y, z, 1]^T = A [channel, sample, 1]^T; the
/// third component stays exactly 1.
BmodePoint apply_affine(const AffineMap& m, const RfLabel& p);

/// Axial/lateral bounds in wavelength units.
struct Region {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double ax_min = 0.0;
  double ax_max = 0.0;
};

/// Default calibration region: axial [2 wavelengths, depth - 2], lateral
/// full aperture minus one pitch at each edge.
Region default_calibration_region(const ArrayGeometry& g);

/// Region shrunk symmetrically to the given fraction of each extent.
Region central_fraction(const Region& r, double fraction);

/// Index-aligned (B-mode point, RF apex label) pairs used to regress an
/// AffineMap. Construction enforces N >= 50, alignment, and that every
/// RF label passed the aperture test (checked by the generator).
class CalibrationSet {
 public:
  CalibrationSet(std::vector<BmodePoint> bmode, std::vector<RfLabel> rf,
                 std::uint64_t rng_seed);
  int size() const { return static_cast<int>(bmode_.size()); }
  const std::vector<BmodePoint>& bmode() const { return bmode_; }
  const std::vector<RfLabel>& rf() const { return rf_; }
  std::uint64_t rng_seed() const { return seed_; }

 private:
  std::vector<BmodePoint> bmode_;
  std::vector<RfLabel> rf_;
  std::uint64_t seed_;
};

/// Uniform random B-mode points in `region`, forward-projected through
/// the geometry and apex-isolated; out-of-aperture projections are
/// discarded and resampled. Deterministic per seed. Throws when the
/// region cannot produce n in-aperture pairs within 100*n attempts.
CalibrationSet gen_calibration_points(const ArrayGeometry& g,
                                      const Region& region, int n,
                                      std::uint64_t seed);

struct LmOptions {
  double initial_mu_scale = 1e-3;  // mu0 = scale * trace(J^T J) / 6
  double step_tolerance = 1e-10;
  int max_iterations = 200;
};

/// Closed-form linear least-squares fit of the affine coefficients
/// (the objective is linear in them, so the optimum is unique for
/// non-degenerate data). Serves as the oracle for the LM path.
/// Throws on collinear calibration points.
AffineMap fit_affine_normal(const CalibrationSet& c);

/// Levenberg-Marquardt minimization of sum_i |A p*_i - p_i|^2 over the
/// six coefficients. Damping: mu *= 10 on a rejected step, mu /= 10 on
/// an accepted one; converged when the step norm drops below
/// opts.step_tolerance. Throws on collinear data or non-convergence
/// (the error message carries the last iterate and residual).
AffineMap fit_affine_lm(const CalibrationSet& c, const AffineMap& init,
                        const LmOptions& opts = {});

/// Sum of squared residuals of a candidate map over a calibration set.
double affine_sum_squared_residuals(const AffineMap& m,
                                    const CalibrationSet& c);

struct PerAngleFitConfig {
  Region region;       // calibration region (wavelength units)
  int points = 1000;   // N >> 6
  std::uint64_t seed = 0;
  double standoff_m = 0.0;  // plane-wave virtual source standoff
};

/// One AffineMap per transmit angle, each fitted on calibration points
/// projected under that angle's virtual source. LM is initialized from
/// the closed-form solution. Fit failures are rethrown tagged with the
/// failing angle.
std::vector<AffineMap> fit_per_angle(const ArrayGeometry& base,
                                     const std::vector<double>& angles_rad,
                                     const PerAngleFitConfig& cfg);

}  // namespace rfulm
