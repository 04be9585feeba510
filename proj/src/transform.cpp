// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/transform.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "rfulm/util.hpp"

namespace rfulm {

BmodePoint apply_affine(const AffineMap& m, const RfLabel& p) {
  const Eigen::Vector3d h(p.channel, p.sample, 1.0);
  const Eigen::Vector2d out = m.coeffs * h;
  return {out.x(), out.y()};
}

Region default_calibration_region(const ArrayGeometry& g) {
  const double lam = g.wavelength();
  const double pitch = (g.element(1) - g.element(0)).x();
  Region r;
  r.lat_min = (g.elements().front().x() + pitch) / lam;
  r.lat_max = (g.elements().back().x() - pitch) / lam;
  // Round-trip depth: U samples cover c_s * U / f_s of two-way path.
  const double depth =
      0.5 * g.speed_of_sound() * g.num_samples() / g.sample_rate() / lam;
  r.ax_min = 2.0;
  r.ax_max = depth - 2.0;
  if (!(r.lat_min < r.lat_max) || !(r.ax_min < r.ax_max))
    throw std::invalid_argument(
        "default_calibration_region: degenerate imaging field");
  return r;
}

Region central_fraction(const Region& r, double fraction) {
  const double lat_c = 0.5 * (r.lat_min + r.lat_max);
  const double ax_c = 0.5 * (r.ax_min + r.ax_max);
  const double lat_h = 0.5 * (r.lat_max - r.lat_min) * fraction;
  const double ax_h = 0.5 * (r.ax_max - r.ax_min) * fraction;
  return {lat_c - lat_h, lat_c + lat_h, ax_c - ax_h, ax_c + ax_h};
}

CalibrationSet::CalibrationSet(std::vector<BmodePoint> bmode,
                               std::vector<RfLabel> rf, std::uint64_t seed)
    : bmode_(std::move(bmode)), rf_(std::move(rf)), seed_(seed) {
  if (bmode_.size() != rf_.size())
    throw std::invalid_argument("CalibrationSet: pairs must be index-aligned");
  if (bmode_.size() < 50)
    throw std::invalid_argument("CalibrationSet: need at least 50 pairs");
}

CalibrationSet gen_calibration_points(const ArrayGeometry& g,
                                      const Region& region, int n,
                                      std::uint64_t seed) {
  if (n < 50)
    throw std::invalid_argument("gen_calibration_points: n must be >= 50");
  std::vector<BmodePoint> bmode;
  std::vector<RfLabel> rf;
  bmode.reserve(n);
  rf.reserve(n);
  Rng rng(seed);
  const long max_attempts = 100L * n;
  long attempts = 0;
  while (static_cast<int>(bmode.size()) < n) {
    if (attempts++ >= max_attempts)
      throw std::runtime_error(
          "gen_calibration_points: region yielded too few in-aperture points");
    const BmodePoint p{rng.uniform(region.lat_min, region.lat_max),
                       rng.uniform(region.ax_min, region.ax_max)};
    RfLabel label = isolate_apex(project_all_channels(p, g));
    if (!in_aperture(label, g)) continue;
    label.source_index = static_cast<int>(bmode.size());
    bmode.push_back(p);
    rf.push_back(label);
  }
  return CalibrationSet(std::move(bmode), std::move(rf), seed);
}

namespace {

// Design matrix with rows [channel_i, sample_i, 1]; shared by both the
// lateral and the axial sub-problem.
Eigen::MatrixXd design_matrix(const CalibrationSet& c) {
  const int n = c.size();
  Eigen::MatrixXd m(n, 3);
  for (int i = 0; i < n; ++i) {
    m(i, 0) = c.rf()[i].channel;
    m(i, 1) = c.rf()[i].sample;
    m(i, 2) = 1.0;
  }
  return m;
}

void check_nondegenerate(const Eigen::MatrixXd& m) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3)
    throw std::runtime_error(
        "affine fit: calibration points are collinear (singular normal "
        "equations)");
}

double residual_rms(const AffineMap& m, const CalibrationSet& c) {
  return std::sqrt(affine_sum_squared_residuals(m, c) / c.size());
}

// Residual vector r in R^{2N} and its constant Jacobian in R^{2Nx6}
// for the coefficient vector a = (a11,a12,a13,a21,a22,a23).
Eigen::VectorXd residual_vector(const Eigen::Matrix<double, 6, 1>& a,
                                const CalibrationSet& c) {
  const int n = c.size();
  Eigen::VectorXd r(2 * n);
  for (int i = 0; i < n; ++i) {
    const double y = c.rf()[i].channel;
    const double z = c.rf()[i].sample;
    r(2 * i) = a(0) * y + a(1) * z + a(2) - c.bmode()[i].lateral;
    r(2 * i + 1) = a(3) * y + a(4) * z + a(5) - c.bmode()[i].axial;
  }
  return r;
}

Eigen::MatrixXd jacobian(const CalibrationSet& c) {
  const int n = c.size();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 6);
  for (int i = 0; i < n; ++i) {
    const double y = c.rf()[i].channel;
    const double z = c.rf()[i].sample;
    j(2 * i, 0) = y;
    j(2 * i, 1) = z;
    j(2 * i, 2) = 1.0;
    j(2 * i + 1, 3) = y;
    j(2 * i + 1, 4) = z;
    j(2 * i + 1, 5) = 1.0;
  }
  return j;
}

}  // namespace

double affine_sum_squared_residuals(const AffineMap& m,
                                    const CalibrationSet& c) {
  double ss = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const BmodePoint mapped = apply_affine(m, c.rf()[i]);
    const double dl = mapped.lateral - c.bmode()[i].lateral;
    const double da = mapped.axial - c.bmode()[i].axial;
    ss += dl * dl + da * da;
  }
  return ss;
}

AffineMap fit_affine_normal(const CalibrationSet& c) {
  const Eigen::MatrixXd m = design_matrix(c);
  check_nondegenerate(m);
  const int n = c.size();
  Eigen::VectorXd lat(n), ax(n);
  for (int i = 0; i < n; ++i) {
    lat(i) = c.bmode()[i].lateral;
    ax(i) = c.bmode()[i].axial;
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::Vector3d row1 = qr.solve(lat);
  const Eigen::Vector3d row2 = qr.solve(ax);
  AffineMap out;
  out.coeffs.row(0) = row1.transpose();
  out.coeffs.row(1) = row2.transpose();
  out.fit_residual_rms = residual_rms(out, c);
  if (std::abs(out.det2x2()) <= 1e-12)
    throw std::runtime_error("fit_affine_normal: singular linear block");
  return out;
}

AffineMap fit_affine_lm(const CalibrationSet& c, const AffineMap& init,
                        const LmOptions& opts) {
  const Eigen::MatrixXd m = design_matrix(c);
  check_nondegenerate(m);

  Eigen::Matrix<double, 6, 1> a;
  a << init.coeffs(0, 0), init.coeffs(0, 1), init.coeffs(0, 2),
      init.coeffs(1, 0), init.coeffs(1, 1), init.coeffs(1, 2);

  const Eigen::MatrixXd j = jacobian(c);
  const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
  double mu = opts.initial_mu_scale * jtj.trace() / 6.0;

  Eigen::VectorXd r = residual_vector(a, c);
  double cost = r.squaredNorm();

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::Matrix<double, 6, 1> g = j.transpose() * r;
    const Eigen::Matrix<double, 6, 6> h =
        jtj + mu * Eigen::Matrix<double, 6, 6>::Identity();
    const Eigen::Matrix<double, 6, 1> step = h.ldlt().solve(-g);

    const Eigen::Matrix<double, 6, 1> trial = a + step;
    const Eigen::VectorXd r_trial = residual_vector(trial, c);
    const double cost_trial = r_trial.squaredNorm();
    if (cost_trial <= cost) {
      a = trial;
      r = r_trial;
      cost = cost_trial;
      mu *= 0.1;
      if (step.norm() < opts.step_tolerance) {
        AffineMap out;
        out.coeffs.row(0) = a.head<3>().transpose();
        out.coeffs.row(1) = a.tail<3>().transpose();
        out.fit_residual_rms = residual_rms(out, c);
        if (std::abs(out.det2x2()) <= 1e-12)
          throw std::runtime_error("fit_affine_lm: singular linear block");
        return out;
      }
    } else {
      mu *= 10.0;
    }
  }
  std::ostringstream msg;
  msg << "fit_affine_lm: no convergence after " << opts.max_iterations
      << " iterations; last iterate [" << a.transpose()
      << "], residual rms " << std::sqrt(cost / c.size());
  throw std::runtime_error(msg.str());
}

std::vector<AffineMap> fit_per_angle(const ArrayGeometry& base,
                                     const std::vector<double>& angles_rad,
                                     const PerAngleFitConfig& cfg) {
  if (angles_rad.empty())
    throw std::invalid_argument("fit_per_angle: need at least one angle");
  std::vector<AffineMap> maps;
  maps.reserve(angles_rad.size());
  for (std::size_t i = 0; i < angles_rad.size(); ++i) {
    try {
      const ArrayGeometry g =
          geometry_for_angle(base, angles_rad[i], cfg.standoff_m);
      const CalibrationSet cal = gen_calibration_points(
          g, cfg.region, cfg.points, derive_seed(cfg.seed, i));
      AffineMap fitted = fit_affine_lm(cal, fit_affine_normal(cal));
      fitted.tx_angle = angles_rad[i];
      maps.push_back(fitted);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "fit_per_angle: angle " << angles_rad[i] * 180.0 / M_PI
          << " deg failed: " << e.what();
      throw std::runtime_error(msg.str());
    }
  }
  return maps;
}

}  // namespace rfulm
