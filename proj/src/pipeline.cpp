// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#include "rfulm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>

#include "rfulm/io.hpp"
#include "rfulm/metrics.hpp"
#include "rfulm/pipeline.hpp"
#include "rfulm/render.hpp"
#include "rfulm/util.hpp"

namespace rfulm {

namespace {

constexpr double kRadPerDeg = std::numbers::pi / 180.0;

void require_input(const std::string& path, const std::string& what) {
  if (path.empty() || !std::filesystem::exists(path))
    throw ConfigError("missing " + what + " file: " + path);
}

void prepare_output(const std::string& path) {
  if (path.empty()) throw ConfigError("empty output path");
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::vector<ArrayGeometry> per_angle_geometries(const PipelineConfig& cfg) {
  std::vector<ArrayGeometry> geoms;
  for (const double rad : tx_angles_rad(cfg.geometry))
    geoms.push_back(build_geometry(cfg.geometry, rad));
  return geoms;
}

void check_dataset_matches_config(const RfDataset& ds,
                                  const PipelineConfig& cfg) {
  if (ds.num_samples != cfg.geometry.num_samples ||
      ds.num_channels != cfg.geometry.elements_count)
    throw ConfigError("RF file dimensions do not match the geometry config");
  const auto rad = tx_angles_rad(cfg.geometry);
  if (ds.angles.size() != rad.size())
    throw ConfigError("RF file angle count does not match the config");
  for (std::size_t a = 0; a < rad.size(); ++a)
    if (std::abs(ds.angles[a] - rad[a]) > 1e-6)
      throw ConfigError("RF file angles do not match the config");
}

std::map<int, std::vector<Eigen::Vector2d>> bmode_points_by_frame(
    const std::vector<PointRecord>& rows) {
  std::map<int, std::vector<Eigen::Vector2d>> grouped;
  for (const auto& row : rows)
    if (row.space == Space::Bmode)
      grouped[row.frame_index].push_back({row.coord1, row.coord2});
  return grouped;
}

// Filter -> forward -> NMS -> threshold -> rescale -> aperture cull ->
// affine back-map, for the first `event_limit` events. Returns one
// B-mode localization set per (event, angle).
std::vector<std::vector<LocalizationSet>> infer_chain(
    const RfDataset& ds, int event_limit, const PipelineConfig& cfg,
    const std::vector<ArrayGeometry>& geoms, const SrNetwork& net,
    const std::vector<AffineMap>& maps, double threshold,
    StageTimer* timer) {
  const int n_angles = static_cast<int>(ds.angles.size());
  const int events = std::min(event_limit, ds.events());
  const auto [band_lo, band_hi] = resolve_band(cfg);
  const int threads = cfg.effective_threads();

  std::vector<std::vector<LocalizationSet>> out(
      events, std::vector<LocalizationSet>(n_angles));

  for (int a = 0; a < n_angles; ++a) {
    FrameStack stack;
    for (int e = 0; e < events; ++e)
      stack.frames.push_back(ds.frames[e * n_angles + a]);
    if (events == 0) continue;

    const int cuts = cfg.infer.svd_cut_low + cfg.infer.svd_cut_high;
    if (cuts > 0 && events >= 2 &&
        cuts < std::min<long>(stack.frames[0].data.size(), events)) {
      ScopedStageTime t(*timer, "svd_filter");
      stack = svd_filter(stack, cfg.infer.svd_cut_low, cfg.infer.svd_cut_high);
    }
    {
      ScopedStageTime t(*timer, "bandpass");
      for (auto& frame : stack.frames)
        frame = bandpass_filter(frame, band_lo, band_hi,
                                cfg.geometry.sample_rate);
    }
    std::vector<Eigen::MatrixXd> heatmaps(events);
    {
      ScopedStageTime t(*timer, "network");
      std::vector<SrNetwork::Cache> caches(threads);
      parallel_for(events, threads, [&](int e) {
        const RfFrame normalized = normalize_amplitude(stack.frames[e]);
        heatmaps[e] =
            net.forward(frame_to_planes(normalized), ds.num_samples,
                        ds.num_channels, &caches[e % threads]);
      });
    }
    {
      ScopedStageTime t(*timer, "postproc");
      for (int e = 0; e < events; ++e) {
        const Eigen::MatrixXd peaks = nms(heatmaps[e], cfg.infer.nms_window);
        LocalizationSet rf_set =
            extract_points(peaks, threshold, net.upsample_factor());
        rf_set.tx_angle = ds.angles[a];
        rf_set.frame_index = e;
        LocalizationSet culled = rf_set;
        culled.points.clear();
        for (const auto& p : rf_set.points)
          if (in_aperture({p.coords.x(), p.coords.y(), -1}, geoms[a]))
            culled.points.push_back(p);
        out[e][a] = to_bmode(culled, maps);
      }
    }
  }
  return out;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

Region resolve_simulate_region(const PipelineConfig& cfg) {
  const ArrayGeometry g0 = build_geometry(cfg.geometry, 0.0);
  Region r = central_fraction(default_calibration_region(g0), 0.8);
  if (!std::isnan(cfg.simulate.lat_min)) r.lat_min = cfg.simulate.lat_min;
  if (!std::isnan(cfg.simulate.lat_max)) r.lat_max = cfg.simulate.lat_max;
  if (!std::isnan(cfg.simulate.ax_min)) r.ax_min = cfg.simulate.ax_min;
  if (!std::isnan(cfg.simulate.ax_max)) r.ax_max = cfg.simulate.ax_max;
  if (!(r.lat_min < r.lat_max) || !(r.ax_min < r.ax_max))
    throw ConfigError("simulate: degenerate scatterer region");
  return r;
}

std::pair<double, double> resolve_band(const PipelineConfig& cfg) {
  const double fc = cfg.geometry.center_frequency;
  const double fs = cfg.geometry.sample_rate;
  const double lo =
      std::isnan(cfg.infer.band_lo_hz) ? 0.5 * fc : cfg.infer.band_lo_hz;
  const double hi = std::isnan(cfg.infer.band_hi_hz)
                        ? std::min(1.5 * fc, 0.5 * fs)
                        : cfg.infer.band_hi_hz;
  return {lo, hi};
}

void run_simulate(const PipelineConfig& cfg) {
  const auto& sim = cfg.simulate;
  if (sim.frames < 0) throw ConfigError("simulate.frames must be >= 0");
  if (sim.bubbles_min < 0 || sim.bubbles_max < sim.bubbles_min)
    throw ConfigError("simulate: bad bubble count range");
  if (!(sim.amp_min > 0.0) || sim.amp_max < sim.amp_min)
    throw ConfigError("simulate: bad amplitude range");
  prepare_output(cfg.paths.rf);
  prepare_output(cfg.paths.labels_bmode);
  prepare_output(cfg.paths.labels_rf);

  const auto geoms = per_angle_geometries(cfg);
  const int n_angles = static_cast<int>(geoms.size());
  const Region region = resolve_simulate_region(cfg);
  const PulseSpec pulse{cfg.geometry.center_frequency,
                        sim.fractional_bandwidth};

  RfDataset ds;
  ds.num_samples = cfg.geometry.num_samples;
  ds.num_channels = cfg.geometry.elements_count;
  ds.angles = tx_angles_rad(cfg.geometry);

  std::vector<PointRecord> bmode_rows, rf_rows;
  Rng rng(sim.seed);
  long dropped = 0;

  for (int event = 0; event < sim.frames; ++event) {
    const int count = rng.uniform_int(sim.bubbles_min, sim.bubbles_max);
    std::vector<Scatterer> scatterers;
    for (int b = 0; b < count; ++b) {
      Scatterer sc;
      sc.position = {rng.uniform(region.lat_min, region.lat_max),
                     rng.uniform(region.ax_min, region.ax_max)};
      sc.amplitude = rng.uniform(sim.amp_min, sim.amp_max);
      scatterers.push_back(sc);
    }
    for (const auto& sc : scatterers) {
      PointRecord row;
      row.frame_index = event;
      row.space = Space::Bmode;
      row.angle_deg = std::numeric_limits<double>::quiet_NaN();
      row.coord1 = sc.position.lateral;
      row.coord2 = sc.position.axial;
      row.score = sc.amplitude;
      bmode_rows.push_back(row);
    }
    for (int a = 0; a < n_angles; ++a) {
      SimResult result = simulate_rf_frame(scatterers, geoms[a], pulse);
      dropped += result.dropped_labels;
      RfFrame frame = std::move(result.frame);
      if (std::isfinite(sim.clutter_db) && frame.data.squaredNorm() > 0.0)
        frame = add_clutter_noise(
            frame, sim.clutter_db,
            derive_seed(sim.seed,
                        0xC1ULL + static_cast<std::uint64_t>(event) *
                                      n_angles + a));
      frame.tx_angle = ds.angles[a];
      frame.frame_index = event;
      ds.frames.push_back(std::move(frame));
      for (std::size_t i = 0; i < result.rf_labels.size(); ++i) {
        PointRecord row;
        row.frame_index = event;
        row.space = Space::Rf;
        row.angle_deg = cfg.geometry.tx_angles_deg[a];
        row.coord1 = result.rf_labels[i].channel;
        row.coord2 = result.rf_labels[i].sample;
        row.score = scatterers[result.rf_labels[i].source_index].amplitude;
        rf_rows.push_back(row);
      }
    }
  }

  write_rfb1(cfg.paths.rf, ds);
  write_geometry_sidecar(cfg.paths.rf + ".geom", cfg.geometry);
  write_points_csv(cfg.paths.labels_bmode, bmode_rows);
  write_points_csv(cfg.paths.labels_rf, rf_rows);
  std::cout << "simulate: " << sim.frames << " events x " << n_angles
            << " angles, " << bmode_rows.size() << " scatterers, " << dropped
            << " off-frame labels dropped\n";
}

void run_fit_affine(const PipelineConfig& cfg) {
  prepare_output(cfg.paths.affine);
  const ArrayGeometry base = build_geometry(cfg.geometry, 0.0);
  PerAngleFitConfig fit_cfg;
  fit_cfg.region = default_calibration_region(base);
  fit_cfg.points = cfg.affine.points;
  fit_cfg.seed = cfg.affine.seed;
  fit_cfg.standoff_m = standoff_m(cfg.geometry);
  const auto maps =
      fit_per_angle(base, tx_angles_rad(cfg.geometry), fit_cfg);
  save_affine_maps(cfg.paths.affine, maps);
  for (const auto& m : maps)
    std::cout << "fit-affine: angle "
              << format_g(m.tx_angle / kRadPerDeg) << " deg, residual rms "
              << format_g(m.fit_residual_rms) << " wavelengths\n";
}

void run_train(const PipelineConfig& cfg) {
  require_input(cfg.paths.rf, "RF input");
  require_input(cfg.paths.labels_rf, "RF label");
  prepare_output(cfg.paths.checkpoint);
  prepare_output(cfg.paths.loss);

  const RfDataset ds = read_rfb1(cfg.paths.rf);
  check_dataset_matches_config(ds, cfg);
  const auto geoms = per_angle_geometries(cfg);
  const int n_angles = static_cast<int>(ds.angles.size());

  // Per (event, angle) label lists from the shared CSV schema.
  std::map<std::pair<int, int>, std::vector<RfLabel>> labels;
  for (const auto& row : read_points_csv(cfg.paths.labels_rf)) {
    if (row.space != Space::Rf)
      throw ConfigError("train: labels_rf contains non-RF rows");
    int angle_index = -1;
    for (std::size_t a = 0; a < cfg.geometry.tx_angles_deg.size(); ++a)
      if (std::abs(row.angle_deg - cfg.geometry.tx_angles_deg[a]) < 1e-6)
        angle_index = static_cast<int>(a);
    if (angle_index < 0)
      throw ConfigError("train: label angle not in the config");
    labels[{row.frame_index, angle_index}].push_back(
        {row.coord1, row.coord2, -1});
  }

  std::vector<TrainSample> samples;
  samples.reserve(ds.frames.size());
  for (std::size_t f = 0; f < ds.frames.size(); ++f) {
    const int event = static_cast<int>(f) / n_angles;
    const int a = static_cast<int>(f) % n_angles;
    TrainSample sample;
    sample.frame = ds.frames[f];
    const auto it = labels.find({event, a});
    if (it != labels.end())
      for (const auto& label : it->second)
        if (in_aperture(label, geoms[a])) sample.labels.push_back(label);
    samples.push_back(std::move(sample));
  }

  TrainConfig tc = cfg.train;
  tc.threads = cfg.effective_threads();
  const TrainResult result = train(samples, tc);
  result.network.save(cfg.paths.checkpoint);
  write_loss_csv(cfg.paths.loss, result.history);
  std::cout << "train: " << samples.size() << " samples, "
            << result.network.parameter_count() << " parameters, "
            << result.history.size() << " epochs";
  if (!result.history.empty())
    std::cout << ", final mean loss "
              << format_g(result.history.back().mean_loss);
  std::cout << "\n";
}

void run_infer(const PipelineConfig& cfg) {
  require_input(cfg.paths.rf, "RF input");
  require_input(cfg.paths.checkpoint, "checkpoint");
  require_input(cfg.paths.affine, "affine map");
  prepare_output(cfg.paths.localizations);

  const RfDataset ds = read_rfb1(cfg.paths.rf);
  check_dataset_matches_config(ds, cfg);
  const auto geoms = per_angle_geometries(cfg);
  const SrNetwork net = SrNetwork::load(cfg.paths.checkpoint);
  const auto maps = load_affine_maps(cfg.paths.affine);

  double threshold = cfg.infer.threshold;
  if (std::isnan(threshold)) {
    const std::string cal_rf = cfg.infer.calibration_rf.empty()
                                   ? cfg.paths.rf
                                   : cfg.infer.calibration_rf;
    const std::string cal_labels = cfg.infer.calibration_labels.empty()
                                       ? cfg.paths.labels_bmode
                                       : cfg.infer.calibration_labels;
    require_input(cal_rf, "threshold calibration RF");
    require_input(cal_labels, "threshold calibration label");
    const RfDataset cal_ds = cal_rf == cfg.paths.rf ? ds : read_rfb1(cal_rf);
    check_dataset_matches_config(cal_ds, cfg);
    const auto gt = bmode_points_by_frame(read_points_csv(cal_labels));

    StageTimer scratch;
    const auto candidates = infer_chain(
        cal_ds, cfg.infer.threshold_frames, cfg, geoms, net, maps,
        -std::numeric_limits<double>::infinity(), &scratch);
    std::vector<std::pair<double, bool>> scored;
    for (std::size_t e = 0; e < candidates.size(); ++e) {
      const auto gt_it = gt.find(static_cast<int>(e));
      const std::vector<Eigen::Vector2d> gt_points =
          gt_it == gt.end() ? std::vector<Eigen::Vector2d>{} : gt_it->second;
      for (const auto& set : candidates[e]) {
        // Only the strongest candidates per frame and angle enter the
        // ROC pool; see InferConfig::threshold_topk.
        std::vector<Localization> top = set.points;
        std::sort(top.begin(), top.end(),
                  [](const Localization& a, const Localization& b) {
                    return a.score > b.score;
                  });
        if (static_cast<int>(top.size()) > cfg.infer.threshold_topk)
          top.resize(cfg.infer.threshold_topk);
        std::vector<Eigen::Vector2d> est;
        for (const auto& p : top) est.push_back(p.coords);
        const MatchResult match =
            match_points(gt_points, est, cfg.eval.gate_wavelengths);
        std::vector<bool> hit(est.size(), false);
        for (const auto& pair : match.pairs) hit[pair.est_index] = true;
        for (std::size_t j = 0; j < est.size(); ++j)
          scored.emplace_back(top[j].score, hit[j]);
      }
    }
    threshold = gmeans_threshold(scored);
    std::cout << "infer: G-means threshold " << format_g(threshold) << "\n";
  }

  StageTimer timer;
  const auto per_event = infer_chain(ds, ds.events(), cfg, geoms, net, maps,
                                     threshold, &timer);
  std::vector<PointRecord> rows;
  {
    ScopedStageTime t(timer, "postproc");
    for (std::size_t e = 0; e < per_event.size(); ++e) {
      const LocalizationSet fused = dbscan_fuse(per_event[e], 0.5, 1);
      for (const auto& p : fused.points) {
        PointRecord row;
        row.frame_index = static_cast<int>(e);
        row.space = Space::Bmode;
        row.angle_deg = std::numeric_limits<double>::quiet_NaN();
        row.coord1 = p.coords.x();
        row.coord2 = p.coords.y();
        row.score = p.score;
        rows.push_back(row);
      }
    }
  }
  write_points_csv(cfg.paths.localizations, rows);
  timer.set_frames(ds.events());
  std::cout << "infer: " << rows.size() << " localizations over "
            << ds.events() << " events\n"
            << timer.table();
}

void run_baseline(const PipelineConfig& cfg) {
  require_input(cfg.paths.rf, "RF input");
  prepare_output(cfg.paths.localizations);

  const RfDataset ds = read_rfb1(cfg.paths.rf);
  check_dataset_matches_config(ds, cfg);
  const auto geoms = per_angle_geometries(cfg);
  const ArrayGeometry g0 = build_geometry(cfg.geometry, 0.0);
  const BmodeGrid grid = default_bmode_grid(g0, cfg.grid.dlat, cfg.grid.dax);
  const int n_angles = static_cast<int>(ds.angles.size());
  const int events = ds.events();
  const auto [band_lo, band_hi] = resolve_band(cfg);
  const int threads = cfg.effective_threads();

  StageTimer timer;
  std::vector<std::vector<BmodeImage>> images(events);
  for (int a = 0; a < n_angles; ++a) {
    FrameStack stack;
    for (int e = 0; e < events; ++e)
      stack.frames.push_back(ds.frames[e * n_angles + a]);
    if (events == 0) continue;
    const int cuts = cfg.infer.svd_cut_low + cfg.infer.svd_cut_high;
    if (cuts > 0 && events >= 2 &&
        cuts < std::min<long>(stack.frames[0].data.size(), events)) {
      ScopedStageTime t(timer, "svd_filter");
      stack = svd_filter(stack, cfg.infer.svd_cut_low, cfg.infer.svd_cut_high);
    }
    {
      ScopedStageTime t(timer, "bandpass");
      for (auto& frame : stack.frames)
        frame = bandpass_filter(frame, band_lo, band_hi,
                                cfg.geometry.sample_rate);
    }
    {
      ScopedStageTime t(timer, "das");
      std::vector<BmodeImage> slots(events);
      parallel_for(events, threads, [&](int e) {
        slots[e] = das_beamform(stack.frames[e], geoms[a], grid,
                                cfg.baseline.f_number);
      });
      for (int e = 0; e < events; ++e)
        images[e].push_back(std::move(slots[e]));
    }
  }

  std::vector<PointRecord> rows;
  {
    ScopedStageTime t(timer, "localize");
    for (int e = 0; e < events; ++e) {
      const BmodeImage compounded = compound(images[e]);
      const Eigen::MatrixXd envelope = compounded.data.cwiseAbs();
      const double peak = envelope.maxCoeff();
      if (peak <= 0.0) continue;
      const LocalizationSet set = weighted_average_baseline(
          envelope, grid, cfg.baseline.window,
          cfg.baseline.threshold_rel * peak);
      for (const auto& p : set.points) {
        PointRecord row;
        row.frame_index = e;
        row.space = Space::Bmode;
        row.angle_deg = std::numeric_limits<double>::quiet_NaN();
        row.coord1 = p.coords.x();
        row.coord2 = p.coords.y();
        row.score = p.score;
        rows.push_back(row);
      }
    }
  }
  write_points_csv(cfg.paths.localizations, rows);
  timer.set_frames(events);
  std::cout << "baseline: " << rows.size() << " localizations over " << events
            << " events\n"
            << timer.table();
}

void run_eval(const PipelineConfig& cfg) {
  require_input(cfg.paths.labels_bmode, "ground-truth label");
  require_input(cfg.paths.localizations, "localization");
  prepare_output(cfg.paths.metrics);

  const auto gt = bmode_points_by_frame(read_points_csv(cfg.paths.labels_bmode));
  const auto est =
      bmode_points_by_frame(read_points_csv(cfg.paths.localizations));

  std::vector<int> frame_ids;
  for (const auto& [id, pts] : gt) frame_ids.push_back(id);
  for (const auto& [id, pts] : est)
    if (gt.find(id) == gt.end()) frame_ids.push_back(id);
  std::sort(frame_ids.begin(), frame_ids.end());

  static const std::vector<Eigen::Vector2d> kEmpty;
  std::vector<MatchResult> matches;
  for (const int id : frame_ids) {
    const auto g_it = gt.find(id);
    const auto e_it = est.find(id);
    matches.push_back(match_points(g_it == gt.end() ? kEmpty : g_it->second,
                                   e_it == est.end() ? kEmpty : e_it->second,
                                   cfg.eval.gate_wavelengths));
  }

  MetricsRow row;
  row.method = cfg.eval.method_name;
  row.rmse = rmse_lambda10(matches);
  row.jac = jaccard(matches);
  row.time_s = cfg.eval.time_s;
  write_metrics_csv(cfg.paths.metrics, {row});
  std::cout << metrics_table({row});
}

void run_render(const PipelineConfig& cfg) {
  require_input(cfg.paths.localizations, "localization");
  prepare_output(cfg.paths.image);
  if (!cfg.paths.canvas.empty()) prepare_output(cfg.paths.canvas);

  const ArrayGeometry g0 = build_geometry(cfg.geometry, 0.0);
  const BmodeGrid grid = default_bmode_grid(g0, cfg.grid.dlat, cfg.grid.dax);

  double pixel = 0.0;
  if (cfg.render.dither)
    pixel = std::isnan(cfg.render.dither_pixel)
                ? std::min(grid.dlat, grid.dax) / cfg.train.upsample
                : cfg.render.dither_pixel;

  std::vector<BmodePoint> points;
  for (const auto& row : read_points_csv(cfg.paths.localizations))
    if (row.space == Space::Bmode) points.push_back({row.coord1, row.coord2});

  const CanvasSpec spec =
      canvas_for_grid(grid, cfg.render.upsample, pixel, cfg.render.seed);
  const UlmCanvas canvas = accumulate(points, spec);
  export_image(canvas, cfg.render.gamma, cfg.paths.image);
  if (!cfg.paths.canvas.empty()) export_counts(canvas, cfg.paths.canvas);

  const long mass = canvas.counts.cast<long>().sum();
  std::cout << "render: " << points.size() << " points, " << mass
            << " binned, " << canvas.dropped << " dropped ("
            << spec.height << "x" << spec.width << " canvas)\n";
}

}  // namespace rfulm
