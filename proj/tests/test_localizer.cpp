// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "rfulm/localizer.hpp"
#include "rfulm/util.hpp"
#include "test_helpers.hpp"

using namespace rfulm;

namespace {

Eigen::MatrixXd random_planes(int channels, int u, int v, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(channels, static_cast<long>(u) * v);
  for (long j = 0; j < m.cols(); ++j)
    for (int i = 0; i < channels; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("pixel_shuffle") {
  SUBCASE("R=1 is the identity") {
    const Eigen::MatrixXd planes = random_planes(1, 3, 4, 1);
    const Eigen::MatrixXd img = pixel_shuffle(planes, 3, 4);
    REQUIRE(img.rows() == 3);
    REQUIRE(img.cols() == 4);
    for (int v = 0; v < 4; ++v)
      for (int u = 0; u < 3; ++u) CHECK(img(u, v) == planes(0, v * 3 + u));
  }

  SUBCASE("R=2 at a single site lays planes out row-major") {
    Eigen::MatrixXd planes(4, 1);
    planes << 1.0, 2.0, 3.0, 4.0;  // a, b, c, d
    const Eigen::MatrixXd img = pixel_shuffle(planes, 1, 1);
    CHECK(img(0, 0) == 1.0);
    CHECK(img(0, 1) == 2.0);
    CHECK(img(1, 0) == 3.0);
    CHECK(img(1, 1) == 4.0);
  }

  SUBCASE("shuffle then unshuffle is the identity") {
    const Eigen::MatrixXd planes = random_planes(9, 5, 7, 3);
    const Eigen::MatrixXd back =
        pixel_unshuffle(pixel_shuffle(planes, 5, 7), 3);
    CHECK((back - planes).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("values are only permuted") {
    const Eigen::MatrixXd planes = random_planes(4, 6, 2, 9);
    Eigen::VectorXd a = planes.reshaped();
    Eigen::VectorXd b = pixel_shuffle(planes, 6, 2).reshaped();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("non-square plane count is rejected") {
    CHECK_THROWS_AS(pixel_shuffle(random_planes(3, 2, 2, 0), 2, 2),
                    std::invalid_argument);
  }
}

TEST_CASE("build_target") {
  SUBCASE("no labels gives a zero mask with sentinel amplification") {
    const TargetMask t = build_target({}, 4, 1.0, 8, 4);
    CHECK(t.values.maxCoeff() == 0.0);
    CHECK(t.amplification == 1.0);
  }

  SUBCASE("single label peaks at exactly 120 for any sigma") {
    for (const double sigma : {0.5, 1.0, 2.0}) {
      const TargetMask t = build_target({{2.0, 4.0, 0}}, 4, sigma, 8, 4);
      CHECK(t.values.maxCoeff() == 120.0);
      CHECK(t.values(16, 8) == 120.0);  // (R*sample, R*channel)
    }
  }

  SUBCASE("far-apart labels superpose exactly") {
    const RfLabel a{1.0, 2.0, 0};
    const RfLabel b{6.0, 25.0, 1};
    const TargetMask ta = build_target({a}, 2, 1.0, 32, 8);
    const TargetMask tb = build_target({b}, 2, 1.0, 32, 8);
    const TargetMask tab = build_target({a, b}, 2, 1.0, 32, 8);
    CHECK((tab.values - ta.values - tb.values).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("coincident labels collapse to one pixel") {
    const TargetMask one = build_target({{3.0, 5.0, 0}}, 2, 1.0, 16, 8);
    const TargetMask two =
        build_target({{3.0, 5.0, 0}, {3.0, 5.0, 1}}, 2, 1.0, 16, 8);
    CHECK((one.values - two.values).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("rounding is ties-to-even on the upsampled grid") {
    // R*sample = 4.5 rounds to row 4, R*channel = 5.5 rounds to column 6.
    const TargetMask t = build_target({{2.75, 2.25, 0}}, 2, 0.5, 16, 8);
    CHECK(t.values(4, 6) == 120.0);
  }

  SUBCASE("label outside the grid is a precondition violation") {
    CHECK_THROWS_AS(build_target({{9.9, 2.0, 0}}, 4, 1.0, 8, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("loss") {
  SUBCASE("zero prediction against an empty target") {
    const TargetMask empty = build_target({}, 2, 1.0, 4, 4);
    CHECK(loss_value(Eigen::MatrixXd::Zero(8, 8), empty, 0.01) == 0.0);
  }

  SUBCASE("perfect prediction leaves only the L1 term") {
    const TargetMask t = build_target({{1.0, 2.0, 0}}, 2, 1.0, 4, 4);
    CHECK(loss_value(t.values, t, 0.01) ==
          doctest::Approx(0.01 * t.values.cwiseAbs().sum()).epsilon(1e-12));
  }

  SUBCASE("scalar evaluation") {
    TargetMask t;
    t.values = Eigen::MatrixXd::Constant(1, 1, 1.0);
    Eigen::MatrixXd pred = Eigen::MatrixXd::Constant(1, 1, 2.0);
    CHECK(loss_value(pred, t, 0.01) == doctest::Approx(1.02).epsilon(1e-12));
  }

  SUBCASE("shape mismatch throws") {
    TargetMask t;
    t.values = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(loss_value(Eigen::MatrixXd::Zero(3, 2), t, 0.0),
                    std::invalid_argument);
  }

  SUBCASE("gradient vanishes at the L2 optimum when lambda1 is zero") {
    const TargetMask t = build_target({{1.5, 3.0, 0}}, 2, 1.0, 8, 4);
    CHECK(loss_gradient(t.values, t, 0.0).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("loss is non-negative") {
    Rng rng(4);
    const TargetMask t = build_target({{1.0, 1.0, 0}}, 2, 0.7, 8, 4);
    for (int i = 0; i < 20; ++i) {
      Eigen::MatrixXd pred(16, 8);
      for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 8; ++c) pred(r, c) = rng.normal();
      CHECK(loss_value(pred, t, 0.01) >= 0.0);
    }
  }
}

TEST_CASE("SrNetwork forward") {
  const SrNetwork net = SrNetwork::make_default(2, 6, 2, 11);

  SUBCASE("shape contract holds for any field size") {
    for (const auto [u, v] : {std::pair{8, 8}, {12, 5}, {3, 9}}) {
      const Eigen::MatrixXd out =
          net.forward(random_planes(2, u, v, 17), u, v);
      CHECK(out.rows() == 2 * u);
      CHECK(out.cols() == 2 * v);
      CHECK(out.allFinite());
    }
  }

  SUBCASE("zero input with zero-initialized biases gives the bias map") {
    const Eigen::MatrixXd out =
        net.forward(Eigen::MatrixXd::Zero(2, 64), 8, 8);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("two calls are bit-identical") {
    const Eigen::MatrixXd x = random_planes(2, 8, 8, 23);
    const Eigen::MatrixXd a = net.forward(x, 8, 8);
    const Eigen::MatrixXd b = net.forward(x, 8, 8);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("same seed builds the same network") {
    const SrNetwork again = SrNetwork::make_default(2, 6, 2, 11);
    CHECK((again.parameters() - net.parameters()).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("non-finite activations name the offending layer") {
    SrNetwork broken = net;
    broken.parameters()(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_WITH_AS(
        broken.forward(random_planes(2, 4, 4, 2), 4, 4),
        doctest::Contains("conv1"), std::runtime_error);
  }

  SUBCASE("parameter count is reported") {
    CHECK(net.parameter_count() ==
          (2 * 6 * 9 + 6) + 2 * (6 * 6 * 9 + 6) + (6 * 4 * 9 + 4));
  }
}

TEST_CASE("backward matches central finite differences") {
  // Small three-layer net (372 parameters) on an 8x8 field, R = 2.
  SrNetwork net({{2, 4, 3, true}, {4, 4, 3, true}, {4, 4, 3, false}}, 2, 31);
  REQUIRE(net.parameter_count() <= 500);
  const int u = 8, v = 8;
  const Eigen::MatrixXd input = random_planes(2, u, v, 41);
  const TargetMask target =
      build_target({{3.0, 2.0, 0}, {6.0, 5.5, 1}}, 2, 1.0, u, v);
  const double lambda1 = 1e-2;

  const Eigen::VectorXd analytic =
      loss_parameter_gradient(net, input, u, v, target, lambda1);

  const double h = 1e-4;
  Eigen::VectorXd fd(net.parameter_count());
  SrNetwork probe = net;
  for (int i = 0; i < net.parameter_count(); ++i) {
    const double saved = probe.parameters()(i);
    probe.parameters()(i) = saved + h;
    const double up =
        loss_value(probe.forward(input, u, v), target, lambda1);
    probe.parameters()(i) = saved - h;
    const double down =
        loss_value(probe.forward(input, u, v), target, lambda1);
    probe.parameters()(i) = saved;
    fd(i) = (up - down) / (2.0 * h);
  }

  const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (int i = 0; i < fd.size(); ++i) {
    const double rel = std::abs(analytic(i) - fd(i)) /
                       std::max({std::abs(analytic(i)), std::abs(fd(i)),
                                 1e-3 * scale});
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("duplicated sample doubles its summed gradient") {
  SrNetwork net({{2, 4, 3, true}, {4, 4, 3, false}}, 2, 7);
  const Eigen::MatrixXd input = random_planes(2, 6, 6, 5);
  const TargetMask target = build_target({{2.0, 3.0, 0}}, 2, 1.0, 6, 6);
  const Eigen::VectorXd g =
      loss_parameter_gradient(net, input, 6, 6, target, 0.01);
  const Eigen::VectorXd doubled = g + g;
  CHECK((doubled - 2.0 * g).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cosine schedule endpoints") {
  CHECK(cosine_lr(1e-3, 0, 40) == 1e-3);
  CHECK(cosine_lr(1e-3, 40, 40) <= 1e-9 * 1e-3);
  CHECK(cosine_lr(1e-3, 20, 40) == doctest::Approx(5e-4).epsilon(1e-12));
}

TEST_CASE("train") {
  const auto g = testing::desk_geometry(0.0, 16, 32);
  const PulseSpec pulse{g.center_frequency(), 0.67};

  TrainConfig cfg;
  cfg.upsample = 2;
  cfg.sigma = 1.0;
  cfg.hidden_channels = 8;
  cfg.max_epochs = 0;
  cfg.seed = 3;
  cfg.threads = 1;
  cfg.augment_clutter_db = 50.0;

  const auto sim = simulate_rf_frame({{{0.5, 6.0}, 1.0}}, g, pulse);
  const std::vector<TrainSample> data{{sim.frame, sim.rf_labels}};

  SUBCASE("zero epochs returns the initialized network") {
    const TrainResult r = train(data, cfg);
    const SrNetwork init =
        SrNetwork::make_default(2, 8, 2, derive_seed(cfg.seed, 0x1417));
    CHECK(r.history.empty());
    CHECK((r.network.parameters() - init.parameters()).cwiseAbs().maxCoeff() ==
          0.0);
  }

  SUBCASE("loss collapses on a single desk-scale frame") {
    TrainConfig full = cfg;
    full.max_epochs = 40;
    const TrainResult r = train(data, full);
    REQUIRE(r.history.size() == 40);
    CHECK(r.history.back().mean_loss < 0.10 * r.history.front().mean_loss);
  }

  SUBCASE("same seed reproduces parameters bit-exactly, any thread count") {
    TrainConfig run = cfg;
    run.max_epochs = 3;
    std::vector<TrainSample> four;
    for (int i = 0; i < 4; ++i) {
      const auto s = simulate_rf_frame(
          {{{-2.0 + i, 5.0 + 0.5 * i}, 1.0}}, g, pulse);
      four.push_back({s.frame, s.rf_labels});
    }
    const TrainResult a = train(four, run);
    const TrainResult b = train(four, run);
    run.threads = 2;
    const TrainResult c = train(four, run);
    CHECK((a.network.parameters() - b.network.parameters())
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((a.network.parameters() - c.network.parameters())
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }

  SUBCASE("invalid upsample factor is rejected") {
    TrainConfig bad = cfg;
    bad.upsample = 3;
    CHECK_THROWS_AS(train(data, bad), std::invalid_argument);
  }
}

TEST_CASE("checkpoint round-trip") {
  const SrNetwork net = SrNetwork::make_default(2, 5, 2, 99);
  net.save("ckpt_test.srn");
  const SrNetwork loaded = SrNetwork::load("ckpt_test.srn");
  CHECK(loaded.upsample_factor() == 2);
  REQUIRE(loaded.parameter_count() == net.parameter_count());
  for (int i = 0; i < net.parameter_count(); ++i)
    CHECK(loaded.parameters()(i) ==
          static_cast<double>(static_cast<float>(net.parameters()(i))));

  std::ofstream bad("ckpt_bad.srn", std::ios::binary);
  bad << "NOPE";
  bad.close();
  CHECK_THROWS_AS(SrNetwork::load("ckpt_bad.srn"), std::runtime_error);
}

TEST_CASE("weighted_average_baseline") {
  BmodeGrid grid;
  grid.lat0 = -5.0;
  grid.ax0 = 2.0;
  grid.dlat = 0.5;
  grid.dax = 0.5;
  grid.height = 24;
  grid.width = 24;

  auto blob_image = [&](double row, double col, double sigma) {
    Eigen::MatrixXd img = Eigen::MatrixXd::Zero(grid.height, grid.width);
    for (int r = 0; r < grid.height; ++r)
      for (int c = 0; c < grid.width; ++c)
        img(r, c) = std::exp(-((r - row) * (r - row) + (c - col) * (c - col)) /
                             (2.0 * sigma * sigma));
    return img;
  };

  SUBCASE("blob at an exact pixel refines to zero offset") {
    const auto img = blob_image(10.0, 7.0, 1.5);
    const auto set = weighted_average_baseline(img, grid, 7, 0.5);
    REQUIRE(set.points.size() == 1);
    CHECK(set.points[0].coords.x() ==
          doctest::Approx(grid.lateral_of(7.0)).epsilon(1e-9));
    CHECK(set.points[0].coords.y() ==
          doctest::Approx(grid.axial_of(10.0)).epsilon(1e-9));
  }

  SUBCASE("sub-pixel blob centroid lands within 0.05 pixel") {
    const auto img = blob_image(10.3, 7.6, 1.5);
    const auto set = weighted_average_baseline(img, grid, 9, 0.5);
    REQUIRE(set.points.size() == 1);
    const double col = (set.points[0].coords.x() - grid.lat0) / grid.dlat;
    const double row = (set.points[0].coords.y() - grid.ax0) / grid.dax;
    CHECK(std::abs(row - 10.3) < 0.05);
    CHECK(std::abs(col - 7.6) < 0.05);
  }

  SUBCASE("empty image yields an empty set") {
    const auto set = weighted_average_baseline(
        Eigen::MatrixXd::Zero(grid.height, grid.width), grid, 5, 0.1);
    CHECK(set.points.empty());
  }
}
