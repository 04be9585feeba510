// SPDX-FileCopyrightText: 2026 rfulm authors
// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rfulm/postproc.hpp"
#include "rfulm/util.hpp"

using namespace rfulm;

namespace {

// Independent per-pixel window-max scan with the same tie rule,
// kept deliberately naive.
Eigen::MatrixXd nms_oracle(const Eigen::MatrixXd& h, int window) {
  const int rows = static_cast<int>(h.rows());
  const int cols = static_cast<int>(h.cols());
  const int half = window / 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      bool keep = true;
      for (int p = i - half; p <= i + half; ++p)
        for (int q = j - half; q <= j + half; ++q) {
          if (p < 0 || p >= rows || q < 0 || q >= cols) continue;
          if (p == i && q == j) continue;
          const bool earlier = p < i || (p == i && q < j);
          if (h(p, q) > h(i, j) || (h(p, q) == h(i, j) && earlier))
            keep = false;
        }
      if (keep) out(i, j) = h(i, j);
    }
  return out;
}

// Connected components of the eps-graph (union-find), the exact
// equivalent of DBSCAN at min_samples = 1.
std::vector<std::vector<int>> components_oracle(
    const std::vector<Eigen::Vector2d>& pts, double eps) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if ((pts[i] - pts[j]).norm() <= eps) parent[find(i)] = find(j);
  std::map<int, std::vector<int>> by_root;
  for (int i = 0; i < n; ++i) by_root[find(i)].push_back(i);
  std::vector<std::vector<int>> clusters;
  for (auto& [root, members] : by_root) {
    std::sort(members.begin(), members.end());
    clusters.push_back(members);
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a[0] < b[0]; });
  return clusters;
}

Eigen::MatrixXd random_map(int rows, int cols, std::uint64_t seed,
                           bool nonneg = false) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i)
      m(i, j) = nonneg ? std::abs(rng.normal()) : rng.normal();
  return m;
}

}  // namespace

TEST_CASE("nms") {
  SUBCASE("a single isolated peak survives") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(9, 9);
    h(4, 5) = 2.0;
    const Eigen::MatrixXd out = nms(h, 3);
    CHECK(out(4, 5) == 2.0);
    CHECK(out.sum() == 2.0);
  }

  SUBCASE("constant plateau keeps only the first pixel in scan order") {
    const Eigen::MatrixXd h = Eigen::MatrixXd::Constant(6, 7, 3.0);
    const Eigen::MatrixXd out = nms(h, 3);
    CHECK(out(0, 0) == 3.0);
    CHECK(out.sum() == 3.0);
  }

  SUBCASE("matches the brute-force oracle on random maps") {
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::MatrixXd h = random_map(16, 16, 500 + trial);
      for (const int window : {3, 5}) {
        const Eigen::MatrixXd a = nms(h, window);
        const Eigen::MatrixXd b = nms_oracle(h, window);
        CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
      }
    }
  }

  SUBCASE("idempotent on non-negative maps") {
    // Localization probability maps are non-negative; there idempotence
    // is a theorem (suppressed pixels become zeros below every kept
    // peak). A negative-valued peak would be overtaken by the zeroed
    // background on a second pass, so the property is scoped to h >= 0.
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::MatrixXd h = random_map(12, 12, 900 + trial, true);
      const Eigen::MatrixXd once = nms(h, 3);
      CHECK((nms(once, 3) - once).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  SUBCASE("even or tiny windows are rejected") {
    const Eigen::MatrixXd h = Eigen::MatrixXd::Zero(4, 4);
    CHECK_THROWS_AS(nms(h, 4), std::invalid_argument);
    CHECK_THROWS_AS(nms(h, 1), std::invalid_argument);
  }
}

TEST_CASE("gmeans_threshold") {
  SUBCASE("separable scores select the largest gap candidate") {
    const std::vector<std::pair<double, bool>> scored = {
        {1.0, false}, {2.0, false}, {5.0, true}, {6.0, true}};
    CHECK(gmeans_threshold(scored) == 5.0);
  }

  SUBCASE("geometric mean arithmetic") {
    // 9 of 10 hits and 1 of 10 misses score high: TPR 0.9, FPR 0.1.
    std::vector<std::pair<double, bool>> scored;
    for (int i = 0; i < 9; ++i) scored.push_back({5.0, true});
    scored.push_back({1.0, true});
    scored.push_back({5.0, false});
    for (int i = 0; i < 9; ++i) scored.push_back({1.0, false});
    const double t = gmeans_threshold(scored);
    long tp = 0, fp = 0;
    for (const auto& [s, hit] : scored)
      if (s >= t) (hit ? tp : fp)++;
    const double g = std::sqrt((tp / 10.0) * (1.0 - fp / 10.0));
    CHECK(g == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(t == 5.0);  // ties resolve to the larger threshold
  }

  SUBCASE("agrees with a brute-force sweep, also under label swap") {
    Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<std::pair<double, bool>> scored;
      for (int i = 0; i < 40; ++i) {
        const bool hit = rng.uniform() < 0.5;
        scored.push_back({rng.normal() + (hit ? 1.0 : 0.0), hit});
      }
      auto oracle = [](const std::vector<std::pair<double, bool>>& sc) {
        std::vector<double> grid;
        for (const auto& [s, h] : sc) grid.push_back(s);
        std::sort(grid.begin(), grid.end());
        grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
        const std::size_t m = grid.size();
        for (std::size_t i = 0; i + 1 < m; ++i)
          grid.push_back(0.5 * (grid[i] + grid[i + 1]));
        long pos = 0, neg = 0;
        for (const auto& [s, h] : sc) (h ? pos : neg)++;
        double best_g = -1.0, best_t = 0.0;
        for (const double t : grid) {
          long tp = 0, fp = 0;
          for (const auto& [s, h] : sc)
            if (s >= t) (h ? tp : fp)++;
          const double g =
              std::sqrt((double(tp) / pos) * (1.0 - double(fp) / neg));
          if (g > best_g || (g == best_g && t > best_t)) {
            best_g = g;
            best_t = t;
          }
        }
        return best_t;
      };
      CHECK(gmeans_threshold(scored) == oracle(scored));
      std::vector<std::pair<double, bool>> swapped = scored;
      for (auto& [s, h] : swapped) h = !h;
      CHECK(gmeans_threshold(swapped) == oracle(swapped));
    }
  }

  SUBCASE("degenerate validation sets are rejected") {
    CHECK_THROWS_AS(gmeans_threshold({{1.0, true}, {2.0, true}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(gmeans_threshold({}), std::invalid_argument);
  }
}

TEST_CASE("extract_points") {
  SUBCASE("upsampled coordinates rescale by R") {
    Eigen::MatrixXd peaks = Eigen::MatrixXd::Zero(64, 16);
    peaks(40, 12) = 0.8;  // (R*sample, R*channel)
    const LocalizationSet set = extract_points(peaks, 0.5, 4);
    REQUIRE(set.points.size() == 1);
    CHECK(set.points[0].coords.x() == 3.0);   // channel
    CHECK(set.points[0].coords.y() == 10.0);  // sample
    CHECK(set.points[0].score == 0.8);
  }

  SUBCASE("empty peak map or unreachable threshold give empty sets") {
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(8, 8);
    CHECK(extract_points(zero, 0.0, 2).points.empty());
    Eigen::MatrixXd peaks = zero;
    peaks(3, 3) = 1.0;
    CHECK(extract_points(peaks, 2.0, 2).points.empty());
    CHECK(extract_points(peaks,
                         std::numeric_limits<double>::infinity(), 2)
              .points.empty());
  }

  SUBCASE("consistent scaling leaves RF coordinates unchanged") {
    Eigen::MatrixXd small = Eigen::MatrixXd::Zero(16, 8);
    small(6, 2) = 1.0;
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(48, 24);
    big(18, 6) = 1.0;  // coordinates and R scaled by 3
    const auto a = extract_points(small, 0.5, 2);
    const auto b = extract_points(big, 0.5, 6);
    REQUIRE(a.points.size() == 1);
    REQUIRE(b.points.size() == 1);
    CHECK(a.points[0].coords == b.points[0].coords);
  }

  SUBCASE("raising the threshold never adds points") {
    const Eigen::MatrixXd peaks = random_map(16, 16, 3, true);
    std::size_t prev = extract_points(peaks, 0.0, 2).points.size();
    for (const double t : {0.5, 1.0, 1.5, 2.5}) {
      const std::size_t now = extract_points(peaks, t, 2).points.size();
      CHECK(now <= prev);
      prev = now;
    }
  }
}

TEST_CASE("to_bmode") {
  AffineMap known;
  known.coeffs << 2.0, 0.0, 3.0, 0.0, 0.5, -1.0;

  LocalizationSet rf;
  rf.space = Space::Rf;
  rf.tx_angle = 0.1;
  rf.points.push_back({{1.0, 4.0}, 0.9});

  SUBCASE("identity map flips the tag only") {
    const LocalizationSet out = to_bmode(rf, AffineMap::identity());
    CHECK(out.space == Space::Bmode);
    CHECK(out.points[0].coords.x() == 1.0);
    CHECK(out.points[0].coords.y() == 4.0);
  }

  SUBCASE("known map applies the matrix") {
    const LocalizationSet out = to_bmode(rf, known);
    CHECK(out.points[0].coords.x() == doctest::Approx(5.0));
    CHECK(out.points[0].coords.y() == doctest::Approx(1.0));
  }

  SUBCASE("empty set maps to an empty set") {
    LocalizationSet empty;
    empty.space = Space::Rf;
    CHECK(to_bmode(empty, known).points.empty());
  }

  SUBCASE("missing per-angle map is an error") {
    AffineMap wrong_angle = known;
    wrong_angle.tx_angle = 0.5;
    CHECK_THROWS_AS(to_bmode(rf, std::vector<AffineMap>{wrong_angle}),
                    std::invalid_argument);
    wrong_angle.tx_angle = 0.1;
    CHECK(to_bmode(rf, std::vector<AffineMap>{wrong_angle}).space ==
          Space::Bmode);
  }
}

TEST_CASE("dbscan_fuse") {
  auto make_set = [](std::vector<std::pair<Eigen::Vector2d, double>> pts) {
    LocalizationSet s;
    s.space = Space::Bmode;
    for (const auto& [c, w] : pts) s.points.push_back({c, w});
    return s;
  };

  SUBCASE("a single point is its own cluster") {
    const auto fused = dbscan_fuse({make_set({{{1.0, 2.0}, 0.7}})}, 0.5);
    REQUIRE(fused.points.size() == 1);
    CHECK(fused.points[0].coords.x() == 1.0);
    CHECK(fused.points[0].score == 0.7);
  }

  SUBCASE("points 0.3 wavelengths apart fuse at the midpoint") {
    const auto fused = dbscan_fuse(
        {make_set({{{0.0, 1.0}, 1.0}, {{0.3, 1.0}, 1.0}})}, 0.5);
    REQUIRE(fused.points.size() == 1);
    CHECK(fused.points[0].coords.x() == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(fused.points[0].score == 2.0);
  }

  SUBCASE("points 0.8 wavelengths apart stay separate") {
    const auto fused = dbscan_fuse(
        {make_set({{{0.0, 1.0}, 1.0}, {{0.8, 1.0}, 1.0}})}, 0.5);
    CHECK(fused.points.size() == 2);
  }

  SUBCASE("min_samples=1 equals eps-graph connected components") {
    Rng rng(15);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Eigen::Vector2d> pts;
      for (int i = 0; i < 20; ++i)
        pts.push_back({rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0)});
      const auto clusters = dbscan_clusters(pts, 0.5, 1);
      const auto oracle = components_oracle(pts, 0.5);
      REQUIRE(clusters.size() == oracle.size());
      for (std::size_t c = 0; c < clusters.size(); ++c)
        CHECK(clusters[c] == oracle[c]);
      // Partition: each point in exactly one cluster.
      std::vector<int> seen(20, 0);
      for (const auto& cluster : clusters)
        for (const int i : cluster) seen[i]++;
      for (const int count : seen) CHECK(count == 1);
    }
  }

  SUBCASE("cluster structure is invariant under input permutation") {
    Rng rng(19);
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i < 15; ++i)
      pts.push_back({rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0)});
    const auto base = dbscan_clusters(pts, 0.5, 1);
    std::vector<int> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = 14; i > 0; --i) std::swap(perm[i], perm[rng.uniform_int(0, i)]);
    std::vector<Eigen::Vector2d> shuffled(15);
    for (int i = 0; i < 15; ++i) shuffled[i] = pts[perm[i]];
    const auto permuted = dbscan_clusters(shuffled, 0.5, 1);
    CHECK(permuted.size() == base.size());
  }

  SUBCASE("higher min_samples leaves isolated points as noise") {
    std::vector<Eigen::Vector2d> pts = {{0.0, 0.0}, {5.0, 5.0}, {9.0, 0.0}};
    CHECK(dbscan_clusters(pts, 0.5, 2).empty());
  }

  SUBCASE("RF-space input is rejected") {
    LocalizationSet rf;
    rf.space = Space::Rf;
    CHECK_THROWS_AS(dbscan_fuse({rf}, 0.5), std::invalid_argument);
  }
}
