#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "dcap/pointset.hpp"
#include "dcap/rng.hpp"

using namespace dcap;

namespace {

std::vector<Vec3> random_points(Rng& rng, int n) {
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) {
    p = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
  }
  return pts;
}

PointCloud cloud_from(const std::vector<Vec3>& pts,
                      const std::vector<std::vector<double>>& feats = {}) {
  PointCloud cloud;
  cloud.positions = pts;
  if (!feats.empty()) {
    cloud.feature_dim = static_cast<int>(feats.front().size());
    for (const auto& row : feats) {
      cloud.features.insert(cloud.features.end(), row.begin(), row.end());
    }
  }
  return cloud;
}

}  // namespace

TEST_CASE("fps collinear example picks the spread {0, 10, 5}") {
  std::vector<Vec3> pts;
  for (int x = 0; x <= 10; ++x) pts.push_back({double(x), 0, 0});
  CHECK(fps(pts, 3, 0) == std::vector<int>{0, 10, 5});
}

TEST_CASE("fps edge cases") {
  std::vector<Vec3> pts = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(fps(pts, 1, 2) == std::vector<int>{2});
  CHECK(fps(pts, 3, 0).size() == 3);
  CHECK_THROWS_AS(fps(pts, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(fps(pts, 4, 0), std::invalid_argument);
  CHECK_THROWS_AS(fps(pts, 2, 3), std::invalid_argument);
}

TEST_CASE("fps greedy step optimality and no duplicates") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(40));
    const auto pts = random_points(rng, n);
    const int k = 1 + static_cast<int>(rng.uniform_int(n));
    const auto picked = fps(pts, k, 0);

    std::set<int> unique(picked.begin(), picked.end());
    CHECK(unique.size() == picked.size());

    // every pick maximizes the min distance to the chosen prefix
    for (std::size_t step = 1; step < picked.size(); ++step) {
      const auto min_dist = [&](int idx) {
        double best = 1e300;
        for (std::size_t j = 0; j < step; ++j) {
          best = std::min(best, distance(pts[idx], pts[picked[j]]));
        }
        return best;
      };
      const double chosen = min_dist(picked[step]);
      for (int idx = 0; idx < n; ++idx) {
        if (std::find(picked.begin(), picked.begin() + step + 1, idx) !=
            picked.begin() + step + 1) {
          continue;
        }
        CHECK(min_dist(idx) <= chosen + 1e-12);
      }
    }
  }
}

TEST_CASE("ball_query isolated point and fallback") {
  const auto cloud = cloud_from({{0, 0, 0}});
  const auto hit = ball_query({{0, 0, 0}}, cloud, 0.1, 4);
  REQUIRE(hit.size() == 1);
  CHECK(hit[0].indices == std::vector<int>{0});
  CHECK_FALSE(hit[0].fallback);

  const auto far = ball_query({{100, 0, 0}}, cloud, 0.1, 4);
  CHECK(far[0].indices == std::vector<int>{0});
  CHECK(far[0].fallback);
}

TEST_CASE("ball_query takes the lowest in-range indices up to max_samples") {
  // points at x = 0..9; center 3, radius 3 covers x in [0, 6]
  std::vector<Vec3> pts;
  for (int x = 0; x <= 9; ++x) pts.push_back({double(x), 0, 0});
  const auto groups = ball_query({{3, 0, 0}}, cloud_from(pts), 3.0, 4);
  CHECK(groups[0].indices == std::vector<int>{0, 1, 2, 3});
  CHECK_FALSE(groups[0].fallback);

  const auto all = ball_query({{3, 0, 0}}, cloud_from(pts), 3.0, 16);
  CHECK(all[0].indices == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("ball_query in-radius guarantee") {
  Rng rng(5);
  const auto pts = random_points(rng, 64);
  const auto cloud = cloud_from(pts);
  const auto centers = random_points(rng, 16);
  const auto groups = ball_query(centers, cloud, 1.0, 8);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (int idx : groups[c].indices) {
      if (!groups[c].fallback) {
        CHECK(distance(centers[c], pts[idx]) <= 1.0 + 1e-12);
      }
    }
  }
  CHECK_THROWS_AS(ball_query(centers, PointCloud{}, 1.0, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(ball_query(centers, cloud, -1.0, 8), std::invalid_argument);
}

TEST_CASE("knn returns the closest indices in distance order") {
  std::vector<Vec3> pts;
  for (int x = 0; x <= 9; ++x) pts.push_back({double(x), 0, 0});
  CHECK(knn({3.2, 0, 0}, pts, 3) == std::vector<int>{3, 4, 2});
  // equidistant neighbors break toward the lower index
  CHECK(knn({2.5, 0, 0}, pts, 2) == std::vector<int>{2, 3});
  CHECK(knn({0, 0, 0}, pts, 10).size() == 10);
  CHECK_THROWS_AS(knn({0, 0, 0}, pts, 0), std::invalid_argument);
  CHECK_THROWS_AS(knn({0, 0, 0}, pts, 11), std::invalid_argument);
}

TEST_CASE("set_abstraction single point group") {
  const auto cloud = cloud_from({{1, 2, 3}}, {{0.5, 0.25}});
  const auto feats =
      set_abstraction({{1, 2, 3}}, cloud, 0.5, 4, max_pool_aggregator());
  REQUIRE(feats.size() == 1);
  CHECK(feats[0] == std::vector<double>{0, 0, 0, 0.5, 0.25});
}

TEST_CASE("set_abstraction elementwise max over two points") {
  const auto cloud = cloud_from({{0.1, 0, 0}, {0, 0.2, 0}}, {{1, 0}, {0, 1}});
  const auto feats =
      set_abstraction({{0, 0, 0}}, cloud, 1.0, 4, max_pool_aggregator());
  CHECK(feats[0][3] == 1.0);
  CHECK(feats[0][4] == 1.0);
}

TEST_CASE("set_abstraction hand-enumerated max over a 3-point group") {
  const auto cloud = cloud_from({{1, 0, 0}, {0, 2, 0}, {0, 0, -3}},
                                {{1, 0}, {0, 1}, {0.5, 0.5}});
  const auto feats =
      set_abstraction({{0, 0, 0}}, cloud, 3.5, 8, max_pool_aggregator());
  CHECK(feats[0] == std::vector<double>{1, 2, 0, 1, 1});
}

TEST_CASE("set_abstraction reference aggregator is permutation invariant") {
  Rng rng(17);
  const auto pts = random_points(rng, 12);
  std::vector<std::vector<double>> feats;
  for (int i = 0; i < 12; ++i) feats.push_back({rng.uniform(), rng.uniform()});

  const auto base = set_abstraction({{0, 0, 0}}, cloud_from(pts, feats), 10.0,
                                    12, max_pool_aggregator());
  // reversed point order
  auto rpts = pts;
  auto rfeats = feats;
  std::reverse(rpts.begin(), rpts.end());
  std::reverse(rfeats.begin(), rfeats.end());
  const auto flipped = set_abstraction({{0, 0, 0}}, cloud_from(rpts, rfeats),
                                       10.0, 12, max_pool_aggregator());
  for (std::size_t i = 0; i < base[0].size(); ++i) {
    CHECK(base[0][i] == doctest::Approx(flipped[0][i]));
  }
}

TEST_CASE("set_abstraction rejects inconsistent aggregator output") {
  const auto cloud = cloud_from({{0, 0, 0}, {5, 0, 0}});
  int calls = 0;
  const GroupAggregator bad = [&calls](const std::vector<Vec3>&,
                                       const std::vector<std::vector<double>>&) {
    return std::vector<double>(++calls, 0.0);
  };
  CHECK_THROWS_AS(
      set_abstraction({{0, 0, 0}, {5, 0, 0}}, cloud, 0.5, 2, bad),
      std::invalid_argument);
}

TEST_CASE("fourier_pe zero position and quarter period") {
  FourierPEConfig config;
  config.num_bands = 2;
  config.max_frequency = 8.0;
  const auto zero = fourier_pe({0, 0, 0}, config);
  REQUIRE(static_cast<int>(zero.size()) == config.output_dim());
  for (std::size_t i = 0; i < zero.size(); i += 2) {
    CHECK(zero[i] == doctest::Approx(0.0));      // sin
    CHECK(zero[i + 1] == doctest::Approx(1.0));  // cos
  }

  FourierPEConfig single;
  single.num_bands = 1;
  single.max_frequency = 1.0;
  const auto quarter = fourier_pe({0.25, 0, 0}, single);
  REQUIRE(quarter.size() == 6);
  CHECK(quarter[0] == doctest::Approx(1.0));  // sin(pi/2)
  CHECK(quarter[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("fourier_pe stays within [-1, 1] and has the right length") {
  Rng rng(3);
  FourierPEConfig config;  // defaults: 32 bands, max frequency 64
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p = {rng.uniform(-10, 10), rng.uniform(-10, 10),
                    rng.uniform(-10, 10)};
    const auto enc = fourier_pe(p, config);
    CHECK(static_cast<int>(enc.size()) == 6 * config.num_bands);
    for (double v : enc) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("point cloud round trip through binary and jsonl") {
  Rng rng(11);
  PointCloud cloud;
  cloud.feature_dim = 2;
  for (int i = 0; i < 20; ++i) {
    cloud.positions.push_back(
        {rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4)});
    cloud.features.push_back(rng.uniform());
    cloud.features.push_back(rng.uniform());
    cloud.instance_ids.push_back(i % 3 == 0 ? -1 : i % 3);
  }

  const std::string bin_path =
      (std::filesystem::temp_directory_path() / "dcap_cloud.bin").string();
  save_point_cloud(cloud, bin_path);
  const PointCloud bin = load_point_cloud(bin_path);
  REQUIRE(bin.size() == cloud.size());
  CHECK(bin.feature_dim == 2);
  CHECK(bin.instance_ids == cloud.instance_ids);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    // float32 storage: ~1e-7 relative
    CHECK(bin.positions[i][0] ==
          doctest::Approx(cloud.positions[i][0]).epsilon(1e-6));
  }

  const std::string jsonl_path =
      (std::filesystem::temp_directory_path() / "dcap_cloud.jsonl").string();
  save_point_cloud(cloud, jsonl_path);
  const PointCloud jsonl = load_point_cloud(jsonl_path);
  REQUIRE(jsonl.size() == cloud.size());
  CHECK(jsonl.instance_ids == cloud.instance_ids);
  std::remove(bin_path.c_str());
  std::remove(jsonl_path.c_str());
}
