#include "dcap/pointset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dcap/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary point cloud layout assumes a little-endian host");

namespace dcap {

std::vector<double> PointCloud::feature_row(std::size_t i) const {
  const std::size_t f = static_cast<std::size_t>(feature_dim);
  return std::vector<double>(features.begin() + i * f,
                             features.begin() + (i + 1) * f);
}

void PointCloud::validate() const {
  const std::size_t n = positions.size();
  if (feature_dim < 0) throw SchemaError("PointCloud: negative feature_dim");
  if (features.size() != n * static_cast<std::size_t>(feature_dim)) {
    throw SchemaError("PointCloud: features size != N * feature_dim");
  }
  if (!instance_ids.empty() && instance_ids.size() != n) {
    throw SchemaError("PointCloud: instance_ids length != N");
  }
}

std::vector<int> fps(const std::vector<Vec3>& points, int k, int start_index) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n) throw std::invalid_argument("fps: k out of range");
  if (start_index < 0 || start_index >= n) {
    throw std::invalid_argument("fps: start_index out of range");
  }

  std::vector<int> picked;
  picked.reserve(k);
  picked.push_back(start_index);

  // min squared distance from each point to the picked prefix
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);
  taken[start_index] = 1;
  int last = start_index;
  for (int step = 1; step < k; ++step) {
    int best = -1;
    double best_d2 = -1.0;
    for (int i = 0; i < n; ++i) {
      min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[last]));
      if (!taken[i] && min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    picked.push_back(best);
    taken[best] = 1;
    last = best;
  }
  return picked;
}

std::vector<BallGroup> ball_query(const std::vector<Vec3>& centers,
                                  const PointCloud& cloud, double radius,
                                  int max_samples) {
  if (cloud.size() == 0) throw std::invalid_argument("ball_query: empty cloud");
  if (radius <= 0.0) throw std::invalid_argument("ball_query: radius must be > 0");
  if (max_samples < 1) {
    throw std::invalid_argument("ball_query: max_samples must be >= 1");
  }
  const double r2 = radius * radius;
  std::vector<BallGroup> out(centers.size());
  for (std::size_t c = 0; c < centers.size(); ++c) {
    BallGroup& group = out[c];
    int nearest = 0;
    double nearest_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const double d2 = squared_distance(centers[c], cloud.positions[i]);
      if (d2 < nearest_d2) {
        nearest_d2 = d2;
        nearest = static_cast<int>(i);
      }
      if (d2 <= r2 && static_cast<int>(group.indices.size()) < max_samples) {
        group.indices.push_back(static_cast<int>(i));
      }
    }
    if (group.indices.empty()) {
      group.indices.push_back(nearest);
      group.fallback = true;
    }
  }
  return out;
}

std::vector<int> knn(const Vec3& center, const std::vector<Vec3>& points,
                     int k) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n) throw std::invalid_argument("knn: k out of range");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = squared_distance(center, points[a]);
    const double db = squared_distance(center, points[b]);
    if (da != db) return da < db;
    return a < b;
  });
  order.resize(k);
  return order;
}

GroupAggregator max_pool_aggregator() {
  return [](const std::vector<Vec3>& rel,
            const std::vector<std::vector<double>>& feats) {
    const std::size_t f = feats.empty() ? 0 : feats.front().size();
    std::vector<double> out(3 + f, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < rel.size(); ++i) {
      for (int axis = 0; axis < 3; ++axis) {
        out[axis] = std::max(out[axis], rel[i][axis]);
      }
      for (std::size_t j = 0; j < f; ++j) {
        out[3 + j] = std::max(out[3 + j], feats[i][j]);
      }
    }
    return out;
  };
}

std::vector<std::vector<double>> set_abstraction(
    const std::vector<Vec3>& centers, const PointCloud& cloud, double radius,
    int max_samples, const GroupAggregator& aggregator) {
  cloud.validate();
  const auto groups = ball_query(centers, cloud, radius, max_samples);
  std::vector<std::vector<double>> out;
  out.reserve(centers.size());
  std::size_t dim = 0;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::vector<Vec3> rel;
    std::vector<std::vector<double>> feats;
    rel.reserve(groups[c].indices.size());
    feats.reserve(groups[c].indices.size());
    for (int idx : groups[c].indices) {
      rel.push_back(cloud.positions[idx] - centers[c]);
      feats.push_back(cloud.feature_row(idx));
    }
    out.push_back(aggregator(rel, feats));
    if (c == 0) {
      dim = out.front().size();
    } else if (out.back().size() != dim) {
      throw std::invalid_argument(
          "set_abstraction: aggregator output dimension inconsistent");
    }
  }
  return out;
}

std::vector<double> fourier_pe(const Vec3& position,
                               const FourierPEConfig& config) {
  if (!config.valid()) {
    throw std::invalid_argument("fourier_pe: invalid config");
  }
  std::vector<double> freqs(config.num_bands, 1.0);
  if (config.num_bands > 1) {
    // geometric spacing f_b = max_frequency^(b / (num_bands - 1))
    const double step = std::log(config.max_frequency) / (config.num_bands - 1);
    for (int b = 0; b < config.num_bands; ++b) freqs[b] = std::exp(step * b);
  }
  std::vector<double> out;
  out.reserve(config.output_dim());
  for (int axis = 0; axis < 3; ++axis) {
    for (int b = 0; b < config.num_bands; ++b) {
      const double phase = 2.0 * std::numbers::pi * freqs[b] * position[axis];
      out.push_back(std::sin(phase));
      out.push_back(std::cos(phase));
    }
  }
  return out;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

PointCloud load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open point cloud file: " + path);
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  bool any_ids = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const auto& pos = j.at("position");
    cloud.positions.push_back({pos.at(0).get<double>(), pos.at(1).get<double>(),
                               pos.at(2).get<double>()});
    std::vector<double> feats;
    if (j.contains("features")) feats = j["features"].get<std::vector<double>>();
    if (cloud.positions.size() == 1) {
      cloud.feature_dim = static_cast<int>(feats.size());
    } else if (static_cast<int>(feats.size()) != cloud.feature_dim) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": inconsistent feature width");
    }
    cloud.features.insert(cloud.features.end(), feats.begin(), feats.end());
    if (j.contains("instance_id")) {
      if (!any_ids && cloud.positions.size() > 1) {
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": instance_id present on some lines only");
      }
      any_ids = true;
      cloud.instance_ids.push_back(j["instance_id"].get<std::int32_t>());
    } else if (any_ids) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": instance_id present on some lines only");
    }
  }
  cloud.validate();
  return cloud;
}

PointCloud load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open point cloud file: " + path);
  std::uint32_t n = 0, f = 0;
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&f), 4);
  if (!in) throw SchemaError(path + ": truncated header");
  PointCloud cloud;
  cloud.feature_dim = static_cast<int>(f);
  cloud.positions.resize(n);
  cloud.features.resize(static_cast<std::size_t>(n) * f);
  std::vector<float> row(3 + f);
  for (std::uint32_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
    if (!in) throw SchemaError(path + ": truncated point data");
    cloud.positions[i] = {row[0], row[1], row[2]};
    for (std::uint32_t j = 0; j < f; ++j) {
      cloud.features[static_cast<std::size_t>(i) * f + j] = row[3 + j];
    }
  }
  std::vector<std::int32_t> ids(n);
  in.read(reinterpret_cast<char*>(ids.data()), n * sizeof(std::int32_t));
  if (in.gcount() == static_cast<std::streamsize>(n * sizeof(std::int32_t))) {
    cloud.instance_ids = std::move(ids);
  } else if (in.gcount() != 0) {
    throw SchemaError(path + ": truncated instance id block");
  }
  return cloud;
}

}  // namespace

PointCloud load_point_cloud(const std::string& path) {
  return ends_with(path, ".jsonl") ? load_jsonl(path) : load_binary(path);
}

void save_point_cloud(const PointCloud& cloud, const std::string& path) {
  cloud.validate();
  if (ends_with(path, ".jsonl")) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write point cloud file: " + path);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      nlohmann::json j;
      j["position"] = cloud.positions[i];
      if (cloud.feature_dim > 0) j["features"] = cloud.feature_row(i);
      if (cloud.has_instance_ids()) j["instance_id"] = cloud.instance_ids[i];
      out << j.dump() << '\n';
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write point cloud file: " + path);
  const std::uint32_t n = static_cast<std::uint32_t>(cloud.size());
  const std::uint32_t f = static_cast<std::uint32_t>(cloud.feature_dim);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&f), 4);
  std::vector<float> row(3 + f);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int axis = 0; axis < 3; ++axis) {
      row[axis] = static_cast<float>(cloud.positions[i][axis]);
    }
    for (std::uint32_t j = 0; j < f; ++j) {
      row[3 + j] =
          static_cast<float>(cloud.features[static_cast<std::size_t>(i) * f + j]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              row.size() * sizeof(float));
  }
  if (cloud.has_instance_ids()) {
    out.write(reinterpret_cast<const char*>(cloud.instance_ids.data()),
              n * sizeof(std::int32_t));
  }
}

}  // namespace dcap
