#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcap/vec3.hpp"

namespace dcap {

// Point cloud: N positions (meters), N x F feature channels, and optional
// per-point instance ids (-1 = background). Features are stored row-major.
struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<double> features;  // size N * feature_dim
  int feature_dim = 0;
  std::vector<std::int32_t> instance_ids;  // empty when absent

  std::size_t size() const { return positions.size(); }
  bool has_instance_ids() const { return !instance_ids.empty(); }
  std::vector<double> feature_row(std::size_t i) const;

  // Throws SchemaError when row counts disagree.
  void validate() const;
};

struct FourierPEConfig {
  int num_bands = 32;
  double max_frequency = 64.0;

  int output_dim() const { return 6 * num_bands; }
  bool valid() const { return num_bands >= 1 && max_frequency >= 1.0; }
};

// Farthest point sampling: first pick = start_index, each subsequent pick
// maximizes its minimum distance to the picked prefix (ties broken by lower
// index). Returns k indices in pick order.
// Throws std::invalid_argument when k or start_index is out of range.
std::vector<int> fps(const std::vector<Vec3>& points, int k, int start_index);

struct BallGroup {
  std::vector<int> indices;
  bool fallback = false;  // no point within radius; indices = {nearest}
};

// For each center, up to max_samples point indices with distance <= radius,
// lowest indices first. Centers with no neighbor in range get the single
// nearest point, flagged as fallback. Throws on an empty cloud.
std::vector<BallGroup> ball_query(const std::vector<Vec3>& centers,
                                  const PointCloud& cloud, double radius,
                                  int max_samples);

// The k nearest points to center, closest first (distance ties broken by
// lower index). Local-context selection for caption decoding. Throws when
// k is out of range.
std::vector<int> knn(const Vec3& center, const std::vector<Vec3>& points,
                     int k);

// Aggregates one group: positions are relative to the group's center vertex,
// features are the grouped points' feature rows. Must be pure.
using GroupAggregator = std::function<std::vector<double>(
    const std::vector<Vec3>& relative_positions,
    const std::vector<std::vector<double>>& features)>;

// Channel-wise maximum over the concatenation (relative position, feature);
// output dimension 3 + F. Permutation-invariant over group order.
GroupAggregator max_pool_aggregator();

// Ball-query grouping followed by per-group aggregation with positions
// expressed relative to each center. Output is one feature vector per
// center; throws when the aggregator's output dimension is inconsistent.
std::vector<std::vector<double>> set_abstraction(
    const std::vector<Vec3>& centers, const PointCloud& cloud, double radius,
    int max_samples, const GroupAggregator& aggregator);

// Fourier features: for each axis value x and band frequency f_b,
// sin(2*pi*f_b*x) and cos(2*pi*f_b*x), concatenated axis-major, band-minor
// (x bands first, then y, then z; per band sin before cos). Frequencies are
// geometrically spaced from 1 to max_frequency; a single band uses f = 1.
// Output length is config.output_dim() = 6 * num_bands.
std::vector<double> fourier_pe(const Vec3& position,
                               const FourierPEConfig& config);

// --- file formats ---------------------------------------------------------
//
// JSONL: one object per line, {"position": [x,y,z], "features": [...]} plus
// optional "instance_id". Binary (.bin, little-endian): uint32 N, uint32 F,
// then N rows of (3 + F) float32, then optionally N int32 instance ids
// (presence inferred from file size).

PointCloud load_point_cloud(const std::string& path);
void save_point_cloud(const PointCloud& cloud, const std::string& path);

}  // namespace dcap
