#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dcap/pointset.hpp"
#include "dcap/scene.hpp"

namespace dcap {

// Pure per-point offset estimator (position, feature row) -> offset in
// meters. Stands in for the learned vote head; must be total and
// deterministic, and safe for concurrent calls.
using OffsetPredictor =
    std::function<Vec3(const Vec3& position, std::span<const double> feature)>;

inline OffsetPredictor zero_offset_predictor() {
  return [](const Vec3&, std::span<const double>) -> Vec3 {
    return {0.0, 0.0, 0.0};
  };
}

// Seed indices into the cloud, shifted query positions, and gathered
// per-query features.
struct VoteQuerySet {
  std::vector<int> seed_indices;
  std::vector<Vec3> positions;                // nq x 3
  std::vector<std::vector<double>> features;  // nq x F'
};

// votes[i] = positions[i] + predictor(positions[i], features[i]), for every
// point in the cloud.
std::vector<Vec3> predict_votes(const PointCloud& cloud,
                                const OffsetPredictor& predictor);

// Vote query construction: nq seeds by farthest point sampling (start 0),
// each shifted by its predicted offset, then features gathered at the
// shifted positions from the original cloud by set abstraction. The default
// query count is 256. Throws std::invalid_argument when nq is out of range.
VoteQuerySet build_vote_queries(const PointCloud& cloud,
                                const OffsetPredictor& predictor,
                                const GroupAggregator& aggregator,
                                int nq = 256, double gather_radius = 0.3,
                                int max_samples = 16);

// L1 vote regression loss, normalized by the total vote count:
//   (1/M) sum_i sum_j ||vote_i - cnt_j||_1 * 1{point i in instance j}
// Membership comes from cloud.instance_ids when present, otherwise from box
// containment (instances are disjoint, so at most one box contains a point).
// Background points contribute 0. Throws when votes and cloud sizes differ
// or a membership label references a missing instance.
double vote_loss(const std::vector<Vec3>& votes, const PointCloud& cloud,
                 const InstanceSet& instances);

}  // namespace dcap
