#include "dcap/votequery.hpp"

#include <stdexcept>
#include <string>

#include "dcap/error.hpp"

namespace dcap {

std::vector<Vec3> predict_votes(const PointCloud& cloud,
                                const OffsetPredictor& predictor) {
  cloud.validate();
  if (cloud.size() == 0) {
    throw std::invalid_argument("predict_votes: empty cloud");
  }
  std::vector<Vec3> votes(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::span<const double> feat(
        cloud.features.data() + i * cloud.feature_dim,
        static_cast<std::size_t>(cloud.feature_dim));
    votes[i] = cloud.positions[i] + predictor(cloud.positions[i], feat);
  }
  return votes;
}

VoteQuerySet build_vote_queries(const PointCloud& cloud,
                                const OffsetPredictor& predictor,
                                const GroupAggregator& aggregator, int nq,
                                double gather_radius, int max_samples) {
  cloud.validate();
  if (nq < 1 || static_cast<std::size_t>(nq) > cloud.size()) {
    throw std::invalid_argument("build_vote_queries: nq out of range");
  }
  const std::vector<Vec3> votes = predict_votes(cloud, predictor);

  VoteQuerySet out;
  out.seed_indices = fps(cloud.positions, nq, 0);
  out.positions.reserve(nq);
  for (int seed : out.seed_indices) out.positions.push_back(votes[seed]);
  out.features =
      set_abstraction(out.positions, cloud, gather_radius, max_samples, aggregator);
  return out;
}

namespace {

// Owning instance index for point i, or -1 for background.
int membership(const PointCloud& cloud, const InstanceSet& instances,
               std::size_t i) {
  if (cloud.has_instance_ids()) {
    const std::int32_t label = cloud.instance_ids[i];
    if (label < 0) return -1;
    const int idx = instances.index_of(label);
    if (idx < 0) {
      throw std::invalid_argument(
          "vote_loss: point labeled with missing instance id " +
          std::to_string(label));
    }
    return idx;
  }
  // containment fallback; instances are disjoint so first hit wins
  for (std::size_t j = 0; j < instances.size(); ++j) {
    if (instances[j].box.contains(cloud.positions[i])) {
      return static_cast<int>(j);
    }
  }
  return -1;
}

}  // namespace

double vote_loss(const std::vector<Vec3>& votes, const PointCloud& cloud,
                 const InstanceSet& instances) {
  cloud.validate();
  if (votes.size() != cloud.size()) {
    throw std::invalid_argument("vote_loss: votes row count != cloud size");
  }
  if (votes.empty()) throw std::invalid_argument("vote_loss: empty cloud");

  double total = 0.0;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const int j = membership(cloud, instances, i);
    if (j < 0) continue;
    total += l1_distance(votes[i], instances[j].center());
  }
  return total / static_cast<double>(votes.size());
}

}  // namespace dcap
