#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dcap/scene.hpp"
#include "dcap/textmetrics.hpp"

namespace dcap {

// Weights of the detection set loss and its matching cost.
// no_object_weight down-weights the "no object" cross-entropy of unmatched
// queries (convention carried over from set-prediction detectors).
struct SetLossWeights {
  double giou = 10.0;
  double cls = 1.0;
  double center = 5.0;
  double size = 1.0;
  double no_object_weight = 0.1;
};

struct TotalLossWeights {
  double vote = 10.0;
  double set = 1.0;
  double caption = 5.0;
  int n_dec_layer = 8;
};

// One-to-one matching result. Pairs are (row, column) into the cost matrix,
// sorted by row; for match_scene rows are instances and columns queries.
struct Assignment {
  std::vector<std::pair<int, int>> pairs;
  std::vector<int> unmatched_rows;
  std::vector<int> unmatched_cols;
  double total_cost = 0.0;

  // column matched to `row`, or -1
  int col_of(int row) const {
    for (const auto& [r, c] : pairs) {
      if (r == row) return c;
    }
    return -1;
  }
};

// Matching cost of one (prediction, instance) pair:
//   a1*(1 - giou) + a2*(1 - p[gt class]) + a3*||c_pred - c_gt||_1
//     + a4*||s_pred - s_gt||_1
// Throws std::invalid_argument when the gt class is outside the prediction's
// distribution.
double pair_cost(const Prediction& pred, const Instance& gt,
                 const SetLossWeights& weights);

// Minimum-total-cost assignment of min(R, Q) pairs for an R x Q matrix,
// with ties resolved to the lexicographically smallest pair list among
// optima. Throws on non-finite entries or an empty matrix.
Assignment hungarian(const std::vector<std::vector<double>>& cost);

// Hungarian over the pair_cost matrix (rows = instances, cols = queries).
Assignment match_scene(const PredictionSet& preds, const InstanceSet& gts,
                       const SetLossWeights& weights);

struct SetLossBreakdown {
  double giou = 0.0;
  double cls = 0.0;
  double center = 0.0;
  double size = 0.0;
  double total = 0.0;
};

// Component means over matched pairs (giou/center/size) plus cross-entropy
// over all queries (gt class for matched, down-weighted "no object" for
// unmatched). Probabilities are clamped at 1e-9 before the log.
SetLossBreakdown set_loss(const PredictionSet& preds, const InstanceSet& gts,
                          const Assignment& assignment,
                          const SetLossWeights& weights);

// Transfers one sampled sentence per instance to its matched query;
// unmatched queries get nothing. sentences[i] belongs to instance i.
std::vector<std::optional<TokenSeq>> assign_captions(
    const std::vector<TokenSeq>& sentences, const Assignment& assignment,
    int num_queries);

// beta1 * vote + beta2 * sum(per-layer set losses) + beta3 * caption.
// Throws when the per-layer list length differs from n_dec_layer.
double total_loss(double l_vote, const std::vector<double>& l_set_per_layer,
                  double l_cap, const TotalLossWeights& weights);

}  // namespace dcap
