#pragma once

#include <vector>

namespace dcap {

// A decoded or annotated sequence with per-token natural-log probabilities.
struct SequenceLogProb {
  std::vector<int> tokens;
  std::vector<double> log_probs;

  double total_log_prob() const {
    double s = 0.0;
    for (double lp : log_probs) s += lp;
    return s;
  }
};

// Word-level cross-entropy: -sum_t log p(token_t). Throws on an empty
// sequence or mismatched token/log-prob lengths.
double mle_loss(const SequenceLogProb& seq);

// Self-critical sequence loss over k beams:
//   -sum_i (reward_i - baseline) * (1/|c_i|) * sum_t log p(token_t of beam i)
// The per-beam log probability is normalized by caption length. Throws on
// empty beam lists, zero-length beams, or reward count mismatch.
double scst_loss(const std::vector<SequenceLogProb>& beams,
                 const std::vector<double>& rewards, double baseline_reward);

}  // namespace dcap
