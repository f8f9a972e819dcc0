#include "dcap/caploss.hpp"

#include <cmath>
#include <stdexcept>

namespace dcap {

namespace {

void require_consistent(const SequenceLogProb& seq) {
  if (seq.tokens.size() != seq.log_probs.size()) {
    throw std::invalid_argument("sequence tokens/log_probs length mismatch");
  }
  for (double lp : seq.log_probs) {
    if (!std::isfinite(lp)) {
      throw std::invalid_argument("sequence log-probabilities must be finite");
    }
  }
}

}  // namespace

double mle_loss(const SequenceLogProb& seq) {
  require_consistent(seq);
  if (seq.tokens.empty()) {
    throw std::invalid_argument("mle_loss: empty sequence");
  }
  return -seq.total_log_prob();
}

double scst_loss(const std::vector<SequenceLogProb>& beams,
                 const std::vector<double>& rewards, double baseline_reward) {
  if (beams.empty()) throw std::invalid_argument("scst_loss: no beams");
  if (beams.size() != rewards.size()) {
    throw std::invalid_argument("scst_loss: rewards count mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < beams.size(); ++i) {
    require_consistent(beams[i]);
    if (beams[i].tokens.empty()) {
      throw std::invalid_argument("scst_loss: zero-length beam");
    }
    const double advantage = rewards[i] - baseline_reward;
    const double normalized =
        beams[i].total_log_prob() / static_cast<double>(beams[i].tokens.size());
    loss -= advantage * normalized;
  }
  return loss;
}

}  // namespace dcap
