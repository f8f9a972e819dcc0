#include "dcap/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcap {

namespace {

// log-sum-exp must sit within 1e-6 of zero, all entries finite
void require_normalized(const std::vector<double>& log_probs) {
  if (log_probs.empty()) {
    throw std::invalid_argument("decode: scorer returned an empty vector");
  }
  double max_lp = -std::numeric_limits<double>::infinity();
  for (double lp : log_probs) {
    if (std::isnan(lp) || lp == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("decode: scorer returned non-finite log-prob");
    }
    max_lp = std::max(max_lp, lp);
  }
  double sum = 0.0;
  for (double lp : log_probs) sum += std::exp(lp - max_lp);
  const double lse = max_lp + std::log(sum);
  if (std::abs(lse) > 1e-6) {
    throw std::invalid_argument("decode: scorer output is not normalized");
  }
}

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<double> log_probs;
  double total = 0.0;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.total != b.total) return a.total > b.total;
  return a.tokens < b.tokens;
}

SequenceLogProb to_sequence(Hypothesis&& h) {
  return SequenceLogProb{std::move(h.tokens), std::move(h.log_probs)};
}

}  // namespace

SequenceLogProb greedy(const TokenScorer& scorer, const DecodeConfig& config) {
  if (!config.valid()) throw std::invalid_argument("greedy: invalid config");
  SequenceLogProb out;
  while (static_cast<int>(out.tokens.size()) < config.max_length) {
    const std::vector<double> scores = scorer(out.tokens);
    require_normalized(scores);
    int best = 0;
    for (int t = 1; t < static_cast<int>(scores.size()); ++t) {
      if (scores[t] > scores[best]) best = t;  // ties keep the lowest id
    }
    out.tokens.push_back(best);
    out.log_probs.push_back(scores[best]);
    if (best == config.eos_token) break;
  }
  return out;
}

std::vector<SequenceLogProb> beam_search(const TokenScorer& scorer,
                                         const DecodeConfig& config) {
  if (!config.valid()) throw std::invalid_argument("beam_search: invalid config");
  const int k = config.beam_size;

  std::vector<Hypothesis> active{Hypothesis{}};
  std::vector<Hypothesis> completed;
  std::size_t vocab = 0;

  for (int step = 0; step < config.max_length && !active.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    candidates.reserve(active.size() * std::max<std::size_t>(vocab, 1));
    for (const Hypothesis& beam : active) {
      const std::vector<double> scores = scorer(beam.tokens);
      require_normalized(scores);
      if (vocab == 0) {
        vocab = scores.size();
      } else if (scores.size() != vocab) {
        throw std::invalid_argument("beam_search: vocabulary size changed");
      }
      for (int t = 0; t < static_cast<int>(scores.size()); ++t) {
        Hypothesis next = beam;
        next.tokens.push_back(t);
        next.log_probs.push_back(scores[t]);
        next.total += scores[t];
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), better);
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);

    active.clear();
    for (Hypothesis& cand : candidates) {
      if (cand.tokens.back() == config.eos_token) {
        completed.push_back(std::move(cand));  // retire
      } else {
        active.push_back(std::move(cand));
      }
    }
  }

  // top-k completed, padded with the best unfinished beams
  std::sort(completed.begin(), completed.end(), better);
  std::sort(active.begin(), active.end(), better);
  std::vector<Hypothesis> chosen;
  for (Hypothesis& h : completed) {
    if (static_cast<int>(chosen.size()) >= k) break;
    chosen.push_back(std::move(h));
  }
  for (Hypothesis& h : active) {
    if (static_cast<int>(chosen.size()) >= k) break;
    chosen.push_back(std::move(h));
  }
  std::sort(chosen.begin(), chosen.end(), better);

  std::vector<SequenceLogProb> out;
  out.reserve(chosen.size());
  for (Hypothesis& h : chosen) out.push_back(to_sequence(std::move(h)));
  return out;
}

}  // namespace dcap
