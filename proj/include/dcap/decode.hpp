#pragma once

#include <functional>
#include <vector>

#include "dcap/caploss.hpp"

namespace dcap {

// Next-token scorer: prefix -> log-probability vector over the vocabulary.
// Must be pure and deterministic with a fixed vocabulary size; the visual
// context (query and surroundings) is carried inside the callable. Vectors
// must be normalized: log-sum-exp within 1e-6 of zero.
using TokenScorer =
    std::function<std::vector<double>(const std::vector<int>& prefix)>;

struct DecodeConfig {
  int beam_size = 5;
  int max_length = 32;
  int eos_token = 0;

  bool valid() const { return beam_size >= 1 && max_length >= 1; }
};

// Repeatedly takes the argmax token (ties to the lowest id) until eos or
// max_length; the eos token is included when emitted. Throws when the
// scorer's output is non-normalized beyond tolerance.
SequenceLogProb greedy(const TokenScorer& scorer, const DecodeConfig& config);

// Beam search ranked by the raw sum of token log-probs (no length
// normalization). Finished hypotheses retire to a completed pool; the top k
// completed are returned, padded with the best unfinished beams at
// max_length. Ties break by lexicographic token order. Returns fewer than k
// sequences only when the whole sequence space is smaller than k.
std::vector<SequenceLogProb> beam_search(const TokenScorer& scorer,
                                         const DecodeConfig& config);

}  // namespace dcap
