#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcap::test {

double monte_carlo_iou(const Box3D& a, const Box3D& b, std::uint64_t seed,
                       int samples) {
  Vec3 lo, hi;
  for (int axis = 0; axis < 3; ++axis) {
    lo[axis] = std::min(a.center[axis] - a.size[axis] * 0.5,
                        b.center[axis] - b.size[axis] * 0.5);
    hi[axis] = std::max(a.center[axis] + a.size[axis] * 0.5,
                        b.center[axis] + b.size[axis] * 0.5);
  }
  Rng rng(seed);
  long long in_a = 0, in_b = 0, in_both = 0;
  for (int s = 0; s < samples; ++s) {
    Vec3 p;
    for (int axis = 0; axis < 3; ++axis) {
      p[axis] = rng.uniform(lo[axis], hi[axis]);
    }
    const bool hit_a = a.contains(p);
    const bool hit_b = b.contains(p);
    in_a += hit_a;
    in_b += hit_b;
    in_both += hit_a && hit_b;
  }
  const long long in_union = in_a + in_b - in_both;
  if (in_union == 0) return 0.0;
  return static_cast<double>(in_both) / static_cast<double>(in_union);
}

namespace {

struct SearchState {
  const std::vector<std::vector<double>>* cost;
  int rows, cols, budget;
  std::vector<char> col_used;
  std::vector<std::pair<int, int>> current;
  double current_cost = 0.0;

  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::pair<int, int>> best_pairs;

  // enumerate maximal pair lists in lexicographic order; strict improvement
  // keeps the first (smallest) optimum
  void recurse(int row, int placed) {
    if (placed == budget) {
      if (!found || current_cost < best_cost) {
        found = true;
        best_cost = current_cost;
        best_pairs = current;
      }
      return;
    }
    if (row == rows) return;
    for (int c = 0; c < cols; ++c) {
      if (col_used[c]) continue;
      col_used[c] = 1;
      current.emplace_back(row, c);
      current_cost += (*cost)[row][c];
      recurse(row + 1, placed + 1);
      current_cost -= (*cost)[row][c];
      current.pop_back();
      col_used[c] = 0;
    }
    if (rows - row - 1 >= budget - placed) {
      recurse(row + 1, placed);  // leave this row unmatched
    }
  }
};

}  // namespace

BruteForceAssignment brute_force_assignment(
    const std::vector<std::vector<double>>& cost) {
  SearchState state;
  state.cost = &cost;
  state.rows = static_cast<int>(cost.size());
  state.cols = static_cast<int>(cost.front().size());
  state.budget = std::min(state.rows, state.cols);
  state.col_used.assign(state.cols, 0);
  state.recurse(0, 0);

  BruteForceAssignment out;
  out.pairs = state.best_pairs;
  out.total_cost = 0.0;
  for (const auto& [r, c] : out.pairs) out.total_cost += cost[r][c];
  return out;
}

std::vector<int> reference_nms(const std::vector<Box3D>& boxes,
                               const std::vector<double>& scores,
                               double iou_threshold) {
  std::vector<int> remaining(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) remaining[i] = static_cast<int>(i);
  std::vector<int> kept;
  while (!remaining.empty()) {
    // highest score, ties to the lower index
    int best = remaining.front();
    for (int idx : remaining) {
      if (scores[idx] > scores[best]) best = idx;
    }
    kept.push_back(best);
    std::vector<int> next;
    for (int idx : remaining) {
      if (idx == best) continue;
      if (iou3d(boxes[idx], boxes[best]) > iou_threshold) continue;
      next.push_back(idx);
    }
    remaining = std::move(next);
  }
  return kept;
}

namespace {

void enumerate_rec(const TokenScorer& scorer, int vocab, int eos,
                   int max_length, SequenceLogProb& prefix,
                   std::vector<SequenceLogProb>& out) {
  const std::vector<double> scores = scorer(prefix.tokens);
  for (int t = 0; t < vocab; ++t) {
    prefix.tokens.push_back(t);
    prefix.log_probs.push_back(scores[t]);
    if (t == eos || static_cast<int>(prefix.tokens.size()) == max_length) {
      out.push_back(prefix);
    } else {
      enumerate_rec(scorer, vocab, eos, max_length, prefix, out);
    }
    prefix.tokens.pop_back();
    prefix.log_probs.pop_back();
  }
}

}  // namespace

std::vector<SequenceLogProb> enumerate_sequences(const TokenScorer& scorer,
                                                 int vocab, int eos,
                                                 int max_length) {
  std::vector<SequenceLogProb> out;
  SequenceLogProb prefix;
  enumerate_rec(scorer, vocab, eos, max_length, prefix, out);
  std::sort(out.begin(), out.end(),
            [](const SequenceLogProb& a, const SequenceLogProb& b) {
              const double ta = a.total_log_prob(), tb = b.total_log_prob();
              if (ta != tb) return ta > tb;
              return a.tokens < b.tokens;
            });
  return out;
}

TokenScorer random_table_scorer(std::uint64_t seed, int vocab) {
  return [seed, vocab](const std::vector<int>& prefix) {
    // stream derived from the prefix so the table is a pure function of it
    std::uint64_t state = seed;
    for (int t : prefix) {
      Rng mixer(state ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(t) + 2)));
      state = mixer.next_u64();
    }
    Rng rng(state);
    std::vector<double> weights(vocab);
    double sum = 0.0;
    for (int t = 0; t < vocab; ++t) {
      weights[t] = rng.uniform() + 0.05;
      sum += weights[t];
    }
    std::vector<double> log_probs(vocab);
    for (int t = 0; t < vocab; ++t) {
      log_probs[t] = std::log(weights[t] / sum);
    }
    return log_probs;
  };
}

}  // namespace dcap::test
