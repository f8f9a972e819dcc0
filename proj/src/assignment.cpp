#include "dcap/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcap {

double pair_cost(const Prediction& pred, const Instance& gt,
                 const SetLossWeights& weights) {
  if (gt.class_id < 0 ||
      gt.class_id + 1 >= static_cast<int>(pred.class_probs.size())) {
    throw std::invalid_argument("pair_cost: gt class out of range");
  }
  return weights.giou * (1.0 - giou3d(pred.box, gt.box)) +
         weights.cls * (1.0 - pred.class_probs[gt.class_id]) +
         weights.center * l1_distance(pred.box.center, gt.box.center) +
         weights.size * l1_distance(pred.box.size, gt.box.size);
}

namespace {

// Jonker-Volgenant shortest augmenting path solve of the square problem.
// Returns matched column per row and the dual potentials.
struct SquareSolve {
  std::vector<int> row_to_col;
  std::vector<double> u, v;
};

SquareSolve solve_square(const std::vector<std::vector<double>>& cost, int n) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[j] = row occupying column j (1-based)
  std::vector<int> way(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  SquareSolve out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.row_to_col[match[j] - 1] = j - 1;
  out.u.assign(n, 0.0);
  out.v.assign(n, 0.0);
  for (int i = 0; i < n; ++i) out.u[i] = u[i + 1];
  for (int j = 0; j < n; ++j) out.v[j] = v[j + 1];
  return out;
}

// Augmenting search over the admissible (zero reduced cost) graph. Rows
// already fixed by the lexicographic pass may not be displaced.
bool rematch(int row, const std::vector<std::vector<int>>& adj,
             std::vector<int>& col_owner, std::vector<int>& row_to_col,
             std::vector<char>& visited, int fixed_below) {
  for (int c : adj[row]) {
    if (visited[c]) continue;
    const int owner = col_owner[c];
    if (owner >= 0 && owner < fixed_below) continue;
    visited[c] = 1;
    if (owner == -1 ||
        rematch(owner, adj, col_owner, row_to_col, visited, fixed_below)) {
      col_owner[c] = row;
      row_to_col[row] = c;
      return true;
    }
  }
  return false;
}

}  // namespace

Assignment hungarian(const std::vector<std::vector<double>>& cost) {
  const int rows = static_cast<int>(cost.size());
  if (rows == 0) throw std::invalid_argument("hungarian: empty cost matrix");
  const int cols = static_cast<int>(cost.front().size());
  if (cols == 0) throw std::invalid_argument("hungarian: empty cost matrix");
  double max_abs = 0.0;
  for (const auto& row : cost) {
    if (static_cast<int>(row.size()) != cols) {
      throw std::invalid_argument("hungarian: ragged cost matrix");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("hungarian: non-finite cost entry");
      }
      max_abs = std::max(max_abs, std::abs(v));
    }
  }

  // pad to square with zero-cost dummy entries
  const int n = std::max(rows, cols);
  std::vector<std::vector<double>> padded(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) padded[i][j] = cost[i][j];
  }

  const SquareSolve solve = solve_square(padded, n);

  // Admissible graph: by complementary slackness every optimal assignment
  // uses only edges with zero reduced cost, and any perfect matching of
  // such edges is optimal. The tolerance absorbs dual round-off.
  const double tol = 1e-9 * std::max(1.0, max_abs);
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (padded[i][j] - solve.u[i] - solve.v[j] <= tol) adj[i].push_back(j);
    }
    for (int j = cols; j < n; ++j) {  // dummy columns after real ones
      if (padded[i][j] - solve.u[i] - solve.v[j] <= tol) adj[i].push_back(j);
    }
  }

  std::vector<int> row_to_col = solve.row_to_col;
  std::vector<int> col_owner(n, -1);
  for (int i = 0; i < n; ++i) col_owner[row_to_col[i]] = i;

  // Lexicographic pass: give each real row in order the smallest admissible
  // real column (an unmatched row, i.e. a dummy column, ranks after any real
  // one) that still leaves the rest perfectly matchable.
  for (int i = 0; i < rows; ++i) {
    const int current = row_to_col[i];
    for (int c : adj[i]) {
      if (c == current) break;
      if (c >= cols && current >= cols) break;  // dummies are interchangeable
      const int owner = col_owner[c];
      if (owner >= 0 && owner < i) continue;  // column pinned by a fixed row
      // tentatively take c for row i and try to rehome the displaced row
      col_owner[current] = -1;
      col_owner[c] = i;
      row_to_col[i] = c;
      std::vector<char> visited(n, 0);
      visited[c] = 1;
      if (owner == -1 ||
          rematch(owner, adj, col_owner, row_to_col, visited, i + 1)) {
        break;
      }
      col_owner[c] = owner;  // rollback
      col_owner[current] = i;
      row_to_col[i] = current;
    }
  }

  Assignment out;
  for (int i = 0; i < rows; ++i) {
    if (row_to_col[i] < cols) {
      out.pairs.emplace_back(i, row_to_col[i]);
    } else {
      out.unmatched_rows.push_back(i);
    }
  }
  for (int j = 0; j < cols; ++j) {
    if (col_owner[j] >= rows) out.unmatched_cols.push_back(j);
  }
  out.total_cost = 0.0;
  for (const auto& [r, c] : out.pairs) out.total_cost += cost[r][c];
  return out;
}

Assignment match_scene(const PredictionSet& preds, const InstanceSet& gts,
                       const SetLossWeights& weights) {
  if (preds.size() == 0) {
    throw std::invalid_argument("match_scene: at least one query required");
  }
  if (gts.size() == 0) {
    Assignment out;
    for (std::size_t q = 0; q < preds.size(); ++q) {
      out.unmatched_cols.push_back(static_cast<int>(q));
    }
    return out;
  }
  std::vector<std::vector<double>> cost(gts.size(),
                                        std::vector<double>(preds.size()));
  for (std::size_t r = 0; r < gts.size(); ++r) {
    for (std::size_t q = 0; q < preds.size(); ++q) {
      cost[r][q] = pair_cost(preds[q], gts[r], weights);
    }
  }
  return hungarian(cost);
}

SetLossBreakdown set_loss(const PredictionSet& preds, const InstanceSet& gts,
                          const Assignment& assignment,
                          const SetLossWeights& weights) {
  constexpr double kEps = 1e-9;
  SetLossBreakdown out;
  const std::size_t nq = preds.size();
  if (nq == 0) throw std::invalid_argument("set_loss: empty prediction set");

  std::vector<char> matched(nq, 0);
  for (const auto& [r, q] : assignment.pairs) {
    const Prediction& pred = preds[q];
    const Instance& gt = gts[r];
    out.giou += 1.0 - giou3d(pred.box, gt.box);
    out.center += l1_distance(pred.box.center, gt.box.center);
    out.size += l1_distance(pred.box.size, gt.box.size);
    out.cls += -std::log(std::max(kEps, pred.class_probs[gt.class_id]));
    matched[q] = 1;
  }
  if (!assignment.pairs.empty()) {
    const double m = static_cast<double>(assignment.pairs.size());
    out.giou /= m;
    out.center /= m;
    out.size /= m;
  }
  for (std::size_t q = 0; q < nq; ++q) {
    if (matched[q]) continue;
    out.cls += weights.no_object_weight *
               -std::log(std::max(kEps, preds[q].class_probs.back()));
  }
  out.cls /= static_cast<double>(nq);

  out.total = weights.giou * out.giou + weights.cls * out.cls +
              weights.center * out.center + weights.size * out.size;
  return out;
}

std::vector<std::optional<TokenSeq>> assign_captions(
    const std::vector<TokenSeq>& sentences, const Assignment& assignment,
    int num_queries) {
  std::vector<std::optional<TokenSeq>> out(num_queries);
  for (const auto& [instance, query] : assignment.pairs) {
    if (instance < 0 || instance >= static_cast<int>(sentences.size())) {
      throw std::invalid_argument("assign_captions: instance without a sentence");
    }
    if (query < 0 || query >= num_queries) {
      throw std::invalid_argument("assign_captions: query index out of range");
    }
    out[query] = sentences[instance];
  }
  return out;
}

double total_loss(double l_vote, const std::vector<double>& l_set_per_layer,
                  double l_cap, const TotalLossWeights& weights) {
  if (static_cast<int>(l_set_per_layer.size()) != weights.n_dec_layer) {
    throw std::invalid_argument(
        "total_loss: per-layer set losses must match n_dec_layer");
  }
  double set_sum = 0.0;
  for (double v : l_set_per_layer) set_sum += v;
  return weights.vote * l_vote + weights.set * set_sum + weights.caption * l_cap;
}

}  // namespace dcap
