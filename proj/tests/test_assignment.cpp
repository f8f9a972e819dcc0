#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcap/assignment.hpp"
#include "dcap/rng.hpp"
#include "support/oracles.hpp"

using namespace dcap;

namespace {

Prediction make_pred(const Box3D& box, int klass, int num_classes,
                     double prob = 1.0) {
  Prediction p;
  p.box = box;
  p.class_probs.assign(num_classes + 1, (1.0 - prob) / num_classes);
  p.class_probs[klass] = prob;
  return p;
}

Instance make_gt(const Box3D& box, int klass, std::int32_t id = 0) {
  Instance inst;
  inst.id = id;
  inst.box = box;
  inst.class_id = klass;
  inst.captions = {"a thing"};
  return inst;
}

std::vector<std::vector<double>> random_cost(Rng& rng, int rows, int cols) {
  std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
  for (auto& row : cost) {
    for (double& v : row) v = rng.uniform(0.0, 10.0);
  }
  return cost;
}

}  // namespace

TEST_CASE("pair_cost fixtures") {
  const Box3D unit{{0, 0, 0}, {1, 1, 1}};
  SetLossWeights w;  // defaults 10, 1, 5, 1

  // identical box, all mass on the gt class
  CHECK(pair_cost(make_pred(unit, 3, 18), make_gt(unit, 3), w) ==
        doctest::Approx(0.0).epsilon(1e-12));

  // identical box, uniform distribution over the 19 slots
  Prediction uniform;
  uniform.box = unit;
  uniform.class_probs.assign(19, 1.0 / 19.0);
  CHECK(pair_cost(uniform, make_gt(unit, 4), w) ==
        doctest::Approx(1.0 - 1.0 / 19.0).epsilon(1e-12));

  CHECK_THROWS_AS(pair_cost(make_pred(unit, 0, 18), make_gt(unit, 18), w),
                  std::invalid_argument);
}

TEST_CASE("pair_cost default weights worked example") {
  // giou 0.5, class prob 0.8, center L1 0.2, size L1 0.1 -> 6.3; synthesise
  // the geometric terms directly through the formula pieces
  SetLossWeights w;
  const double cost = w.giou * (1.0 - 0.5) + w.cls * (1.0 - 0.8) +
                      w.center * 0.2 + w.size * 0.1;
  CHECK(cost == doctest::Approx(6.3).epsilon(1e-12));
}

TEST_CASE("hungarian identity on a diagonal-dominant matrix") {
  const Assignment a = hungarian({{0, 9, 9}, {9, 0, 9}, {9, 9, 0}});
  CHECK(a.total_cost == 0.0);
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {2, 2}});
  CHECK(a.unmatched_cols.empty());
}

TEST_CASE("hungarian worked 3x3 example") {
  const Assignment a = hungarian({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
  CHECK(a.total_cost == doctest::Approx(5.0));
  CHECK(a.pairs == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {2, 2}});
}

TEST_CASE("hungarian rectangular 2x3 equals brute force") {
  const std::vector<std::vector<double>> cost = {{3, 1, 2}, {2, 4, 6}};
  const Assignment a = hungarian(cost);
  const auto oracle = dcap::test::brute_force_assignment(cost);
  CHECK(a.total_cost == oracle.total_cost);
  CHECK(a.pairs == oracle.pairs);
  CHECK(a.pairs.size() == 2);
}

TEST_CASE("hungarian equals the exhaustive oracle on random matrices") {
  Rng rng(555);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform_int(6));
    const int cols = 1 + static_cast<int>(rng.uniform_int(6));
    const auto cost = random_cost(rng, rows, cols);
    const Assignment a = hungarian(cost);
    const auto oracle = dcap::test::brute_force_assignment(cost);
    CHECK(a.total_cost == oracle.total_cost);
    CHECK(a.pairs == oracle.pairs);
  }
}

TEST_CASE("hungarian tie-break is the lexicographically smallest pair list") {
  Rng rng(777);
  for (int trial = 0; trial < 300; ++trial) {
    const int rows = 1 + static_cast<int>(rng.uniform_int(5));
    const int cols = 1 + static_cast<int>(rng.uniform_int(5));
    // small integer costs force plenty of ties
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
    for (auto& row : cost) {
      for (double& v : row) v = static_cast<double>(rng.uniform_int(3));
    }
    const Assignment a = hungarian(cost);
    const auto oracle = dcap::test::brute_force_assignment(cost);
    CHECK(a.total_cost == oracle.total_cost);
    CHECK(a.pairs == oracle.pairs);
  }
}

TEST_CASE("hungarian invariant under row and column shifts") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto cost = random_cost(rng, 5, 5);
    const Assignment base = hungarian(cost);
    const int row = static_cast<int>(rng.uniform_int(5));
    const int col = static_cast<int>(rng.uniform_int(5));
    const double shift = rng.uniform(-3.0, 3.0);
    for (double& v : cost[row]) v += shift;
    for (auto& r : cost) r[col] += shift;
    CHECK(hungarian(cost).pairs == base.pairs);
  }
}

TEST_CASE("hungarian input validation") {
  CHECK_THROWS_AS(hungarian({}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian({{1.0, std::nan("")}}), std::invalid_argument);
  CHECK_THROWS_AS(hungarian({{1.0}, {1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("match_scene single pair and cardinality") {
  const Box3D unit{{0, 0, 0}, {1, 1, 1}};
  SetLossWeights w;

  PredictionSet preds;
  preds.predictions = {make_pred(unit, 0, 3)};
  InstanceSet gts;
  gts.instances = {make_gt(unit, 0)};
  const Assignment single = match_scene(preds, gts, w);
  CHECK(single.pairs == std::vector<std::pair<int, int>>{{0, 0}});

  // more instances than queries: exactly one pair per query
  gts.instances.push_back(make_gt(Box3D{{3, 0, 0}, {1, 1, 1}}, 1, 1));
  gts.instances.push_back(make_gt(Box3D{{6, 0, 0}, {1, 1, 1}}, 2, 2));
  const Assignment more = match_scene(preds, gts, w);
  CHECK(more.pairs.size() == 1);
  CHECK(more.unmatched_rows.size() == 2);

  CHECK_THROWS_AS(match_scene(PredictionSet{}, gts, w), std::invalid_argument);
}

TEST_CASE("match_scene recovers perturbed copies and ignores instance order") {
  Rng rng(91);
  SetLossWeights w;
  InstanceSet gts;
  PredictionSet preds;
  for (int i = 0; i < 6; ++i) {
    Box3D box{{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-1, 1)},
              {rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4), rng.uniform(0.6, 1.4)}};
    gts.instances.push_back(make_gt(box, i % 3, i));
    Box3D nudged = box;
    for (int axis = 0; axis < 3; ++axis) {
      nudged.center[axis] += rng.uniform(-0.03, 0.03);
    }
    preds.predictions.push_back(make_pred(nudged, i % 3, 3));
  }
  const Assignment a = match_scene(preds, gts, w);
  for (const auto& [inst, query] : a.pairs) CHECK(inst == query);

  // permute instances; the pairing must follow the content
  InstanceSet permuted;
  const std::vector<int> order = {4, 2, 0, 5, 1, 3};
  for (int idx : order) permuted.instances.push_back(gts[idx]);
  const Assignment b = match_scene(preds, permuted, w);
  for (const auto& [inst, query] : b.pairs) CHECK(order[inst] == query);
}

TEST_CASE("set_loss perfect predictions give zero and components match") {
  const int C = 4;
  SetLossWeights w;
  InstanceSet gts;
  gts.instances = {make_gt(Box3D{{0, 0, 0}, {1, 1, 1}}, 1, 0),
                   make_gt(Box3D{{3, 0, 0}, {1, 1, 1}}, 2, 1)};
  PredictionSet preds;
  preds.predictions = {make_pred(gts[0].box, 1, C),
                       make_pred(gts[1].box, 2, C)};
  // two decoy queries with all mass on "no object"
  Prediction decoy;
  decoy.box = Box3D{{9, 9, 1}, {1, 1, 1}};
  decoy.class_probs.assign(C + 1, 0.0);
  decoy.class_probs.back() = 1.0;
  preds.predictions.push_back(decoy);
  preds.predictions.push_back(decoy);

  const Assignment a = match_scene(preds, gts, w);
  const SetLossBreakdown loss = set_loss(preds, gts, a, w);
  CHECK(loss.giou == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loss.center == doctest::Approx(0.0));
  CHECK(loss.size == doctest::Approx(0.0));
  CHECK(loss.cls == doctest::Approx(0.0));
  CHECK(loss.total == doctest::Approx(0.0));
}

TEST_CASE("set_loss with no instances reduces to the no-object term") {
  const int C = 3;
  SetLossWeights w;
  PredictionSet preds;
  Prediction p;
  p.box = Box3D{{0, 0, 0}, {1, 1, 1}};
  p.class_probs.assign(C + 1, 0.0);
  p.class_probs.back() = 0.5;
  p.class_probs[0] = 0.5;
  preds.predictions = {p, p};

  const Assignment empty = match_scene(preds, InstanceSet{}, w);
  CHECK(empty.pairs.empty());
  const SetLossBreakdown loss = set_loss(preds, InstanceSet{}, empty, w);
  CHECK(loss.giou == 0.0);
  CHECK(loss.center == 0.0);
  CHECK(loss.size == 0.0);
  // per query: 0.1 * -ln(0.5), averaged over 2 queries
  CHECK(loss.cls == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-12));
  CHECK(loss.total == doctest::Approx(w.cls * loss.cls));
}

TEST_CASE("set_loss clamps zero probabilities instead of failing") {
  const int C = 2;
  SetLossWeights w;
  InstanceSet gts;
  gts.instances = {make_gt(Box3D{{0, 0, 0}, {1, 1, 1}}, 0, 0)};
  PredictionSet preds;
  Prediction p;
  p.box = gts[0].box;
  p.class_probs = {0.0, 1.0, 0.0};  // zero mass on the gt class
  preds.predictions = {p};
  const Assignment a = match_scene(preds, gts, w);
  const SetLossBreakdown loss = set_loss(preds, gts, a, w);
  CHECK(std::isfinite(loss.total));
  CHECK(loss.cls == doctest::Approx(-std::log(1e-9)).epsilon(1e-9));
}

TEST_CASE("set_loss total is linear in each alpha") {
  Rng rng(64);
  const int C = 5;
  InstanceSet gts;
  PredictionSet preds;
  for (int i = 0; i < 4; ++i) {
    Box3D box{{rng.uniform(-3, 3), rng.uniform(-3, 3), 0},
              {rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)}};
    gts.instances.push_back(make_gt(box, i % C, i));
    Box3D nudged = box;
    nudged.center[0] += rng.uniform(-0.2, 0.2);
    preds.predictions.push_back(make_pred(nudged, (i + 1) % C, C, 0.7));
  }
  SetLossWeights w;
  const Assignment a = match_scene(preds, gts, w);
  const SetLossBreakdown base = set_loss(preds, gts, a, w);

  SetLossWeights doubled = w;
  doubled.giou *= 2.0;
  const SetLossBreakdown after = set_loss(preds, gts, a, doubled);
  CHECK(after.total - base.total ==
        doctest::Approx(w.giou * base.giou).epsilon(1e-9));
  CHECK(after.giou == doctest::Approx(base.giou));  // component unchanged
}

TEST_CASE("assign_captions transfers matched sentences only") {
  Assignment a;
  a.pairs = {{0, 5}, {1, 2}, {2, 9}};
  const std::vector<TokenSeq> sentences = {{"first"}, {"second"}, {"third"}};
  const auto targets = assign_captions(sentences, a, 12);
  int set_count = 0;
  for (const auto& t : targets) set_count += t.has_value();
  CHECK(set_count == 3);
  CHECK(targets[5].value() == TokenSeq{"first"});
  CHECK(targets[2].value() == TokenSeq{"second"});
  CHECK(targets[9].value() == TokenSeq{"third"});
  CHECK_FALSE(targets[0].has_value());

  CHECK(assign_captions({}, Assignment{}, 4).size() == 4);
  Assignment bad;
  bad.pairs = {{3, 0}};
  CHECK_THROWS_AS(assign_captions(sentences, bad, 4), std::invalid_argument);
}

TEST_CASE("total_loss composition") {
  TotalLossWeights w;  // 10, 1, 5, 8 layers
  CHECK(total_loss(0, std::vector<double>(8, 0.0), 0, w) == 0.0);
  CHECK(total_loss(1.0, std::vector<double>(8, 0.5), 2.0, w) ==
        doctest::Approx(24.0));
  TotalLossWeights proj;
  proj.vote = 0;
  proj.set = 1;
  proj.caption = 0;
  CHECK(total_loss(7.0, std::vector<double>(8, 0.25), 9.0, proj) ==
        doctest::Approx(2.0));
  CHECK_THROWS_AS(total_loss(0, std::vector<double>(7, 0.0), 0, w),
                  std::invalid_argument);
}
