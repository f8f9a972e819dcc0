#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dcap/caploss.hpp"
#include "dcap/rng.hpp"

using namespace dcap;

TEST_CASE("mle_loss fixtures") {
  CHECK(mle_loss({{1, 2, 3}, {0.0, 0.0, 0.0}}) == 0.0);
  // two tokens at probability 0.5 each
  const double half = std::log(0.5);
  CHECK(mle_loss({{4, 7}, {half, half}}) ==
        doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(mle_loss({{}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(mle_loss({{1}, {}}), std::invalid_argument);
}

TEST_CASE("mle_loss is additive over concatenation") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    SequenceLogProb a, b, joined;
    const int na = 1 + static_cast<int>(rng.uniform_int(6));
    const int nb = 1 + static_cast<int>(rng.uniform_int(6));
    for (int i = 0; i < na + nb; ++i) {
      const double lp = std::log(rng.uniform(0.05, 1.0));
      SequenceLogProb& target = i < na ? a : b;
      target.tokens.push_back(i);
      target.log_probs.push_back(lp);
      joined.tokens.push_back(i);
      joined.log_probs.push_back(lp);
    }
    CHECK(mle_loss(joined) ==
          doctest::Approx(mle_loss(a) + mle_loss(b)).epsilon(1e-12));
  }
}

TEST_CASE("scst_loss fixtures") {
  // rewards equal to the baseline zero out the loss exactly
  const SequenceLogProb beam{{1, 2}, {-0.3, -0.7}};
  CHECK(scst_loss({beam, beam}, {2.5, 2.5}, 2.5) == 0.0);

  // one beam, advantage 1, log-probs -1 and -3: -(1) * (-4/2) = 2
  CHECK(scst_loss({{{5, 6}, {-1.0, -3.0}}}, {3.0}, 2.0) ==
        doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(scst_loss({}, {}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scst_loss({{{}, {}}}, {1.0}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scst_loss({beam}, {1.0, 2.0}, 0.0), std::invalid_argument);
}

TEST_CASE("scst_loss length normalization ignores token repetition") {
  const SequenceLogProb once{{3, 4}, {-0.5, -1.5}};
  const SequenceLogProb twice{{3, 4, 3, 4}, {-0.5, -1.5, -0.5, -1.5}};
  CHECK(scst_loss({once}, {1.0}, 0.0) ==
        doctest::Approx(scst_loss({twice}, {1.0}, 0.0)).epsilon(1e-12));
}

TEST_CASE("scst_loss is linear in the advantage") {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SequenceLogProb> beams;
    std::vector<double> rewards;
    const int k = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < k; ++i) {
      SequenceLogProb beam;
      const int len = 1 + static_cast<int>(rng.uniform_int(6));
      for (int t = 0; t < len; ++t) {
        beam.tokens.push_back(t);
        beam.log_probs.push_back(std::log(rng.uniform(0.05, 1.0)));
      }
      beams.push_back(std::move(beam));
      rewards.push_back(rng.uniform(0.0, 4.0));
    }
    const double baseline = rng.uniform(0.0, 4.0);
    const double base = scst_loss(beams, rewards, baseline);

    // scaling every advantage by 3 scales the loss by 3
    std::vector<double> scaled(rewards.size());
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      scaled[i] = baseline + 3.0 * (rewards[i] - baseline);
    }
    CHECK(scst_loss(beams, scaled, baseline) ==
          doctest::Approx(3.0 * base).epsilon(1e-9));
  }
}

TEST_CASE("scst_loss sign pushes up rewarded beams") {
  // reward above baseline with negative log-probs: positive loss under
  // minimization raises the beam's probability
  const SequenceLogProb beam{{1, 2, 3}, {-0.2, -0.4, -0.9}};
  CHECK(scst_loss({beam}, {1.0}, 0.0) > 0.0);
  CHECK(scst_loss({beam}, {0.0}, 1.0) < 0.0);
}
