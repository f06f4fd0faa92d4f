#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "abm/model.hpp"
#include "abm/rollout.hpp"
#include "support/oracle_model.hpp"

namespace abm {
namespace {

GridState at(Cell agent, Cell adversary) {
  GridState s;
  s.agent = agent;
  s.adversary = adversary;
  s.goal = {7, 0};
  s.fuels = {{{0, 7}, false}, {{7, 7}, false}, {{4, 0}, false}};
  return s;
}

std::vector<Transition> random_transitions(std::size_t n_episodes, std::uint64_t seed,
                                           EnvConfig cfg = {}) {
  return transitions_from(collect_random_policy(cfg, n_episodes, seed));
}

double prob_of(const CellDistribution& d, Cell c) {
  double p = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    if (d.cells[i] == c) p += d.probs[i];
  return p;
}

TEST(Displacement, RejectsJumps) {
  EXPECT_EQ(displacement({2, 2}, {3, 2}), Move::PlusX);
  EXPECT_EQ(displacement({2, 2}, {2, 2}), Move::Stay);
  EXPECT_THROW(displacement({2, 2}, {4, 2}), DataError);
  EXPECT_THROW(displacement({2, 2}, {3, 3}), DataError);
}

TEST(Contexts, ProfilesAndRanges) {
  EXPECT_EQ(boundary_profile(8, {0, 0}), 1 | 4);
  EXPECT_EQ(boundary_profile(8, {7, 7}), 2 | 8);
  EXPECT_EQ(boundary_profile(8, {3, 4}), 0);
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      for (Action a : kActions) {
        const int c = agent_context(8, {x, y}, a);
        EXPECT_GE(c, 0);
        EXPECT_LT(c, kAgentContexts);
      }
      const int c = adversary_context(8, {x, y}, {7 - x, y});
      EXPECT_GE(c, 0);
      EXPECT_LT(c, kAdversaryContexts);
    }
}

TEST(Fit, EmptyInputIsADataError) {
  std::vector<Transition> none;
  EXPECT_THROW(fit_ensemble(none, 5, 1.0, 8, 1), DataError);
}

TEST(Fit, DeterministicInSeedAndSized) {
  const auto data = random_transitions(50, 3);
  const EnsembleModel a = fit_ensemble(data, 5, 1.0, 8, 11);
  const EnsembleModel b = fit_ensemble(data, 5, 1.0, 8, 11);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 5u);
  EXPECT_FALSE(a.members[0] == a.members[1]);
  for (const auto& m : a.members) {
    std::uint64_t total = 0;
    for (const auto& row : m.agent_counts())
      for (auto c : row) total += c;
    EXPECT_EQ(total, data.size());
  }
}

TEST(Predict, DeterministicAgentIsLearned) {
  // At least 1,000 interior Right samples.
  std::vector<Transition> data;
  for (int i = 0; i < 1200; ++i) {
    const Cell from{1 + i % 6, 1 + (i / 6) % 6};
    data.push_back({from, {0, 0}, Action::Right, {from.x + 1, from.y}, {1, 0}});
  }
  const EnsembleModel model = fit_ensemble(data, 5, 1.0, 8, 2);
  const NextStateDist d = predict(model, 0, at({3, 3}, {6, 6}), Action::Right);
  EXPECT_GE(prob_of(d.agent, {4, 3}), 0.99);
}

TEST(Predict, ZeroAlphaGivesPointMass) {
  std::vector<Transition> data(20, Transition{{3, 3}, {6, 6}, Action::Right, {4, 3}, {5, 6}});
  const EnsembleModel model = fit_ensemble(data, 1, 0.0, 8, 1);
  const NextStateDist d = predict(model, 0, at({3, 3}, {6, 6}), Action::Right);
  EXPECT_DOUBLE_EQ(prob_of(d.agent, {4, 3}), 1.0);
  EXPECT_DOUBLE_EQ(prob_of(d.adversary, {5, 6}), 1.0);
}

TEST(Predict, SingleMemberMeanEqualsMember) {
  const auto data = random_transitions(40, 8);
  const EnsembleModel model = fit_ensemble(data, 1, 1.0, 8, 4);
  const GridState s = at({2, 5}, {5, 1});
  for (Action a : kActions) {
    const NextStateDist one = predict(model, 0, s, a);
    const NextStateDist mean = predict_mean(model, s, a);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_DOUBLE_EQ(one.agent.probs[i], mean.agent.probs[i]);
      EXPECT_DOUBLE_EQ(one.adversary.probs[i], mean.adversary.probs[i]);
    }
  }
}

TEST(Predict, NormalizedAndInBounds) {
  const EnvConfig cfg;
  const auto data = random_transitions(30, 9);
  const EnsembleModel model = fit_ensemble(data, 3, 1.0, 8, 4);
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y)
      for (Action a : kActions) {
        const NextStateDist d = predict(model, 1, at({x, y}, {(x + 3) % 8, (y + 5) % 8}), a);
        for (const CellDistribution* cd : {&d.agent, &d.adversary}) {
          double sum = 0.0;
          for (std::size_t i = 0; i < 5; ++i) {
            sum += cd->probs[i];
            if (!cfg.in_bounds(cd->cells[i])) EXPECT_EQ(cd->probs[i], 0.0);
          }
          ASSERT_NEAR(sum, 1.0, 1e-12);
        }
      }
  EXPECT_THROW(predict(model, 3, at({1, 1}, {5, 5}), Action::Up), UsageError);
}

TEST(Predict, IgnoresGoalAndFuel) {
  const auto data = random_transitions(60, 10);
  const EnsembleModel model = fit_ensemble(data, 2, 1.0, 8, 4);
  GridState a = at({3, 4}, {6, 1});
  GridState b = a;
  b.goal = {0, 0};
  b.fuels[1].collected = true;
  b.fuels[2].cell = {3, 5};
  for (Action act : kActions) {
    const NextStateDist da = predict(model, 1, a, act);
    const NextStateDist db = predict(model, 1, b, act);
    EXPECT_EQ(da.agent.probs, db.agent.probs);
    EXPECT_EQ(da.adversary.probs, db.adversary.probs);
  }
}

TEST(SampleNext, MatchesProbabilitiesAndStaysInBounds) {
  const EnvConfig cfg;
  const EnsembleModel model = testing::oracle_model(cfg);
  const NextStateDist d = predict(model, 0, at({3, 3}, {3, 0}), Action::Left);
  Rng rng(77);
  const int n = 10000;
  std::array<int, 5> hits{};
  for (int i = 0; i < n; ++i) {
    const auto [agent, adv] = sample_next(d, rng);
    ASSERT_EQ(agent, (Cell{2, 3}));
    ASSERT_TRUE(cfg.in_bounds(adv));
    for (std::size_t m = 0; m < 5; ++m)
      if (d.adversary.cells[m] == adv) ++hits[m];
  }
  for (std::size_t m = 0; m < 5; ++m) {
    const double p = d.adversary.probs[m];
    const double se = std::sqrt(p * (1 - p) / n);
    EXPECT_NEAR(hits[m] / static_cast<double>(n), p, 3 * se + 1e-9);
  }
}

TEST(ModeNext, TiesGoToFirstDisplacement) {
  NextStateDist d;
  for (std::size_t i = 0; i < 5; ++i) {
    d.agent.cells[i] = apply_move({3, 3}, kMoves[i]);
    d.adversary.cells[i] = apply_move({5, 5}, kMoves[i]);
  }
  d.agent.probs = {0, 0, 0, 1, 0};
  d.adversary.probs = {0, 0.5, 0, 0.5, 0};
  const auto [agent, adv] = mode_next(d);
  EXPECT_EQ(agent, (Cell{3, 4}));
  EXPECT_EQ(adv, (Cell{6, 5}));
}

TEST(ModeNext, LearnedModeIsTheGreedyChase) {
  const EnsembleModel model = fit_ensemble(random_transitions(800, 12), 5, 1.0, 8, 3);
  // Agent moves to (3,5); the adversary at (3,1) should chase upward.
  const auto [agent, adv] = mode_next(predict_mean(model, at({3, 4}, {3, 1}), Action::Up));
  EXPECT_EQ(agent, (Cell{3, 5}));
  EXPECT_EQ(adv, (Cell{3, 2}));
}

TEST(Disagreement, ShrinksWithMoreData) {
  double small = 0.0, large = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    small += ensemble_disagreement(fit_ensemble(random_transitions(25, 100 + s), 5, 1.0, 8, s));
    large += ensemble_disagreement(fit_ensemble(random_transitions(250, 200 + s), 5, 1.0, 8, s));
  }
  EXPECT_LT(large, small);
}

TEST(TotalVariation, Basics) {
  EXPECT_DOUBLE_EQ(total_variation({1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(total_variation({0.5, 0.5, 0, 0, 0}, {0.5, 0.5, 0, 0, 0}), 0.0);
}

TEST(Serialization, RoundTripsExactly) {
  EnsembleModel model = fit_ensemble(random_transitions(40, 13), 3, 0.37, 8, 99);
  model.config_hash = "00112233aabbccdd";
  std::stringstream buf;
  save_model(model, buf);
  const EnsembleModel back = load_model(buf);
  EXPECT_EQ(back, model);
}

TEST(Serialization, BadInputReportsLine) {
  const EnsembleModel model = fit_ensemble(random_transitions(10, 14), 2, 1.0, 8, 1);
  std::stringstream buf;
  save_model(model, buf);
  const std::string text = buf.str();

  std::istringstream wrong_magic("NOT-A-MODEL\n");
  EXPECT_THROW(load_model(wrong_magic), ParseError);

  std::istringstream truncated(text.substr(0, text.size() / 2));
  try {
    load_model(truncated);
    FAIL() << "truncated model loaded";
  } catch (const ParseError& e) {
    EXPECT_GT(e.line(), 5u);
  }
}

}  // namespace
}  // namespace abm
