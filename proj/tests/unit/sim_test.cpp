#include <gtest/gtest.h>

#include <cmath>

#include "bimp/errors.hpp"
#include "bimp/oracle.hpp"
#include "bimp/rng.hpp"
#include "bimp/sim.hpp"
#include "test_support.hpp"

namespace bimp {
namespace {

struct Fixture {
  DiscreteInstance inst;
  ModelSpec spec;
  GridSpec grid;
  Policy policy;
};

Fixture setup(const std::string& name) {
  Fixture s{bundled_instance(name), {}, {}, {}};
  s.spec = to_model(s.inst);
  s.grid = build_grids(s.spec, to_grid_options(s.inst));
  s.policy = extract_policy(backward_induction(s.spec, s.grid), s.spec, s.grid, 0.0);
  return s;
}

Fixture censored_setup() {
  Fixture s;
  s.spec = make_censored_execution_model({});
  GridOptions o;
  o.level = 2;
  o.lower = {-4.0};
  o.upper = {3.875};
  o.space_nodes = {64};
  o.simplex_nodes = 17;
  s.grid = build_grids(s.spec, o);
  s.policy = extract_policy(backward_induction(s.spec, s.grid), s.spec, s.grid, 0.0);
  return s;
}

TEST(CounterRng, StreamsArePureFunctions) {
  CounterRng a(5, 17, StreamRole::Brownian);
  CounterRng b(5, 17, StreamRole::Brownian);
  CounterRng c(5, 17, StreamRole::Impulse);
  CounterRng d(5, 18, StreamRole::Brownian);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
  }
}

TEST(CounterRng, UniformMoments) {
  CounterRng r(1, 0, StreamRole::Parameter);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  EXPECT_NEAR(s / n, 0.5, 3e-3);
  EXPECT_NEAR(s2 / n, 1.0 / 3.0, 3e-3);
}

TEST(Simulate, AllWaitFrozenPathKeepsState) {
  const Fixture s = setup("frozen_no_profit");
  const Trajectory t = simulate(s.spec, s.policy, State{0.0, Coord{1.0}}, Prior({0.5, 0.5}), 9);
  EXPECT_TRUE(t.events.empty());
  EXPECT_EQ(t.gain, 1.0);
  EXPECT_EQ(t.terminal_time, 1.0);
  EXPECT_EQ(t.terminal_state.x[0], 1.0);
}

TEST(Simulate, SameSeedSameTrajectory) {
  const Fixture s = censored_setup();
  for (std::uint64_t seed : {1u, 2u, 99u}) {
    const Trajectory a = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), seed);
    const Trajectory b = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), seed);
    EXPECT_EQ(trajectory_csv(a), trajectory_csv(b));
    EXPECT_EQ(a.gain, b.gain);
    EXPECT_EQ(a.impulse_draws, b.impulse_draws);
  }
}

TEST(Simulate, SeparatingOutcomeRevealsParameter) {
  const Fixture s = setup("one_shot_penalized");
  const Trajectory t = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 4, 1);
  ASSERT_EQ(t.events.size(), 1u);
  EXPECT_EQ(t.events[0].posterior, Prior({0.0, 1.0}));
  EXPECT_EQ(t.events[0].landing.x[0], 1.0);
  EXPECT_EQ(t.gain, 1.0);
}

TEST(Simulate, TrajectoriesAreAdmissible) {
  const Fixture s = censored_setup();
  for (std::uint64_t path = 0; path < 200; ++path) {
    const Trajectory t = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 3, std::nullopt, {},
                                  path);
    EXPECT_NO_THROW(validate_trajectory(t, s.grid));
    for (std::size_t i = 0; i < t.events.size(); ++i) {
      EXPECT_LE(t.events[i].tau, s.spec.horizon);
      EXPECT_GE(t.events[i].theta, t.events[i].tau);
      if (i + 1 < t.events.size()) {
        EXPECT_LE(t.events[i].theta, t.events[i + 1].tau);
        EXPECT_LT(t.events[i].tau, t.events[i + 1].tau);
      }
    }
  }
}

TEST(Simulate, ValidateRejectsOverlappingEvents) {
  const Fixture s = censored_setup();
  Trajectory t;
  ImpulseEvent a;
  a.tau = 0.0;
  a.theta = 0.5;
  ImpulseEvent b;
  b.tau = 0.25;
  b.theta = 0.5;
  t.events = {a, b};
  try {
    validate_trajectory(t, s.grid);
    FAIL() << "expected InadmissibleEvent";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InadmissibleEvent);
  }
}

TEST(Simulate, RecordedPosteriorsReplayFromEvents) {
  const Fixture s = censored_setup();
  for (std::uint64_t path = 0; path < 200; ++path) {
    const Prior m0({0.5, 0.5});
    const Trajectory t = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, m0, 21, std::nullopt, {}, path);
    Prior m = m0;
    for (const ImpulseEvent& e : t.events) {
      m = bayes_update(m, e.likelihood);
      EXPECT_EQ(m, e.posterior);
    }
    EXPECT_EQ(m, t.terminal_prior);
  }
}

TEST(Simulate, PosteriorsAreAMartingale) {
  const Fixture s = censored_setup();
  const Prior m0({0.5, 0.5});
  const std::size_t n = 20000;
  double sum = 0.0, sum2 = 0.0;
  std::size_t with_event = 0;
  for (std::uint64_t path = 0; path < n; ++path) {
    const Trajectory t = simulate(s.spec, s.policy, State{0.0, Coord{0.0}}, m0, 77, std::nullopt, {}, path);
    const double w = t.events.empty() ? m0[0] : t.events.front().posterior[0];
    with_event += t.events.empty() ? 0 : 1;
    sum += w;
    sum2 += w * w;
  }
  ASSERT_GT(with_event, n / 2);
  const double mean = sum / n;
  const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
  EXPECT_NEAR(mean, m0[0], 3.0 * se);
}

TEST(EvaluateMc, DeterministicInstanceHasNoVariance) {
  const Fixture s = setup("frozen_no_profit");
  const McResult r = evaluate_mc(s.spec, s.policy, State{0.0, Coord{2.0}}, Prior({0.5, 0.5}), 500, 1);
  EXPECT_EQ(r.mean, 2.0);
  EXPECT_EQ(r.standard_error, 0.0);
  EXPECT_EQ(r.paths, 500u);
}

TEST(EvaluateMc, OneShotMatchesOracle) {
  const Fixture s = setup("one_shot_penalized");
  const double exact = exact_value(s.inst);
  const McResult r = evaluate_mc(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 100000, 3);
  EXPECT_NEAR(r.mean, exact, 3.0 * r.standard_error);
  EXPECT_GT(r.standard_error, 0.0);
}

TEST(EvaluateMc, BandAroundSolvedValue) {
  const Fixture s = censored_setup();
  const SolveReport rep = backward_induction(s.spec, s.grid);
  const double v = interpolate(s.spec, rep.field, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}));
  const McResult r = evaluate_mc(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 20000, 5);
  EXPECT_GE(r.mean, v - 3.0 * r.standard_error);
}

TEST(EvaluateMc, ThreadCountDoesNotChangeResult) {
  const Fixture s = censored_setup();
  const McResult a = evaluate_mc(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 5000, 8, 1);
  for (unsigned threads : {2u, 4u, 8u}) {
    const McResult b = evaluate_mc(s.spec, s.policy, State{0.0, Coord{0.0}}, Prior({0.5, 0.5}), 5000, 8, threads);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.standard_error, b.standard_error);
  }
}

TEST(PairwiseSum, MatchesNaiveOnIntegers) {
  std::vector<double> v(1001);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  EXPECT_EQ(pairwise_sum(v), 1000.0 * 1001.0 / 2.0);
  EXPECT_EQ(pairwise_sum(std::vector<double>{}), 0.0);
}

}  // namespace
}  // namespace bimp
