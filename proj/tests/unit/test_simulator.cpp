#include "hjam/simulator.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hjam;
using namespace hjam::testing;

TEST(Environment, ResetState) {
  const MdpModel m(bench_small_problem());
  for (std::uint64_t seed : {1, 2, 99}) {
    Environment env(m, seed);
    EXPECT_EQ(env.state().view.b, 3);
    for (const auto& c : env.state().view.sensors) EXPECT_EQ(c.tau, 0);
    for (int t : env.state().true_tau) EXPECT_EQ(t, 0);
    EXPECT_EQ(env.state().step, 0u);
  }
}

TEST(Environment, SameSeedSameTrajectory) {
  const MdpModel m(bench_problem());
  Environment a(m, 7);
  Environment b(m, 7);
  Environment c(m, 8);
  bool differs = false;
  for (int k = 0; k < 2000; ++k) {
    const ActionId act = greedy_action(m, a.state_index());
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    ASSERT_EQ(a.state().view, b.state().view);
    ASSERT_EQ(ra.realized_trace, rb.realized_trace);
    if (c.state().view.b >= m.config().battery.p_max) c.step(greedy_action(m, c.state_index()));
    else c.step(m.zero_action());
    differs = differs || !(a.state().view == c.state().view);
  }
  EXPECT_TRUE(differs);
}

TEST(Environment, CertainArrivalKeepsTauAtZero) {
  ProblemConfig p = toy_n1_problem();
  p.links = {constant_link(1.0)};
  const MdpModel m(p);
  Environment env(m, 3);
  const double t0 = m.steady(0).trace_table[0];
  for (int k = 0; k < 500; ++k) {
    const auto r = env.step(m.zero_action());
    EXPECT_EQ(r.gamma[0], 1);
    EXPECT_EQ(env.state().true_tau[0], 0);
    EXPECT_DOUBLE_EQ(r.realized_trace, t0);
    EXPECT_DOUBLE_EQ(r.expected_reward, t0);
  }
}

TEST(Environment, CertainLossGrowsPastTruncation) {
  ProblemConfig p = toy_n1_problem();
  p.links = {constant_link(0.0)};
  const MdpModel m(p);
  Environment env(m, 3);
  const auto& sys = p.systems[0];
  const double pbar = m.steady(0).p_bar(0, 0);
  double h = pbar;
  for (int k = 1; k <= 40; ++k) {
    const auto r = env.step(m.zero_action());
    EXPECT_EQ(r.gamma[0], 0);
    EXPECT_EQ(env.state().true_tau[0], k);
    EXPECT_EQ(env.state().view.sensors[0].tau, std::min(k, p.L));
    // Trace extension: h(x) = a^2 x + w for the scalar system.
    h = sys.A(0, 0) * sys.A(0, 0) * h + sys.W(0, 0);
    EXPECT_NEAR(r.realized_trace, h, 1e-9 * h);
  }
}

TEST(Environment, BatteryFollowsHarvest) {
  const MdpModel m(bench_problem());
  Environment env(m, 4);
  for (int k = 0; k < 5000; ++k) {
    const int b = env.state().view.b;
    const int e = env.state().view.e;
    const ActionId a = random_action(m, env.state_index(), env.uniform());
    int spent = 0;
    for (int x : m.action(a)) spent += x;
    env.step(a);
    const int expect = std::min(m.config().battery.b_max,
                                b - spent + static_cast<int>(m.config().energy_chain.value(static_cast<std::size_t>(e))));
    ASSERT_EQ(env.state().view.b, expect);
  }
}

TEST(Environment, InfeasibleActionThrows) {
  const MdpModel m(toy_n1_problem());
  Environment env(m, 1);
  // Drain the battery first.
  while (env.state().view.b > 0) {
    if (m.config().energy_chain.value(static_cast<std::size_t>(env.state().view.e)) > 0.0)
      env.step(m.zero_action());
    else
      env.step(*m.find_action({1}));
  }
  EXPECT_THROW(env.step(*m.find_action({1})), std::invalid_argument);
}

TEST(Policies, GreedyServesLargestTauFirst) {
  const MdpModel m(bench_small_problem());
  EXPECT_EQ(m.action(greedy_action(m, m.encode({1, 0, {{0, 0, 3}, {0, 0, 1}}}))), (ActionVec{1, 0}));
  EXPECT_EQ(m.action(greedy_action(m, m.encode({1, 0, {{0, 0, 1}, {0, 0, 3}}}))), (ActionVec{0, 1}));
  // Ties go to the lower index.
  EXPECT_EQ(m.action(greedy_action(m, m.encode({1, 0, {{0, 0, 2}, {0, 0, 2}}}))), (ActionVec{1, 0}));
  EXPECT_EQ(m.action(greedy_action(m, m.encode({3, 0, {{0, 0, 2}, {0, 0, 0}}}))), (ActionVec{1, 1}));
  EXPECT_EQ(greedy_action(m, m.encode({0, 0, {{0, 0, 5}, {0, 0, 5}}})), m.zero_action());
}

TEST(Policies, RandomIsUniformOverFeasible) {
  const MdpModel m(bench_small_problem());
  const StateIndex s = m.encode({2, 1, {{0, 0, 0}, {0, 0, 0}}});
  const auto feas = m.feasible_actions(s);
  std::vector<int> count(feas.size(), 0);
  Rng rng(11);
  const int draws = 80000;
  for (int k = 0; k < draws; ++k) ++count[*m.local_action(s, random_action(m, s, rng.uniform()))];
  const double p = 1.0 / static_cast<double>(feas.size());
  const double sigma = std::sqrt(draws * p * (1.0 - p));
  for (int c : count) EXPECT_LT(std::abs(c - draws * p), 3.0 * sigma);
}

TEST(Policies, RandomOnSingletonFeasibleSet) {
  const MdpModel m(bench_small_problem());
  const StateIndex s = m.encode({0, 1, {{0, 0, 2}, {0, 0, 3}}});
  for (double u : {0.0, 0.5, 0.999999}) EXPECT_EQ(random_action(m, s, u), m.zero_action());
}

TEST(Rollout, SingleStepWithCertainArrival) {
  ProblemConfig p = bench_small_problem();
  p.links = {constant_link(1.0)};
  const MdpModel m(p);
  const auto rep = rollout(m, random_policy(m), 1, 3);
  EXPECT_DOUBLE_EQ(rep.avg_reward, m.steady(0).trace_table[0] + m.steady(1).trace_table[0]);
}

TEST(Rollout, DeterministicAndBatteryInRange) {
  const MdpModel m(bench_problem());
  const auto a = rollout(m, random_policy(m), 20000, 5);
  const auto b = rollout(m, random_policy(m), 20000, 5);
  EXPECT_EQ(a.avg_reward, b.avg_reward);
  EXPECT_EQ(a.batch_means, b.batch_means);
  EXPECT_TRUE(a.battery_in_range);
  EXPECT_EQ(a.batch_means.size(), 100u);
}

TEST(Rollout, TraceRecordsSteps) {
  const MdpModel m(bench_small_problem());
  RolloutOptions opts;
  opts.keep_trace = true;
  const auto rep = rollout(m, greedy_policy(m), 50, 2, opts);
  ASSERT_EQ(rep.trace.size(), 50u);
  EXPECT_EQ(rep.trace[0].state, rep.initial);
  double sum = 0.0;
  for (std::size_t k = 0; k < rep.trace.size(); ++k) {
    EXPECT_EQ(rep.trace[k].k, k);
    sum += rep.trace[k].realized_trace;
  }
  EXPECT_NEAR(sum / 50.0, rep.avg_reward, 1e-12);
}

TEST(Rollout, ZeroHorizon) {
  const MdpModel m(toy_n1_problem());
  const auto rep = rollout(m, greedy_policy(m), 0, 1);
  EXPECT_EQ(rep.avg_reward, 0.0);
  EXPECT_TRUE(rep.batch_means.empty());
}

TEST(Rollout, MatchesStationaryAverageOfZeroPolicy) {
  // Zero power: the chain on tau is independent of everything else, and the
  // untruncated trace has a closed-form stationary mean.
  ProblemConfig p = toy_n1_problem();
  p.links = {constant_link(0.6)};
  const MdpModel m(p);
  const double lam = 0.6;
  double expect = 0.0;
  const auto table = trace_powers(p.systems[0], m.steady(0).p_bar, 200);
  for (std::size_t t = 0; t < table.size(); ++t) expect += lam * std::pow(1.0 - lam, static_cast<double>(t)) * table[t];
  const auto zero = [&m](StateIndex, double) { return m.zero_action(); };
  const auto rep = rollout(m, zero, 400000, 6);
  const double se = batch_standard_error(rep.batch_means);
  EXPECT_LT(std::abs(rep.avg_reward - expect), 3.0 * se) << rep.avg_reward << " vs " << expect;
  EXPECT_GT(se, 0.0);
}

TEST(BatchStandardError, KnownValues) {
  EXPECT_EQ(batch_standard_error({}), 0.0);
  EXPECT_EQ(batch_standard_error({3.0}), 0.0);
  // Sample sd of {1,2,3,4} is sqrt(5/3).
  EXPECT_NEAR(batch_standard_error({1, 2, 3, 4}), std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}
