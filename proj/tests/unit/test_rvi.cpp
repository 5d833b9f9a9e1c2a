#include "hjam/errors.hpp"
#include "hjam/rvi.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hjam;
using namespace hjam::testing;

namespace {

ProblemConfig single_state_problem() {
  ProblemConfig p = toy_n1_problem();
  p.energy_chain = MarkovChain::constant({0.0});
  p.links = {constant_link(1.0)};
  p.battery = {0, 1};
  p.L = 0;
  return p;
}

}  // namespace

TEST(Rvi, SingleStateIsExact) {
  const MdpModel m(single_state_problem());
  ASSERT_EQ(m.state_count(), 1u);
  const auto r = rvi_solve(m);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.values.j_star, m.reward(0, 0));
  EXPECT_EQ(r.values.v[0], 0.0);
  const auto q = q_from_v(m, r.values);
  EXPECT_EQ(q.q[0], 0.0);
  const auto rep = verify_structure(m, r.values, r.policy, q);
  EXPECT_TRUE(rep.all_hold());
  EXPECT_EQ(rep.violation_count, 0u);
}

TEST(Rvi, MatchesPolicyEnumerationOnToys) {
  const auto toys = toy_problems();
  ASSERT_GE(toys.size(), 5u);
  for (std::size_t t = 0; t < toys.size(); ++t) {
    const MdpModel m(toys[t]);
    ASSERT_LE(m.state_count(), 200u);
    ASSERT_LE(policy_count(m), 5000.0);
    RviOptions opts;
    opts.span_tol = 1e-13;
    opts.max_sweeps = 1'000'000;
    const auto r = rvi_solve(m, opts);
    const double oracle = enumerate_optimal_gain(m, r.values.reference);
    EXPECT_NEAR(r.values.j_star, oracle, 1e-8) << "toy " << t;
    // The solver's own policy achieves the optimum.
    const auto gain = policy_gain(m, r.policy.action);
    for (StateIndex s = 0; s < m.state_count(); ++s) EXPECT_NEAR(gain[s], r.values.j_star, 1e-8);
  }
}

TEST(Rvi, BiasMatchesPoissonEquation) {
  // For the optimal policy, v solves J + v = r_pi + P_pi v with v(ref) = 0.
  const MdpModel m(toy_problems()[1]);
  RviOptions opts;
  opts.span_tol = 1e-13;
  opts.max_sweeps = 1'000'000;
  const auto r = rvi_solve(m, opts);
  const Eigen::MatrixXd P = policy_matrix(m, r.policy.action);
  const auto n = P.rows();
  Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) - P;
  Eigen::VectorXd rhs(n);
  for (StateIndex s = 0; s < m.state_count(); ++s) rhs[s] = m.reward(s, r.policy.action[s]) - r.values.j_star;
  // Pin v(ref) = 0 by replacing that column's unknown.
  const auto ref = static_cast<Eigen::Index>(r.values.reference);
  M.col(ref).setZero();
  M(ref, ref) = 0.0;
  Eigen::MatrixXd A(n + 1, n);
  A << M, Eigen::RowVectorXd::Unit(n, ref);
  Eigen::VectorXd b(n + 1);
  b << rhs, 0.0;
  const Eigen::VectorXd v = A.colPivHouseholderQr().solve(b);
  for (StateIndex s = 0; s < m.state_count(); ++s) {
    if (static_cast<Eigen::Index>(s) == ref) continue;
    EXPECT_NEAR(r.values.v[s], v[s], 1e-7) << "state " << s;
  }
}

TEST(Rvi, ResidualsSmall) {
  const MdpModel m(bench_small_problem());
  RviOptions opts;
  opts.span_tol = 1e-11;
  const auto r = rvi_solve(m, opts);
  EXPECT_LT(bellman_residual(m, r.values), 10 * opts.span_tol);
  const auto q = q_from_v(m, r.values);
  EXPECT_LT(q_bellman_residual(m, q.q, r.values.j_star), 10 * opts.span_tol);
  for (StateIndex s = 0; s < m.state_count(); ++s) {
    double best = -1e300;
    for (std::size_t k = 0; k < m.feasible_actions(s).size(); ++k) best = std::max(best, q.q[m.pair_index(s, k)]);
    EXPECT_NEAR(best, r.values.v[s], 1e-9);
  }
}

TEST(Rvi, SweepDiagnosticsRecorded) {
  const MdpModel m(toy_n1_problem());
  const auto r = rvi_solve(m);
  ASSERT_FALSE(r.sweeps.empty());
  EXPECT_EQ(r.sweeps.back().sweep, r.sweeps.size());
  EXPECT_LT(r.sweeps.back().span, 1e-9);
  EXPECT_NEAR(r.sweeps.back().j_star, r.values.j_star, 1e-9);
}

TEST(Rvi, NonconvergenceReported) {
  const MdpModel m(bench_small_problem());
  RviOptions opts;
  opts.max_sweeps = 2;
  EXPECT_THROW(rvi_solve(m, opts), ConvergenceError);
  opts.throw_on_nonconvergence = false;
  const auto r = rvi_solve(m, opts);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.sweeps.size(), 2u);
}

TEST(Rvi, ReferenceChoiceOnlyShiftsValues) {
  const MdpModel m(bench_small_problem());
  RviOptions a;
  a.span_tol = 1e-11;
  RviOptions b = a;
  b.reference = 17;
  const auto ra = rvi_solve(m, a);
  const auto rb = rvi_solve(m, b);
  EXPECT_NEAR(ra.values.j_star, rb.values.j_star, 1e-9);
  EXPECT_EQ(rb.values.v[17], 0.0);
  const double shift = ra.values.v[17];
  for (StateIndex s = 0; s < m.state_count(); ++s) EXPECT_NEAR(ra.values.v[s] - shift, rb.values.v[s], 1e-8);
}

TEST(Rvi, PrunedIsBitIdentical) {
  for (const auto& p : {bench_small_problem(), toy_n1_problem(), toy_problems()[3], toy_problems()[5]}) {
    const MdpModel m(p);
    RviOptions plain;
    RviOptions pruned;
    pruned.pruned = true;
    const auto a = rvi_solve(m, plain);
    const auto b = rvi_solve(m, pruned);
    EXPECT_EQ(a.values.j_star, b.values.j_star);
    EXPECT_EQ(a.values.v, b.values.v);
    EXPECT_EQ(a.policy.action, b.policy.action);
    EXPECT_LE(b.backups, a.backups);
  }
}

TEST(Rvi, ThreadCountDoesNotChangeResult) {
  const MdpModel m(bench_small_problem());
  RviOptions one;
  one.threads = 1;
  RviOptions four;
  four.threads = 4;
  const auto a = rvi_solve(m, one);
  const auto b = rvi_solve(m, four);
  EXPECT_EQ(a.values.v, b.values.v);
  EXPECT_EQ(a.policy.action, b.policy.action);
}

TEST(ExtractPolicy, ZeroValuesGiveMyopicPolicy) {
  const MdpModel m(bench_small_problem());
  ValueTable vt;
  vt.v.assign(m.state_count(), 0.0);
  const auto pt = extract_policy(m, vt);
  for (StateIndex s = 0; s < m.state_count(); ++s) {
    ActionId best = m.feasible_actions(s)[0];
    for (ActionId a : m.feasible_actions(s))
      if (m.reward(s, a) > m.reward(s, best)) best = a;
    EXPECT_EQ(pt.action[s], best);
    if (m.battery_of(s) == 0) EXPECT_EQ(pt.action[s], m.zero_action());
  }
}

TEST(ExtractPolicy, MatchesSolverPolicy) {
  const MdpModel m(bench_small_problem());
  const auto r = rvi_solve(m);
  EXPECT_EQ(extract_policy(m, r.values).action, r.policy.action);
}

TEST(QFromV, ToyMatchesOracleRelativeValues) {
  const MdpModel m(toy_n1_problem());
  RviOptions opts;
  opts.span_tol = 1e-13;
  const auto r = rvi_solve(m, opts);
  const auto q = q_from_v(m, r.values);
  // Q(s, a) = r + E v - J for every pair, with E computed by dense products.
  const auto n = static_cast<Eigen::Index>(m.state_count());
  const Eigen::Map<const Eigen::VectorXd> v(r.values.v.data(), n);
  for (StateIndex s = 0; s < m.state_count(); ++s)
    for (std::size_t k = 0; k < m.feasible_actions(s).size(); ++k) {
      std::vector<ActionId> pol = r.policy.action;
      pol[s] = m.feasible_actions(s)[k];
      const Eigen::MatrixXd P = policy_matrix(m, pol);
      const double want = m.reward(s, pol[s]) + P.row(s).dot(v) - r.values.j_star;
      EXPECT_NEAR(q.q[m.pair_index(s, k)], want, 1e-12);
    }
}

TEST(Structure, HoldsOnSmallModel) {
  const MdpModel m(bench_small_problem());
  const auto r = rvi_solve(m);
  const auto rep = verify_structure(m, r.values, r.policy, q_from_v(m, r.values));
  EXPECT_TRUE(rep.all_hold());
  EXPECT_TRUE(rep.counterexamples.empty());
}

TEST(Structure, CorruptedValuesDetected) {
  const MdpModel m(bench_small_problem());
  auto r = rvi_solve(m);
  // Swap V between two tau-adjacent states.
  MdpState lo_state{2, 1, {{0, 0, 2}, {0, 0, 3}}};
  const StateIndex lo = m.encode(lo_state);
  const StateIndex hi = lo + m.tau_stride(0);
  ASSERT_LT(r.values.v[lo], r.values.v[hi]);
  std::swap(r.values.v[lo], r.values.v[hi]);
  const auto rep = verify_structure(m, r.values, r.policy, q_from_v(m, r.values));
  EXPECT_FALSE(rep.monotone_V);
  bool listed = false;
  for (const auto& ce : rep.counterexamples)
    if (ce.kind == StructureViolation::Kind::kMonotoneV && ce.lower == lo && ce.upper == hi) listed = true;
  EXPECT_TRUE(listed);
}
