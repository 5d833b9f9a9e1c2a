#pragma once

// Problem builders and brute-force oracles shared by the tests. Nothing here
// calls the solvers under test.

#include "hjam/mdp.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace hjam::testing {

inline LtiSystem scalar_system(double a = 1.0, double c = 1.0, double w = 1.0, double v = 1.0) {
  LtiSystem s;
  s.A = Matrix::Constant(1, 1, a);
  s.C = Matrix::Constant(1, 1, c);
  s.W = Matrix::Constant(1, 1, w);
  s.V = Matrix::Constant(1, 1, v);
  return s;
}

inline LtiSystem bench_system(int which) {
  LtiSystem s;
  s.A.resize(2, 2);
  s.W.resize(2, 2);
  s.C.resize(1, 2);
  s.V.resize(1, 1);
  if (which == 1) {
    s.A << 1.2, 0.2, 0.3, 1.0;
    s.C << 1.0, 0.0;
    s.W << 2.0, 0.0, 0.0, 1.0;
    s.V << 1.0;
  } else {
    s.A << 1.2, 0.15, 0.0, 1.1;
    s.C << 1.0, 0.2;
    s.W << 1.0, 0.5, 0.5, 0.5;
    s.V << 3.0;
  }
  return s;
}

inline LinkModel qam_link(double sigma2 = 0.04, double jam_gain = 5.0, double b = 0.5) {
  LinkModel l;
  l.sigma2 = sigma2;
  l.jam_gain = jam_gain;
  l.modulation = QamModulation{b};
  return l;
}

/// Arrival rate forced to a constant.
inline LinkModel constant_link(double rate) {
  LinkModel l;
  l.sigma2 = 1.0;
  l.modulation = TableModulation{{{0.0, rate}}};
  return l;
}

inline ProblemConfig bench_problem() {
  ProblemConfig p;
  p.systems = {bench_system(1), bench_system(2)};
  p.channel_chain = MarkovChain({0.02, 0.09}, {{0.8, 0.2}, {0.2, 0.8}});
  p.energy_chain = MarkovChain({0.0, 1.0, 2.0}, {{0.2, 0.3, 0.5}, {0.3, 0.4, 0.3}, {0.1, 0.2, 0.7}});
  p.links = {qam_link()};
  p.battery = {3, 1};
  p.L = 20;
  return p;
}

inline ProblemConfig bench_small_problem() {
  ProblemConfig p = bench_problem();
  p.channel_chain = MarkovChain::constant({0.02});
  p.L = 5;
  return p;
}

/// N = 1, one channel state, two energy states.
inline ProblemConfig toy_n1_problem() {
  ProblemConfig p;
  p.systems = {scalar_system()};
  p.channel_chain = MarkovChain::constant({0.02});
  p.energy_chain = MarkovChain({0.0, 1.0}, {{0.5, 0.5}, {0.5, 0.5}});
  p.links = {qam_link()};
  p.battery = {1, 1};
  p.L = 2;
  return p;
}

/// Toy problems small enough that every deterministic stationary policy can
/// be enumerated (at most a few thousand policies each).
inline std::vector<ProblemConfig> toy_problems() {
  std::vector<ProblemConfig> out;
  out.push_back(toy_n1_problem());  // 12 states, 64 policies
  {
    ProblemConfig p = toy_n1_problem();
    p.energy_chain = MarkovChain({0.0, 1.0}, {{0.7, 0.3}, {0.4, 0.6}});
    p.L = 3;
    out.push_back(p);  // 16 states, 256 policies
  }
  {
    ProblemConfig p = toy_n1_problem();
    p.systems = {scalar_system(1.3, 1.0, 0.5, 2.0)};
    p.channel_chain = MarkovChain({0.02, 0.09}, {{0.8, 0.2}, {0.2, 0.8}});
    p.energy_chain = MarkovChain::constant({1.0});
    p.L = 1;
    out.push_back(p);  // 16 states, 256 policies
  }
  {
    ProblemConfig p;
    p.systems = {scalar_system(1.1), scalar_system(1.2, 1.0, 0.5, 0.5)};
    p.channel_chain = MarkovChain::constant({0.02});
    p.energy_chain = MarkovChain::constant({1.0});
    p.links = {qam_link()};
    p.battery = {1, 1};
    p.L = 1;
    out.push_back(p);  // 8 states, 81 policies
  }
  {
    ProblemConfig p = toy_n1_problem();
    p.systems = {bench_system(1)};
    p.battery = {2, 1};
    p.L = 1;
    out.push_back(p);  // 12 states, 256 policies
  }
  {
    ProblemConfig p = toy_n1_problem();
    p.per_sensor_channels = {{MarkovChain::constant({0.05}), MarkovChain::constant({0.09})}};
    p.energy_chain = MarkovChain({0.0, 2.0}, {{0.5, 0.5}, {0.2, 0.8}});
    p.links = {qam_link(0.04, 3.0, 1.0)};
    p.battery = {2, 2};
    p.L = 1;
    out.push_back(p);  // 12 states, 1296 policies
  }
  return out;
}

/// Dense transition matrix of a deterministic stationary policy, built from
/// the successor lists (each already checked against hand enumeration).
inline Eigen::MatrixXd policy_matrix(const MdpModel& m, const std::vector<ActionId>& policy) {
  const auto n = static_cast<Eigen::Index>(m.state_count());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
  SuccessorScratch sc;
  for (StateIndex s = 0; s < m.state_count(); ++s) {
    const auto v = m.successors(s, policy[s], sc);
    for (std::size_t j = 0; j < v.index.size(); ++j) P(s, v.index[j]) += v.prob[j];
  }
  return P;
}

/// Long-run average reward from each start state: the Cesaro limit of P^k r,
/// computed exactly from P* = lim (1/K) sum P^k via the fundamental matrix
/// (I - P + P*)^{-1}. Handles multichain and periodic policies.
inline Eigen::VectorXd policy_gain(const MdpModel& m, const std::vector<ActionId>& policy) {
  const Eigen::MatrixXd P = policy_matrix(m, policy);
  const auto n = P.rows();
  Eigen::VectorXd r(n);
  for (StateIndex s = 0; s < m.state_count(); ++s) r[s] = m.reward(s, policy[s]);
  // Stationary projector by repeated squaring of the lazy chain (I + P) / 2,
  // which has the same invariant measures and is aperiodic.
  Eigen::MatrixXd Q = 0.5 * (Eigen::MatrixXd::Identity(n, n) + P);
  for (int k = 0; k < 50; ++k) {
    Q = Q * Q;
    // Squaring doubles any row-sum drift; keep the rows stochastic.
    const Eigen::VectorXd sums = Q.rowwise().sum();
    Q = sums.cwiseInverse().asDiagonal() * Q;
  }
  return Q * r;
}

/// Best gain over every deterministic stationary policy, from state `start`.
inline double enumerate_optimal_gain(const MdpModel& m, StateIndex start) {
  const std::size_t n = m.state_count();
  std::vector<std::size_t> digit(n, 0);
  std::vector<ActionId> policy(n);
  double best = -1e300;
  while (true) {
    for (StateIndex s = 0; s < n; ++s) policy[s] = m.feasible_actions(s)[digit[s]];
    best = std::max(best, policy_gain(m, policy)[start]);
    std::size_t s = 0;
    while (s < n && ++digit[s] == m.feasible_actions(static_cast<StateIndex>(s)).size()) digit[s++] = 0;
    if (s == n) break;
  }
  return best;
}

// Tail integral of the standard normal density by composite Simpson on
// [x, x + 40] (the remaining mass is far below double precision).
inline double q_quadrature(double x) {
  if (x < 0.0) return 1.0 - q_quadrature(-x);
  const int n = 200000;
  const double a = x;
  const double b = x + 40.0;
  const double h = (b - a) / n;
  const double c = 1.0 / std::sqrt(2.0 * M_PI);
  auto f = [&](double t) { return c * std::exp(-0.5 * t * t); };
  double sum = f(a) + f(b);
  for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

inline double policy_count(const MdpModel& m) {
  double c = 1.0;
  for (StateIndex s = 0; s < m.state_count(); ++s) c *= static_cast<double>(m.feasible_actions(s).size());
  return c;
}

}  // namespace hjam::testing
