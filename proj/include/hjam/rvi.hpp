#pragma once

// Exact solution of the average-reward problem when the channel statistics are
// known: relative value iteration, greedy policy extraction, Q-factors and a
// checker for the monotone/superadditive structure of the optimum.

#include "hjam/mdp.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace hjam {

struct ValueTable {
  std::vector<double> v;
  double j_star = 0.0;
  StateIndex reference = 0;
};

struct PolicyTable {
  std::vector<ActionId> action;
};

/// Q(s, a) = r + E[v(s')] - J*, indexed by MdpModel::pair_index.
struct QTableExact {
  std::vector<double> q;
};

struct SweepRecord {
  std::size_t sweep = 0;
  double span = 0.0;
  double j_star = 0.0;
};

struct RviOptions {
  double span_tol = 1e-9;
  std::size_t max_sweeps = 100'000;
  /// Restrict each state's argmax to powers at least those chosen at its
  /// tau-predecessors (valid because the optimal power is nondecreasing in tau).
  bool pruned = false;
  std::optional<StateIndex> reference;
  /// 0 = hardware concurrency.
  unsigned threads = 0;
  /// Throw ConvergenceError when max_sweeps is exhausted.
  bool throw_on_nonconvergence = true;
};

struct RviResult {
  ValueTable values;
  PolicyTable policy;
  std::vector<SweepRecord> sweeps;
  bool converged = false;
  /// Number of (state, action) backups evaluated across all sweeps.
  std::size_t backups = 0;
};

RviResult rvi_solve(const MdpModel& model, const RviOptions& opts = {});

/// Greedy policy for v: argmax_a r + E[v(s')], lexicographically smallest
/// action on ties.
PolicyTable extract_policy(const MdpModel& model, const ValueTable& vt, unsigned threads = 0);

QTableExact q_from_v(const MdpModel& model, const ValueTable& vt);

/// max_s |J* + v(s) - max_a [r + E v]|
double bellman_residual(const MdpModel& model, const ValueTable& vt);

/// max over pairs of |J* + Q(s,a) - r - E[max_a' Q(s', a')]|
double q_bellman_residual(const MdpModel& model, const std::vector<double>& q, double j_star);

struct StructureViolation {
  enum class Kind { kMonotoneV, kMonotoneQ, kSuperadditiveQ, kMonotonePolicy };
  Kind kind;
  std::size_t sensor = 0;
  StateIndex lower = 0;  // tau_i smaller by one
  StateIndex upper = 0;
  ActionId action_low = 0;
  ActionId action_high = 0;
  double amount = 0.0;  // size of the violation
};

std::string to_string(StructureViolation::Kind kind);

struct StructureReport {
  bool monotone_V = true;
  bool monotone_Q = true;
  bool superadditive_Q = true;
  bool monotone_policy = true;
  std::size_t violation_count = 0;
  /// At most `max_counterexamples` entries.
  std::vector<StructureViolation> counterexamples;

  bool all_hold() const { return monotone_V && monotone_Q && superadditive_Q && monotone_policy; }
};

StructureReport verify_structure(const MdpModel& model, const ValueTable& vt, const PolicyTable& pt,
                                 const QTableExact& qt, double tol = 1e-6,
                                 std::size_t max_counterexamples = 100);

}  // namespace hjam
