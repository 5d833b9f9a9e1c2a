#pragma once

// Model-free RVI Q-learning: the standard single-entry update and the
// primal-dual "structural" update that adds the monotone/superadditive
// inequalities of the optimal Q-factor as constraints with multipliers.

#include "hjam/mdp.hpp"
#include "hjam/rvi.hpp"
#include "hjam/simulator.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace hjam {

/// Tabular Q over (state, feasible action) pairs, MdpModel::pair_index order.
struct QTable {
  std::vector<double> q;
  std::vector<std::uint32_t> visits;

  static QTable zeros(const MdpModel& model, double init = 0.0) {
    return QTable{std::vector<double>(model.pair_count(), init),
                  std::vector<std::uint32_t>(model.pair_count(), 0)};
  }
};

/// c / (ceil(n / B) + k0), n >= 1.
struct StepSchedule {
  double c = 1.0;
  double k0 = 100.0;
  std::uint64_t B = 1;

  double at(std::uint64_t n) const;
};

enum class StepClock {
  kGlobal,  // n = learner step k
  kVisit,   // n = visits of the updated pair so far (dual rows use k)
};

enum class LearnMode { kStandard, kStructural };

struct LearnConfig {
  double epsilon = 0.1;
  StepSchedule xi;    // standard update
  StepSchedule zeta;  // structural primal and dual steps
  StepClock clock = StepClock::kGlobal;
  /// Multiplier on the dual step size relative to zeta.
  double dual_scale = 1.0;
  std::optional<StateIndex> ref_state;
  ActionId ref_action = 0;  // must be feasible in ref_state; 0 is the all-zero vector
  std::uint64_t horizon = 0;
  std::uint64_t eval_every = 0;
  std::vector<std::uint64_t> checkpoints;  // logged in addition to eval_every multiples
  std::uint64_t seed = 1;
  double q_init = 0.0;

  bool dual_projection = true;
  bool full_dual = false;
  std::size_t dual_batch = 256;

  /// Curve diagnostics; both read the exact model and never feed the learner.
  bool log_residual = true;
  bool log_violations = true;
  /// A row counts as violated when row . Q < -violation_tol.
  double violation_tol = 1e-9;

  std::uint64_t snapshot_every = 0;
};

struct Observation {
  StateIndex s = 0;
  ActionId a = 0;
  double r = 0.0;
  StateIndex next = 0;
};

/// Sparse difference constraints T Q >= 0 with multipliers nu >= 0.
class ConstraintSet {
 public:
  enum class Kind : std::uint8_t { kMonotone, kSuperadditive };

  std::size_t row_count() const noexcept { return kind_.size(); }
  std::size_t monotone_count() const noexcept { return monotone_; }
  std::size_t superadditive_count() const noexcept { return row_count() - monotone_; }
  Kind kind(std::size_t row) const { return kind_[row]; }
  std::span<const PairIndex> row_pairs(std::size_t row) const {
    return {pairs_.data() + offset_[row], offset_[row + 1] - offset_[row]};
  }
  std::span<const std::int8_t> row_coefs(std::size_t row) const {
    return {coefs_.data() + offset_[row], offset_[row + 1] - offset_[row]};
  }
  /// Rows in which pair p appears.
  std::span<const std::uint32_t> rows_of(PairIndex p) const {
    return {incident_.data() + incident_offset_[p], incident_offset_[p + 1] - incident_offset_[p]};
  }
  double evaluate(std::size_t row, const std::vector<double>& q) const;
  /// Number of rows with value < -tol.
  std::size_t violations(const std::vector<double>& q, double tol) const;
  double min_value(const std::vector<double>& q) const;

  std::vector<double> nu;

 private:
  friend ConstraintSet build_constraints(const MdpModel& model);
  friend ConstraintSet empty_constraints(const MdpModel& model);
  void add_row(Kind kind, std::initializer_list<std::pair<PairIndex, std::int8_t>> entries);
  void finalize(std::size_t pair_count);

  std::vector<Kind> kind_;
  std::vector<std::size_t> offset_{0};
  std::vector<PairIndex> pairs_;
  std::vector<std::int8_t> coefs_;
  std::vector<std::size_t> incident_offset_;
  std::vector<std::uint32_t> incident_;
  std::size_t monotone_ = 0;
};

/// Monotone rows Q(s+, a) - Q(s-, a) >= 0 for every tau-adjacent pair and
/// shared action; superadditive rows for every adjacent power step in the same
/// coordinate, feasible in both states.
ConstraintSet build_constraints(const MdpModel& model);
ConstraintSet empty_constraints(const MdpModel& model);

/// Argmax with probability 1 - eps (lexicographic tie-break), otherwise
/// uniform over the feasible set chosen by u2.
ActionId epsilon_greedy(const MdpModel& model, const QTable& q, StateIndex s, double eps, double u,
                        double u2);

/// Index into feasible_actions(s) of the first maximizer of Q(s, .).
std::size_t greedy_local(const MdpModel& model, const std::vector<double>& q, StateIndex s);
double max_q(const MdpModel& model, const std::vector<double>& q, StateIndex s);

/// Q(s,a) += step * [r + max Q(s',.) - Q(s,a) - Q(ref)]. Returns the increment.
double standard_update(const MdpModel& model, QTable& q, const Observation& obs, PairIndex ref_pair,
                       double step);

struct DualCursor {
  std::size_t next_row = 0;
};

/// Primal step on the visited pair with the multiplier correction [T' nu],
/// then the projected dual step on the incident rows plus a round-robin batch
/// (or every row with cfg.full_dual). Returns the primal increment.
double structural_update(const MdpModel& model, QTable& q, ConstraintSet& cs, const Observation& obs,
                         PairIndex ref_pair, double primal_step, double dual_step,
                         const LearnConfig& cfg, DualCursor& cursor);

struct CurvePoint {
  std::uint64_t step = 0;
  double running_avg_reward = 0.0;
  double bellman_residual = 0.0;
  std::size_t violation_count = 0;
};

struct TrainResult {
  QTable q;
  PolicyTable policy;
  std::vector<CurvePoint> curve;
  ConstraintSet constraints;
};

using SnapshotFn = std::function<void(std::uint64_t step, const QTable& q)>;

/// Runs cfg.horizon steps of epsilon-greedy interaction with a fresh
/// environment seeded by cfg.seed. Structural mode needs `constraints`
/// (built from the state-space shape only); standard mode uses them, when
/// given, only for the violation count in the curve.
TrainResult train(const MdpModel& model, LearnMode mode, const LearnConfig& cfg,
                  std::optional<ConstraintSet> constraints = std::nullopt,
                  const SnapshotFn& snapshot = {});

PolicyTable greedy_policy_from_q(const MdpModel& model, const std::vector<double>& q);

}  // namespace hjam
