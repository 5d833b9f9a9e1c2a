#include "hjam/q_learning.hpp"

#include "hjam/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hjam {

double StepSchedule::at(std::uint64_t n) const {
  const std::uint64_t block = std::max<std::uint64_t>(B, 1);
  const auto blocks = static_cast<double>((std::max<std::uint64_t>(n, 1) + block - 1) / block);
  return c / (blocks + k0);
}

// -- constraints -------------------------------------------------------------

void ConstraintSet::add_row(Kind kind,
                            std::initializer_list<std::pair<PairIndex, std::int8_t>> entries) {
  kind_.push_back(kind);
  for (const auto& [p, c] : entries) {
    pairs_.push_back(p);
    coefs_.push_back(c);
  }
  offset_.push_back(pairs_.size());
  if (kind == Kind::kMonotone) ++monotone_;
}

void ConstraintSet::finalize(std::size_t pair_count) {
  incident_offset_.assign(pair_count + 1, 0);
  for (PairIndex p : pairs_) ++incident_offset_[p + 1];
  for (std::size_t p = 0; p < pair_count; ++p) incident_offset_[p + 1] += incident_offset_[p];
  incident_.resize(pairs_.size());
  std::vector<std::size_t> fill(incident_offset_.begin(), incident_offset_.end() - 1);
  for (std::size_t row = 0; row < row_count(); ++row)
    for (std::size_t j = offset_[row]; j < offset_[row + 1]; ++j)
      incident_[fill[pairs_[j]]++] = static_cast<std::uint32_t>(row);
  nu.assign(row_count(), 0.0);
}

double ConstraintSet::evaluate(std::size_t row, const std::vector<double>& q) const {
  double v = 0.0;
  for (std::size_t j = offset_[row]; j < offset_[row + 1]; ++j) v += coefs_[j] * q[pairs_[j]];
  return v;
}

std::size_t ConstraintSet::violations(const std::vector<double>& q, double tol) const {
  std::size_t count = 0;
  for (std::size_t row = 0; row < row_count(); ++row)
    if (evaluate(row, q) < -tol) ++count;
  return count;
}

double ConstraintSet::min_value(const std::vector<double>& q) const {
  double lo = 0.0;
  for (std::size_t row = 0; row < row_count(); ++row) lo = std::min(lo, evaluate(row, q));
  return lo;
}

ConstraintSet empty_constraints(const MdpModel& model) {
  ConstraintSet cs;
  cs.finalize(model.pair_count());
  return cs;
}

ConstraintSet build_constraints(const MdpModel& model) {
  using Kind = ConstraintSet::Kind;
  ConstraintSet cs;
  const int L = model.truncation();
  // Each row is identified by (kind, sensor, lower state, action), so no row
  // can be generated twice.
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    for (StateIndex lo = 0; lo < model.state_count(); ++lo) {
      if (model.tau_of(lo, i) >= L) continue;
      const StateIndex hi = lo + model.tau_stride(i);
      const PairIndex plo = model.pair_offset(lo);
      const PairIndex phi = model.pair_offset(hi);
      const auto feas = model.feasible_actions(lo);
      for (std::size_t k = 0; k < feas.size(); ++k) {
        const auto kk = static_cast<PairIndex>(k);
        cs.add_row(Kind::kMonotone, {{phi + kk, +1}, {plo + kk, -1}});
      }
    }
  }
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    for (StateIndex lo = 0; lo < model.state_count(); ++lo) {
      if (model.tau_of(lo, i) >= L) continue;
      const StateIndex hi = lo + model.tau_stride(i);
      const PairIndex plo = model.pair_offset(lo);
      const PairIndex phi = model.pair_offset(hi);
      const auto feas = model.feasible_actions(lo);
      for (std::size_t k = 0; k < feas.size(); ++k) {
        ActionVec raised = model.action(feas[k]);
        ++raised[i];
        const auto up = model.find_action(raised);
        if (!up) continue;
        const auto kup = model.local_action(lo, *up);
        if (!kup) continue;
        const auto km = static_cast<PairIndex>(k);
        const auto kp = static_cast<PairIndex>(*kup);
        cs.add_row(Kind::kSuperadditive,
                   {{phi + kp, +1}, {phi + km, -1}, {plo + kp, -1}, {plo + km, +1}});
      }
    }
  }
  cs.finalize(model.pair_count());
  return cs;
}

// -- updates -----------------------------------------------------------------

std::size_t greedy_local(const MdpModel& model, const std::vector<double>& q, StateIndex s) {
  const PairIndex base = model.pair_offset(s);
  const std::size_t width = model.feasible_actions(s).size();
  std::size_t arg = 0;
  for (std::size_t k = 1; k < width; ++k)
    if (q[base + k] > q[base + arg]) arg = k;
  return arg;
}

double max_q(const MdpModel& model, const std::vector<double>& q, StateIndex s) {
  return q[model.pair_offset(s) + greedy_local(model, q, s)];
}

ActionId epsilon_greedy(const MdpModel& model, const QTable& q, StateIndex s, double eps, double u,
                        double u2) {
  const auto feas = model.feasible_actions(s);
  if (u < eps) {
    const auto k = std::min(feas.size() - 1, static_cast<std::size_t>(u2 * static_cast<double>(feas.size())));
    return feas[k];
  }
  return feas[greedy_local(model, q.q, s)];
}

namespace {

double td_error(const MdpModel& model, const QTable& q, const Observation& obs, PairIndex pair,
                PairIndex ref_pair) {
  return obs.r + max_q(model, q.q, obs.next) - q.q[pair] - q.q[ref_pair];
}

PairIndex pair_of(const MdpModel& model, const Observation& obs) {
  const auto local = model.local_action(obs.s, obs.a);
  if (!local) throw std::invalid_argument("observed action is infeasible in its state");
  return model.pair_index(obs.s, *local);
}

void check_finite(double v, const char* what, std::size_t where) {
  if (!std::isfinite(v))
    throw DivergenceError(std::string("non-finite ") + what + " at index " + std::to_string(where));
}

}  // namespace

double standard_update(const MdpModel& model, QTable& q, const Observation& obs, PairIndex ref_pair,
                       double step) {
  const PairIndex p = pair_of(model, obs);
  const double inc = step * td_error(model, q, obs, p, ref_pair);
  q.q[p] += inc;
  ++q.visits[p];
  check_finite(q.q[p], "Q", p);
  return inc;
}

double structural_update(const MdpModel& model, QTable& q, ConstraintSet& cs, const Observation& obs,
                         PairIndex ref_pair, double primal_step, double dual_step,
                         const LearnConfig& cfg, DualCursor& cursor) {
  const PairIndex p = pair_of(model, obs);
  const auto incident = cs.rows_of(p);

  // [T' nu]_p
  double correction = 0.0;
  for (std::uint32_t row : incident) {
    const auto pairs = cs.row_pairs(row);
    const auto coefs = cs.row_coefs(row);
    for (std::size_t j = 0; j < pairs.size(); ++j)
      if (pairs[j] == p) correction += coefs[j] * cs.nu[row];
  }
  const double inc = primal_step * (td_error(model, q, obs, p, ref_pair) + correction);

  // Dual step evaluated at Q_k, before the primal write.
  auto dual = [&](std::size_t row) {
    double v = cs.nu[row] - dual_step * cs.evaluate(row, q.q);
    if (cfg.dual_projection) v = std::max(0.0, v);
    check_finite(v, "multiplier", row);
    cs.nu[row] = v;
  };
  const std::size_t rows = cs.row_count();
  if (cfg.full_dual) {
    for (std::size_t row = 0; row < rows; ++row) dual(row);
  } else if (rows > 0) {
    for (std::uint32_t row : incident) dual(row);
    const std::size_t batch = std::min(cfg.dual_batch, rows);
    for (std::size_t j = 0; j < batch; ++j) {
      const std::size_t row = cursor.next_row;
      cursor.next_row = (cursor.next_row + 1) % rows;
      if (std::find(incident.begin(), incident.end(), static_cast<std::uint32_t>(row)) != incident.end())
        continue;
      dual(row);
    }
  }

  q.q[p] += inc;
  ++q.visits[p];
  check_finite(q.q[p], "Q", p);
  return inc;
}

PolicyTable greedy_policy_from_q(const MdpModel& model, const std::vector<double>& q) {
  PolicyTable pt;
  pt.action.resize(model.state_count());
  for (StateIndex s = 0; s < model.state_count(); ++s)
    pt.action[s] = model.feasible_actions(s)[greedy_local(model, q, s)];
  return pt;
}

TrainResult train(const MdpModel& model, LearnMode mode, const LearnConfig& cfg,
                  std::optional<ConstraintSet> constraints, const SnapshotFn& snapshot) {
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw ValidationError("epsilon must lie in [0,1]");
  const StateIndex ref_state = cfg.ref_state.value_or(model.default_reference());
  if (ref_state >= model.state_count()) throw ValidationError("reference state out of range");
  const auto ref_local = model.local_action(ref_state, cfg.ref_action);
  if (!ref_local) throw ValidationError("reference action is infeasible in the reference state");
  const PairIndex ref_pair = model.pair_index(ref_state, *ref_local);

  TrainResult res;
  res.q = QTable::zeros(model, cfg.q_init);
  if (mode == LearnMode::kStructural && !constraints)
    throw ValidationError("structural mode needs a constraint set");
  res.constraints = constraints ? std::move(*constraints) : empty_constraints(model);

  std::vector<std::uint64_t> marks = cfg.checkpoints;
  std::sort(marks.begin(), marks.end());
  std::size_t next_mark = 0;

  Environment env(model, cfg.seed);
  DualCursor cursor;
  double reward_sum = 0.0;
  for (std::uint64_t k = 1; k <= cfg.horizon; ++k) {
    Observation obs;
    obs.s = env.state_index();
    const double u = env.uniform();
    const double u2 = env.uniform();
    obs.a = epsilon_greedy(model, res.q, obs.s, cfg.epsilon, u, u2);
    obs.r = model.reward(obs.s, obs.a);
    env.step(obs.a);
    obs.next = env.state_index();
    reward_sum += obs.r;

    const auto visit_clock = [&] {
      const auto local = *model.local_action(obs.s, obs.a);
      return static_cast<std::uint64_t>(res.q.visits[model.pair_index(obs.s, local)]) + 1;
    };
    const std::uint64_t n = cfg.clock == StepClock::kVisit ? visit_clock() : k;
    if (mode == LearnMode::kStandard) {
      standard_update(model, res.q, obs, ref_pair, cfg.xi.at(n));
    } else {
      structural_update(model, res.q, res.constraints, obs, ref_pair, cfg.zeta.at(n),
                        cfg.dual_scale * cfg.zeta.at(k), cfg, cursor);
    }

    bool log = cfg.eval_every > 0 && k % cfg.eval_every == 0;
    while (next_mark < marks.size() && marks[next_mark] <= k) {
      log = log || marks[next_mark] == k;
      ++next_mark;
    }
    if (log) {
      CurvePoint pt;
      pt.step = k;
      pt.running_avg_reward = reward_sum / static_cast<double>(k);
      if (cfg.log_residual) pt.bellman_residual = q_bellman_residual(model, res.q.q, res.q.q[ref_pair]);
      if (cfg.log_violations && res.constraints.row_count() > 0)
        pt.violation_count = res.constraints.violations(res.q.q, cfg.violation_tol);
      res.curve.push_back(pt);
    }
    if (snapshot && cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0) snapshot(k, res.q);
  }
  res.policy = greedy_policy_from_q(model, res.q.q);
  return res;
}

}  // namespace hjam
