#include "hjam/rvi.hpp"

#include "hjam/errors.hpp"
#include "hjam/kernels.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hjam {
namespace {

/// One Jacobi pass: out[s] = max_a r + E v, best[s] = lexicographically first
/// maximizer. With pruning, states are visited in increasing index order
/// inside each tau block so tau-predecessors are settled first.
std::size_t greedy_sweep(const MdpModel& model, const double* v, bool pruned, unsigned threads,
                         double* out, ActionId* best) {
  const std::size_t block = model.tau_block_size();
  const std::size_t blocks = model.state_count() / block;
  const std::size_t n = model.sensor_count();
  const unsigned workers = detail::resolve_threads(threads);
  std::vector<std::size_t> evaluated(workers, 0);

  detail::parallel_for(blocks, workers, [&](std::size_t w, std::size_t b0, std::size_t b1) {
    SuccessorScratch sc;
    std::vector<int> floor_power(n, 0);
    std::size_t count = 0;
    for (std::size_t blk = b0; blk < b1; ++blk) {
      const auto first = static_cast<StateIndex>(blk * block);
      const auto last = static_cast<StateIndex>(first + block);
      for (StateIndex s = first; s < last; ++s) {
        if (pruned) {
          for (std::size_t i = 0; i < n; ++i)
            floor_power[i] = model.tau_of(s, i) > 0
                                 ? model.action(best[s - model.tau_stride(i)])[i]
                                 : 0;
        }
        double top = -std::numeric_limits<double>::infinity();
        ActionId arg = 0;
        for (ActionId a : model.feasible_actions(s)) {
          if (pruned) {
            const auto& act = model.action(a);
            bool skip = false;
            for (std::size_t i = 0; i < n && !skip; ++i) skip = act[i] < floor_power[i];
            if (skip) continue;
          }
          const double q = model.reward(s, a) + model.expected_value(s, a, v, sc);
          ++count;
          if (q > top) {
            top = q;
            arg = a;
          }
        }
        out[s] = top;
        best[s] = arg;
      }
    }
    evaluated[w] = count;
  });
  std::size_t total = 0;
  for (auto c : evaluated) total += c;
  return total;
}

}  // namespace

RviResult rvi_solve(const MdpModel& model, const RviOptions& opts) {
  if (!(opts.span_tol > 0.0)) throw ValidationError("span_tol must be positive");
  const std::size_t S = model.state_count();
  const StateIndex ref = opts.reference.value_or(model.default_reference());
  if (ref >= S) throw ValidationError("reference state index out of range");

  RviResult res;
  std::vector<double> prev(S, 0.0);
  std::vector<double> next(S, 0.0);
  std::vector<ActionId> best(S, 0);
  double span = std::numeric_limits<double>::infinity();
  double j = 0.0;

  for (std::size_t t = 1; t <= opts.max_sweeps; ++t) {
    res.backups += greedy_sweep(model, prev.data(), opts.pruned, opts.threads, next.data(), best.data());
    j = next[ref];
    kernels::subtract_scalar(next, j);
    next[ref] = 0.0;
    const auto mm = kernels::diff_minmax(next, prev);
    span = mm.max - mm.min;
    res.sweeps.push_back({t, span, j});
    std::swap(prev, next);
    if (span < opts.span_tol) {
      res.converged = true;
      break;
    }
  }
  if (!res.converged && opts.throw_on_nonconvergence)
    throw ConvergenceError("relative value iteration did not converge within " +
                               std::to_string(opts.max_sweeps) + " sweeps (span " +
                               std::to_string(span) + ")",
                           span);

  res.values.v = std::move(prev);
  res.values.j_star = j;
  res.values.reference = ref;

  res.policy.action.assign(S, 0);
  res.backups += greedy_sweep(model, res.values.v.data(), opts.pruned, opts.threads, next.data(),
                              res.policy.action.data());
  return res;
}

PolicyTable extract_policy(const MdpModel& model, const ValueTable& vt, unsigned threads) {
  PolicyTable pt;
  pt.action.assign(model.state_count(), 0);
  std::vector<double> scratch(model.state_count());
  greedy_sweep(model, vt.v.data(), false, threads, scratch.data(), pt.action.data());
  return pt;
}

QTableExact q_from_v(const MdpModel& model, const ValueTable& vt) {
  QTableExact qt;
  qt.q.resize(model.pair_count());
  SuccessorScratch sc;
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    const auto feas = model.feasible_actions(s);
    const PairIndex base = model.pair_offset(s);
    for (std::size_t k = 0; k < feas.size(); ++k)
      qt.q[base + k] =
          model.reward(s, feas[k]) + model.expected_value(s, feas[k], vt.v.data(), sc) - vt.j_star;
  }
  return qt;
}

double bellman_residual(const MdpModel& model, const ValueTable& vt) {
  std::vector<double> backed(model.state_count());
  std::vector<ActionId> best(model.state_count());
  greedy_sweep(model, vt.v.data(), false, 0, backed.data(), best.data());
  double worst = 0.0;
  for (StateIndex s = 0; s < model.state_count(); ++s)
    worst = std::max(worst, std::abs(vt.j_star + vt.v[s] - backed[s]));
  return worst;
}

double q_bellman_residual(const MdpModel& model, const std::vector<double>& q, double j_star) {
  std::vector<double> vmax(model.state_count());
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    const PairIndex base = model.pair_offset(s);
    const std::size_t width = model.feasible_actions(s).size();
    vmax[s] = *std::max_element(q.begin() + base, q.begin() + base + static_cast<std::ptrdiff_t>(width));
  }
  double worst = 0.0;
  SuccessorScratch sc;
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    const auto feas = model.feasible_actions(s);
    const PairIndex base = model.pair_offset(s);
    for (std::size_t k = 0; k < feas.size(); ++k) {
      const double rhs = model.reward(s, feas[k]) + model.expected_value(s, feas[k], vmax.data(), sc);
      worst = std::max(worst, std::abs(j_star + q[base + k] - rhs));
    }
  }
  return worst;
}

std::string to_string(StructureViolation::Kind kind) {
  switch (kind) {
    case StructureViolation::Kind::kMonotoneV: return "monotone_V";
    case StructureViolation::Kind::kMonotoneQ: return "monotone_Q";
    case StructureViolation::Kind::kSuperadditiveQ: return "superadditive_Q";
    case StructureViolation::Kind::kMonotonePolicy: return "monotone_policy";
  }
  return "unknown";
}

StructureReport verify_structure(const MdpModel& model, const ValueTable& vt, const PolicyTable& pt,
                                 const QTableExact& qt, double tol, std::size_t max_counterexamples) {
  StructureReport rep;
  const auto L = model.truncation();
  auto record = [&](StructureViolation v) {
    ++rep.violation_count;
    switch (v.kind) {
      case StructureViolation::Kind::kMonotoneV: rep.monotone_V = false; break;
      case StructureViolation::Kind::kMonotoneQ: rep.monotone_Q = false; break;
      case StructureViolation::Kind::kSuperadditiveQ: rep.superadditive_Q = false; break;
      case StructureViolation::Kind::kMonotonePolicy: rep.monotone_policy = false; break;
    }
    if (rep.counterexamples.size() < max_counterexamples) rep.counterexamples.push_back(v);
  };

  using Kind = StructureViolation::Kind;
  for (StateIndex lo = 0; lo < model.state_count(); ++lo) {
    const auto feas = model.feasible_actions(lo);
    for (std::size_t i = 0; i < model.sensor_count(); ++i) {
      if (model.tau_of(lo, i) >= L) continue;
      const StateIndex hi = lo + model.tau_stride(i);

      if (vt.v[lo] > vt.v[hi] + tol) record({Kind::kMonotoneV, i, lo, hi, 0, 0, vt.v[lo] - vt.v[hi]});

      if (model.action(pt.action[lo])[i] > model.action(pt.action[hi])[i])
        record({Kind::kMonotonePolicy, i, lo, hi, pt.action[lo], pt.action[hi], 1.0});

      // Both states share b, hence the same feasible list and local positions.
      const PairIndex plo = model.pair_offset(lo);
      const PairIndex phi = model.pair_offset(hi);
      for (std::size_t k = 0; k < feas.size(); ++k) {
        const double d = qt.q[plo + k] - qt.q[phi + k];
        if (d > tol) record({Kind::kMonotoneQ, i, lo, hi, feas[k], feas[k], d});

        // Partner action: same vector with power i raised by one.
        ActionVec raised = model.action(feas[k]);
        ++raised[i];
        const auto up = model.find_action(raised);
        if (!up) continue;
        const auto kup = model.local_action(lo, *up);
        if (!kup) continue;
        const double gain_hi = qt.q[phi + *kup] - qt.q[phi + k];
        const double gain_lo = qt.q[plo + *kup] - qt.q[plo + k];
        if (gain_lo - gain_hi > tol)
          record({Kind::kSuperadditiveQ, i, lo, hi, feas[k], *up, gain_lo - gain_hi});
      }
    }
  }
  return rep;
}

}  // namespace hjam
