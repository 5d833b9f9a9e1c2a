#include "hjam/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hjam {

Environment::Environment(const MdpModel& model, std::uint64_t seed) : model_(&model) {
  for (std::size_t i = 0; i < model.sensor_count(); ++i)
    traces_.push_back(model.steady(i).trace_table);
  reset(seed);
}

void Environment::reset(std::uint64_t seed) {
  const auto& cfg = model_->config();
  rng_ = Rng(seed);
  auto pick = [&](std::size_t n) {
    return static_cast<int>(std::min(n - 1, static_cast<std::size_t>(rng_.uniform() * n)));
  };
  state_ = EnvState{};
  state_.view.b = cfg.battery.b_max;
  state_.view.e = pick(cfg.energy_chain.size());
  state_.view.sensors.resize(model_->sensor_count());
  for (std::size_t i = 0; i < model_->sensor_count(); ++i) {
    state_.view.sensors[i].h = pick(cfg.h_chain(i).size());
    state_.view.sensors[i].g = pick(cfg.g_chain(i).size());
    state_.view.sensors[i].tau = 0;
  }
  state_.true_tau.assign(model_->sensor_count(), 0);
}

double Environment::trace(std::size_t sensor, std::size_t t) {
  auto& table = traces_[sensor];
  if (t >= table.size()) {
    const std::size_t want = std::max(t + 1, 2 * table.size());
    table = trace_powers(model_->config().systems[sensor], model_->steady(sensor).p_bar, want);
  }
  return table[t];
}

StepResult Environment::step(ActionId a) {
  const auto& cfg = model_->config();
  const std::size_t n = model_->sensor_count();
  const auto& act = model_->action(a);
  int total = 0;
  for (int p : act) total += p;
  if (total > state_.view.b) throw std::invalid_argument("infeasible action for the current battery");

  StepResult out;
  out.gamma.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = state_.view.sensors[i];
    const double lam = model_->lambda(i, c.h, c.g, act[i]);
    const auto tau = static_cast<std::size_t>(state_.true_tau[i]);
    out.expected_reward += lam * trace(i, 0) + (1.0 - lam) * trace(i, tau + 1);
    out.gamma[i] = rng_.uniform() < lam ? 1 : 0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    state_.true_tau[i] = out.gamma[i] ? 0 : state_.true_tau[i] + 1;
    auto& c = state_.view.sensors[i];
    c.tau = std::min(state_.true_tau[i], cfg.L);
    c.h = static_cast<int>(cfg.h_chain(i).step(static_cast<std::size_t>(c.h), rng_.uniform()));
    c.g = static_cast<int>(cfg.g_chain(i).step(static_cast<std::size_t>(c.g), rng_.uniform()));
    out.realized_trace += trace(i, static_cast<std::size_t>(state_.true_tau[i]));
  }
  const auto e = static_cast<std::size_t>(state_.view.e);
  state_.view.b = battery_update(cfg.battery, state_.view.b, total, cfg.energy_chain.value(e));
  state_.view.e = static_cast<int>(cfg.energy_chain.step(e, rng_.uniform()));
  ++state_.step;
  return out;
}

PolicyFn table_policy(const PolicyTable& pt) {
  return [actions = pt.action](StateIndex s, double) { return actions[s]; };
}

ActionId greedy_action(const MdpModel& model, StateIndex s) {
  const std::size_t n = model.sensor_count();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return model.tau_of(s, x) > model.tau_of(s, y);
  });
  ActionVec act(n, 0);
  int remaining = model.battery_of(s);
  for (std::size_t i : order) {
    const int p = std::min(model.config().battery.p_max, remaining);
    act[i] = p;
    remaining -= p;
    if (remaining == 0) break;
  }
  return *model.find_action(act);
}

PolicyFn greedy_policy(const MdpModel& model) {
  return [&model](StateIndex s, double) { return greedy_action(model, s); };
}

ActionId random_action(const MdpModel& model, StateIndex s, double u) {
  const auto feas = model.feasible_actions(s);
  const auto k = std::min(feas.size() - 1, static_cast<std::size_t>(u * static_cast<double>(feas.size())));
  return feas[k];
}

PolicyFn random_policy(const MdpModel& model) {
  return [&model](StateIndex s, double u) { return random_action(model, s, u); };
}

RolloutReport rollout(const MdpModel& model, const PolicyFn& policy, std::uint64_t horizon,
                      std::uint64_t seed, const RolloutOptions& opts) {
  RolloutReport rep;
  rep.horizon = horizon;
  rep.seed = seed;
  Environment env(model, seed);
  rep.initial = env.state().view;
  const std::size_t batches = std::max<std::size_t>(1, std::min<std::uint64_t>(opts.batches, std::max<std::uint64_t>(horizon, 1)));
  const std::uint64_t per_batch = std::max<std::uint64_t>(1, horizon / batches);

  double sum = 0.0;
  double sum_expected = 0.0;
  double batch = 0.0;
  double batch_expected = 0.0;
  std::uint64_t in_batch = 0;
  const int b_max = model.config().battery.b_max;
  for (std::uint64_t k = 0; k < horizon; ++k) {
    const StateIndex s = env.state_index();
    const double u = env.uniform();
    const ActionId a = policy(s, u);
    StepTrace st;
    if (opts.keep_trace) {
      st.k = k;
      st.state = env.state().view;
      st.true_tau = env.state().true_tau;
      st.action = a;
    }
    const StepResult r = env.step(a);
    sum += r.realized_trace;
    sum_expected += r.expected_reward;
    batch += r.realized_trace;
    batch_expected += r.expected_reward;
    const int b = env.state().view.b;
    if (b < 0 || b > b_max) rep.battery_in_range = false;
    if (opts.keep_trace) {
      st.gamma = r.gamma;
      st.realized_trace = r.realized_trace;
      rep.trace.push_back(std::move(st));
    }
    if (++in_batch == per_batch && rep.batch_means.size() < batches) {
      rep.batch_means.push_back(batch / static_cast<double>(per_batch));
      rep.batch_means_expected.push_back(batch_expected / static_cast<double>(per_batch));
      batch = batch_expected = 0.0;
      in_batch = 0;
    }
  }
  if (horizon > 0) {
    rep.avg_reward = sum / static_cast<double>(horizon);
    rep.avg_expected = sum_expected / static_cast<double>(horizon);
  }
  return rep;
}

double batch_standard_error(const std::vector<double>& m) {
  if (m.size() < 2) return 0.0;
  const double mean = std::accumulate(m.begin(), m.end(), 0.0) / static_cast<double>(m.size());
  double ss = 0.0;
  for (double x : m) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(m.size() - 1);
  return std::sqrt(var / static_cast<double>(m.size()));
}

}  // namespace hjam
