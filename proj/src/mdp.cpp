#include "hjam/mdp.hpp"

#include "hjam/errors.hpp"
#include "hjam/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace hjam {

const MarkovChain& ProblemConfig::h_chain(std::size_t i) const {
  return per_sensor_channels.empty() ? channel_chain : per_sensor_channels.at(i).H;
}

const MarkovChain& ProblemConfig::g_chain(std::size_t i) const {
  return per_sensor_channels.empty() ? channel_chain : per_sensor_channels.at(i).G;
}

const LinkModel& ProblemConfig::link(std::size_t i) const {
  return links.size() == 1 ? links.front() : links.at(i);
}

void ProblemConfig::validate() const {
  if (systems.empty()) throw ValidationError("at least one sensor system is required");
  if (L < 0) throw ValidationError("truncation L must be nonnegative");
  for (std::size_t i = 0; i < systems.size(); ++i) {
    try {
      systems[i].validate(validation);
    } catch (const ValidationError& err) {
      throw ValidationError("system " + std::to_string(i) + ": " + err.what());
    }
  }
  if (per_sensor_channels.empty()) {
    if (channel_chain.size() == 0) throw ValidationError("channel chain is empty");
  } else if (per_sensor_channels.size() != systems.size()) {
    throw ValidationError("per-sensor channel list must have one entry per sensor");
  }
  for (std::size_t i = 0; i < systems.size(); ++i)
    if (h_chain(i).size() == 0 || g_chain(i).size() == 0)
      throw ValidationError("channel chain for sensor " + std::to_string(i) + " is empty");
  if (energy_chain.size() == 0) throw ValidationError("energy chain is empty");
  if (links.size() != 1 && links.size() != systems.size())
    throw ValidationError("links must have one entry or one per sensor");
  for (const auto& link : links) link.validate();
  battery.validate();
}

MdpModel::MdpModel(ProblemConfig config, MdpOptions options) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n = config_.systems.size();
  const auto L = static_cast<std::size_t>(config_.L);

  for (const auto& sys : config_.systems)
    steady_.push_back(steady_state(sys, L, config_.riccati));

  // Mixed-radix layout, least significant digit last.
  sensor_.resize(n);
  std::size_t stride = 1;
  const auto limit = std::min<std::size_t>(config_.max_states,
                                           std::numeric_limits<StateIndex>::max() / 2);
  auto grow = [&](std::size_t radix) {
    const std::size_t before = stride;
    if (stride > limit / radix)
      throw ValidationError("state space exceeds the configured budget of " +
                            std::to_string(config_.max_states) +
                            " states; reduce L or the number of sensors");
    stride *= radix;
    return static_cast<StateIndex>(before);
  };
  for (std::size_t i = n; i-- > 0;) {
    auto& lay = sensor_[i];
    lay.h_size = config_.h_chain(i).size();
    lay.g_size = config_.g_chain(i).size();
    lay.stride_tau = grow(L + 1);
    lay.stride_g = grow(lay.g_size);
    lay.stride_h = grow(lay.h_size);
  }
  stride_e_ = grow(config_.energy_chain.size());
  stride_b_ = grow(static_cast<std::size_t>(config_.battery.b_max) + 1);
  state_count_ = stride;

  // Global action list in lexicographic order; sum bounded by b_max.
  const int pmax = config_.battery.p_max;
  power_levels_ = static_cast<std::size_t>(pmax) + 1;
  ActionVec cur(n, 0);
  while (true) {
    int total = 0;
    for (int p : cur) total += p;
    if (total <= config_.battery.b_max) {
      actions_.push_back(cur);
      action_total_.push_back(total);
    }
    std::size_t k = n;
    while (k > 0 && cur[k - 1] == pmax) cur[--k] = 0;
    if (k == 0) break;
    ++cur[k - 1];
  }

  const auto levels = static_cast<std::size_t>(config_.battery.b_max) + 1;
  feasible_by_battery_.resize(levels);
  pair_base_.resize(levels + 1, 0);
  for (std::size_t b = 0; b < levels; ++b) {
    for (ActionId a = 0; a < actions_.size(); ++a)
      if (action_total_[a] <= static_cast<int>(b)) feasible_by_battery_[b].push_back(a);
    pair_base_[b + 1] = pair_base_[b] + stride_b_ * feasible_by_battery_[b].size();
  }
  pair_count_ = pair_base_.back();
  if (pair_count_ >= std::numeric_limits<PairIndex>::max())
    throw ValidationError("too many state-action pairs");

  lambda_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& lay = sensor_[i];
    const auto& link = config_.link(i);
    lambda_[i].resize(lay.h_size * lay.g_size * power_levels_);
    for (std::size_t h = 0; h < lay.h_size; ++h)
      for (std::size_t g = 0; g < lay.g_size; ++g)
        for (std::size_t p = 0; p < power_levels_; ++p) {
          const double s = sinr(link, config_.h_chain(i).value(h), config_.g_chain(i).value(g),
                                static_cast<double>(p));
          lambda_[i][(h * lay.g_size + g) * power_levels_ + p] =
              std::clamp(arrival_rate(link, s), 0.0, 1.0);
        }
  }

  if (options.eager_cache) build_cache(options.cache_budget_bytes);
}

StateIndex MdpModel::encode(const MdpState& s) const {
  const std::size_t n = sensor_count();
  auto check = [](int v, std::size_t radix, const char* what) {
    if (v < 0 || static_cast<std::size_t>(v) >= radix)
      throw std::out_of_range(std::string("state component out of range: ") + what);
    return static_cast<StateIndex>(v);
  };
  if (s.sensors.size() != n) throw std::out_of_range("state has the wrong number of sensors");
  StateIndex idx = check(s.b, static_cast<std::size_t>(config_.battery.b_max) + 1, "b") * stride_b_ +
                   check(s.e, config_.energy_chain.size(), "e") * stride_e_;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = s.sensors[i];
    idx += check(c.h, sensor_[i].h_size, "h") * sensor_[i].stride_h +
           check(c.g, sensor_[i].g_size, "g") * sensor_[i].stride_g +
           check(c.tau, static_cast<std::size_t>(config_.L) + 1, "tau") * sensor_[i].stride_tau;
  }
  return idx;
}

MdpState MdpModel::decode(StateIndex s) const {
  if (s >= state_count_) throw std::out_of_range("state index out of range");
  MdpState out;
  out.b = battery_of(s);
  out.e = energy_of(s);
  out.sensors.resize(sensor_count());
  for (std::size_t i = 0; i < sensor_count(); ++i)
    out.sensors[i] = SensorCoord{h_of(s, i), g_of(s, i), tau_of(s, i)};
  return out;
}

StateIndex MdpModel::default_reference() const {
  return static_cast<StateIndex>(config_.battery.b_max) * stride_b_;
}

std::optional<ActionId> MdpModel::find_action(const ActionVec& a) const {
  const auto it = std::lower_bound(actions_.begin(), actions_.end(), a);
  if (it == actions_.end() || *it != a) return std::nullopt;
  return static_cast<ActionId>(it - actions_.begin());
}

std::optional<std::size_t> MdpModel::local_action(StateIndex s, ActionId a) const {
  const auto feas = feasible_actions(s);
  const auto it = std::lower_bound(feas.begin(), feas.end(), a);
  if (it == feas.end() || *it != a) return std::nullopt;
  return static_cast<std::size_t>(it - feas.begin());
}

std::pair<StateIndex, std::size_t> MdpModel::pair_state(PairIndex p) const {
  const auto it = std::upper_bound(pair_base_.begin(), pair_base_.end(), std::size_t{p});
  const auto b = static_cast<std::size_t>(it - pair_base_.begin()) - 1;
  const std::size_t width = feasible_by_battery_[b].size();
  const std::size_t rel = p - pair_base_[b];
  return {static_cast<StateIndex>(b * stride_b_ + rel / width), rel % width};
}

double MdpModel::reward(StateIndex s, ActionId a) const {
  const auto& act = actions_[a];
  double r = 0.0;
  for (std::size_t i = 0; i < sensor_count(); ++i) {
    const double lam = lambda(i, h_of(s, i), g_of(s, i), act[i]);
    const auto& table = steady_[i].trace_table;
    const auto t = static_cast<std::size_t>(tau_of(s, i)) + 1;
    r += lam * table[0] + (1.0 - lam) * table[t];
  }
  return r;
}

double MdpModel::reward_bound() const {
  double bound = 0.0;
  for (const auto& st : steady_) bound += st.trace_table.back();
  return bound;
}

int MdpModel::next_battery(StateIndex s, ActionId a) const {
  return battery_update(config_.battery, battery_of(s), action_total_[a],
                        config_.energy_chain.value(static_cast<std::size_t>(energy_of(s))));
}

void MdpModel::generate(StateIndex s, ActionId a, SuccessorScratch& sc) const {
  auto& idx = sc.index;
  auto& prob = sc.prob;
  idx.clear();
  prob.clear();

  const auto b_next = static_cast<StateIndex>(next_battery(s, a));
  const auto e = static_cast<std::size_t>(energy_of(s));
  const auto& echain = config_.energy_chain;
  for (std::size_t e2 = 0; e2 < echain.size(); ++e2) {
    const double p = echain.prob(e, e2);
    if (p <= 0.0) continue;
    idx.push_back(b_next * stride_b_ + static_cast<StateIndex>(e2) * stride_e_);
    prob.push_back(p);
  }

  const auto& act = actions_[a];
  const auto L = config_.L;
  for (std::size_t i = 0; i < sensor_count(); ++i) {
    const auto& lay = sensor_[i];
    const int h = h_of(s, i);
    const int g = g_of(s, i);
    const int tau = tau_of(s, i);
    const double lam = lambda(i, h, g, act[i]);
    const auto tau_loss = static_cast<StateIndex>(std::min(tau + 1, L));
    const auto& hc = config_.h_chain(i);
    const auto& gc = config_.g_chain(i);

    sc.tmp_index.clear();
    sc.tmp_prob.clear();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      for (std::size_t h2 = 0; h2 < lay.h_size; ++h2) {
        const double ph = hc.prob(static_cast<std::size_t>(h), h2);
        if (ph <= 0.0) continue;
        for (std::size_t g2 = 0; g2 < lay.g_size; ++g2) {
          const double pg = gc.prob(static_cast<std::size_t>(g), g2);
          if (pg <= 0.0) continue;
          const double base = prob[k] * ph * pg;
          const StateIndex at = idx[k] + static_cast<StateIndex>(h2) * lay.stride_h +
                                static_cast<StateIndex>(g2) * lay.stride_g;
          if (lam > 0.0) {
            sc.tmp_index.push_back(at);
            sc.tmp_prob.push_back(base * lam);
          }
          if (lam < 1.0) {
            sc.tmp_index.push_back(at + tau_loss * lay.stride_tau);
            sc.tmp_prob.push_back(base * (1.0 - lam));
          }
        }
      }
    }
    std::swap(idx, sc.tmp_index);
    std::swap(prob, sc.tmp_prob);
  }
}

SuccessorView MdpModel::successors(StateIndex s, ActionId a, SuccessorScratch& scratch) const {
  if (has_cache()) {
    const auto local = local_action(s, a);
    if (!local) throw std::invalid_argument("action is infeasible in this state");
    const PairIndex p = pair_index(s, *local);
    const std::size_t lo = cache_offset_[p];
    const std::size_t hi = cache_offset_[p + 1];
    return {std::span<const StateIndex>(cache_index_.data() + lo, hi - lo),
            std::span<const double>(cache_prob_.data() + lo, hi - lo)};
  }
  if (action_total_[a] > battery_of(s))
    throw std::invalid_argument("action is infeasible in this state");
  generate(s, a, scratch);
  return {scratch.index, scratch.prob};
}

double MdpModel::expected_value(StateIndex s, ActionId a, const double* v,
                                SuccessorScratch& scratch) const {
  const auto view = successors(s, a, scratch);
  return kernels::gather_dot(view.prob, view.index, v);
}

void MdpModel::build_cache(std::size_t budget) {
  // Upper bound on successors per pair, to decide before allocating.
  std::size_t per_pair = config_.energy_chain.size();
  for (const auto& lay : sensor_) per_pair *= lay.h_size * lay.g_size * 2;
  if (per_pair * pair_count_ * (sizeof(StateIndex) + sizeof(double)) > budget) return;

  std::vector<std::size_t> offset;
  offset.reserve(pair_count_ + 1);
  offset.push_back(0);
  SuccessorScratch sc;
  for (StateIndex s = 0; s < state_count_; ++s) {
    for (ActionId a : feasible_actions(s)) {
      generate(s, a, sc);
      cache_index_.insert(cache_index_.end(), sc.index.begin(), sc.index.end());
      cache_prob_.insert(cache_prob_.end(), sc.prob.begin(), sc.prob.end());
      offset.push_back(cache_index_.size());
    }
  }
  cache_offset_ = std::move(offset);
}

std::vector<AssumptionResult> check_assumption1(const MdpModel& model, WorstPower variant) {
  const auto& cfg = model.config();
  const double p_worst = variant == WorstPower::kPerChannelCap
                             ? std::min(cfg.battery.p_max, cfg.battery.b_max)
                             : cfg.battery.b_max;
  std::vector<AssumptionResult> out;
  for (std::size_t i = 0; i < model.sensor_count(); ++i) {
    const auto& hc = cfg.h_chain(i);
    const auto& gc = cfg.g_chain(i);
    const auto& link = cfg.link(i);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t h0 = 0; h0 < hc.size(); ++h0) {
      for (std::size_t g0 = 0; g0 < gc.size(); ++g0) {
        double expected = 0.0;
        for (std::size_t h1 = 0; h1 < hc.size(); ++h1)
          for (std::size_t g1 = 0; g1 < gc.size(); ++g1) {
            const double rate = arrival_rate(link, sinr(link, hc.value(h1), gc.value(g1), p_worst));
            expected += rate * hc.prob(h0, h1) * gc.prob(g0, g1);
          }
        worst = std::min(worst, expected);
      }
    }
    AssumptionResult res;
    res.spectral_norm = spectral_norm(cfg.systems[i].A);
    res.worst_expected_rate = worst;
    const double norm2 = res.spectral_norm * res.spectral_norm;
    res.kappa = std::max(0.0, norm2 * (1.0 - worst));
    // kappa must be strictly below one; values within rounding of one count as the boundary.
    res.holds = res.kappa < 1.0 - 1e-12;
    out.push_back(res);
  }
  return out;
}

}  // namespace hjam
