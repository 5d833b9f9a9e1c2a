#pragma once

// The truncated average-reward MDP seen by the harvest-and-jam attacker.
//
// A state is (b, e, (h_1, g_1, tau_1), ..., (h_N, g_N, tau_N)) where b is the
// battery level, e the energy-chain state, h_i/g_i the sensor->estimator and
// attacker->estimator channel states, and tau_i in {0..L} the holding time of
// sensor i before the current slot. States are numbered in mixed radix with b
// as the most significant digit and tau_N as the least, so all states sharing
// a battery level are contiguous.

#include "hjam/kalman.hpp"
#include "hjam/stochastic_env.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hjam {

using StateIndex = std::uint32_t;
using ActionId = std::uint32_t;
using PairIndex = std::uint32_t;

/// One power level per sensor.
using ActionVec = std::vector<int>;

struct ChannelPair {
  MarkovChain H;
  MarkovChain G;
};

struct ProblemConfig {
  std::vector<LtiSystem> systems;
  /// Shared by every H and G link unless `per_sensor_channels` is non-empty.
  MarkovChain channel_chain;
  std::vector<ChannelPair> per_sensor_channels;
  MarkovChain energy_chain;
  /// One per sensor; a single entry is broadcast to all sensors.
  std::vector<LinkModel> links;
  BatteryModel battery;
  int L = 20;

  ValidationOptions validation;
  SteadyStateOptions riccati;
  /// Upper bound on the enumerated state count.
  std::size_t max_states = 20'000'000;

  std::size_t sensor_count() const noexcept { return systems.size(); }
  const MarkovChain& h_chain(std::size_t i) const;
  const MarkovChain& g_chain(std::size_t i) const;
  const LinkModel& link(std::size_t i) const;

  /// Throws ValidationError naming the failing sub-model.
  void validate() const;
};

struct SensorCoord {
  int h = 0;
  int g = 0;
  int tau = 0;

  friend bool operator==(const SensorCoord&, const SensorCoord&) = default;
};

struct MdpState {
  int b = 0;
  int e = 0;
  std::vector<SensorCoord> sensors;

  friend bool operator==(const MdpState&, const MdpState&) = default;
};

/// Successors of one (state, action) pair; zero-probability entries omitted.
struct SuccessorView {
  std::span<const StateIndex> index;
  std::span<const double> prob;
};

/// Reusable storage for lazily generated successor lists.
struct SuccessorScratch {
  std::vector<StateIndex> index;
  std::vector<double> prob;
  std::vector<StateIndex> tmp_index;
  std::vector<double> tmp_prob;
};

struct MdpOptions {
  /// Materialize every successor list at construction if it fits the budget.
  bool eager_cache = false;
  std::size_t cache_budget_bytes = std::size_t{1} << 30;
};

class MdpModel {
 public:
  explicit MdpModel(ProblemConfig config, MdpOptions options = {});

  const ProblemConfig& config() const noexcept { return config_; }
  std::size_t sensor_count() const noexcept { return config_.systems.size(); }
  int truncation() const noexcept { return config_.L; }

  // -- state indexing -------------------------------------------------------
  std::size_t state_count() const noexcept { return state_count_; }
  StateIndex encode(const MdpState& s) const;
  MdpState decode(StateIndex s) const;
  int battery_of(StateIndex s) const noexcept { return static_cast<int>(s / stride_b_); }
  int energy_of(StateIndex s) const noexcept {
    return static_cast<int>((s / stride_e_) % config_.energy_chain.size());
  }
  int h_of(StateIndex s, std::size_t i) const noexcept {
    return static_cast<int>((s / sensor_[i].stride_h) % sensor_[i].h_size);
  }
  int g_of(StateIndex s, std::size_t i) const noexcept {
    return static_cast<int>((s / sensor_[i].stride_g) % sensor_[i].g_size);
  }
  int tau_of(StateIndex s, std::size_t i) const noexcept {
    return static_cast<int>((s / sensor_[i].stride_tau) % (config_.L + 1));
  }
  StateIndex tau_stride(std::size_t i) const noexcept { return sensor_[i].stride_tau; }
  /// Size of the contiguous runs of states that agree on b, e, h_1 and g_1.
  /// Every tau-neighbour of a state lies in the same run.
  StateIndex tau_block_size() const noexcept { return sensor_.front().stride_g; }
  /// Reference state: full battery, every chain in state 0, all tau = 0.
  StateIndex default_reference() const;

  // -- actions --------------------------------------------------------------
  std::size_t action_count() const noexcept { return actions_.size(); }
  const ActionVec& action(ActionId a) const { return actions_[a]; }
  /// Id of a power vector in the global lexicographic list; nullopt if the
  /// vector is outside the action space.
  std::optional<ActionId> find_action(const ActionVec& a) const;
  ActionId zero_action() const noexcept { return 0; }
  /// Feasible actions for a battery level, lexicographic order.
  std::span<const ActionId> feasible_actions_for_battery(int b) const {
    return feasible_by_battery_[static_cast<std::size_t>(b)];
  }
  std::span<const ActionId> feasible_actions(StateIndex s) const {
    return feasible_actions_for_battery(battery_of(s));
  }
  /// Position of `a` in feasible_actions(s), or nullopt when infeasible.
  std::optional<std::size_t> local_action(StateIndex s, ActionId a) const;
  bool is_feasible(StateIndex s, ActionId a) const { return local_action(s, a).has_value(); }

  // -- (state, action) pair indexing ----------------------------------------
  std::size_t pair_count() const noexcept { return pair_count_; }
  PairIndex pair_offset(StateIndex s) const noexcept {
    const auto b = static_cast<std::size_t>(battery_of(s));
    return static_cast<PairIndex>(pair_base_[b] +
                                  (s - b * stride_b_) * feasible_by_battery_[b].size());
  }
  PairIndex pair_index(StateIndex s, std::size_t local) const noexcept {
    return pair_offset(s) + static_cast<PairIndex>(local);
  }
  /// The state owning a pair and the pair's position in its feasible list.
  std::pair<StateIndex, std::size_t> pair_state(PairIndex p) const;

  // -- model quantities -----------------------------------------------------
  const SteadyState& steady(std::size_t i) const { return steady_[i]; }
  /// Arrival rate for sensor i at channel states (h, g) under power p.
  double lambda(std::size_t i, int h, int g, int p) const {
    return lambda_[i][(static_cast<std::size_t>(h) * sensor_[i].g_size +
                       static_cast<std::size_t>(g)) *
                          power_levels_ +
                      static_cast<std::size_t>(p)];
  }
  double reward(StateIndex s, ActionId a) const;
  /// sum_i trace_table_i[L+1]; an upper bound on every reward.
  double reward_bound() const;

  /// Battery after spending `a` in state s (E_k read from the current energy state).
  int next_battery(StateIndex s, ActionId a) const;

  SuccessorView successors(StateIndex s, ActionId a, SuccessorScratch& scratch) const;
  /// sum over successors of P(s'|s,a) * v[s'].
  double expected_value(StateIndex s, ActionId a, const double* v, SuccessorScratch& scratch) const;

  bool has_cache() const noexcept { return !cache_offset_.empty(); }

 private:
  struct SensorLayout {
    std::size_t h_size = 1;
    std::size_t g_size = 1;
    StateIndex stride_h = 0;
    StateIndex stride_g = 0;
    StateIndex stride_tau = 0;
  };

  void generate(StateIndex s, ActionId a, SuccessorScratch& scratch) const;
  void build_cache(std::size_t budget);

  ProblemConfig config_;
  std::vector<SteadyState> steady_;
  std::vector<SensorLayout> sensor_;
  std::size_t power_levels_ = 1;
  StateIndex stride_b_ = 0;
  StateIndex stride_e_ = 0;
  std::size_t state_count_ = 0;

  std::vector<ActionVec> actions_;
  std::vector<int> action_total_;
  std::vector<std::vector<ActionId>> feasible_by_battery_;
  std::vector<std::size_t> pair_base_;
  std::size_t pair_count_ = 0;

  std::vector<std::vector<double>> lambda_;

  std::vector<std::size_t> cache_offset_;  // per pair, size pair_count + 1
  std::vector<StateIndex> cache_index_;
  std::vector<double> cache_prob_;
};

/// Assumption-1 check for one sensor.
struct AssumptionResult {
  double spectral_norm = 0.0;
  /// inf over previous channel pairs of the expected worst-case arrival rate.
  double worst_expected_rate = 0.0;
  /// Smallest kappa >= 0 meeting the bound.
  double kappa = 0.0;
  bool holds = false;
};

enum class WorstPower {
  /// min(p_max, b_max): the largest power a single channel can actually receive.
  kPerChannelCap,
  /// b_max, as the bound is literally written.
  kBatteryCapacity,
};

std::vector<AssumptionResult> check_assumption1(const MdpModel& model,
                                                WorstPower variant = WorstPower::kPerChannelCap);

}  // namespace hjam
