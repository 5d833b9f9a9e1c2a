#pragma once

// Ground-truth environment: samples the real channel, energy and packet
// dynamics, tracks the untruncated holding times, and evaluates policies by
// Monte Carlo.

#include "hjam/mdp.hpp"
#include "hjam/rvi.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace hjam {

/// Seedable uniform source. All randomness in the simulator and the learners
/// goes through explicit draws from one of these.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct EnvState {
  /// MDP view; tau components are min(true_tau, L).
  MdpState view;
  std::vector<int> true_tau;
  std::uint64_t step = 0;
};

struct StepResult {
  /// r(phi, a) with the untruncated holding times.
  double expected_reward = 0.0;
  /// sum_i Tr(h^{tau_i'}(P_bar_i)) after the step.
  double realized_trace = 0.0;
  std::vector<int> gamma;
};

class Environment {
 public:
  /// Battery starts full, all tau at 0, chains drawn uniformly.
  Environment(const MdpModel& model, std::uint64_t seed);

  void reset(std::uint64_t seed);
  const EnvState& state() const noexcept { return state_; }
  StateIndex state_index() const { return model_->encode(state_.view); }
  const MdpModel& model() const noexcept { return *model_; }

  /// Throws std::invalid_argument when `a` is infeasible in the current state.
  StepResult step(ActionId a);

  /// Draw from the environment's own stream (used by stochastic policies).
  double uniform() { return rng_.uniform(); }

  /// Tr(h^t(P_bar_i)) for any t >= 0, extending the cached table on demand.
  double trace(std::size_t sensor, std::size_t t);

 private:
  const MdpModel* model_;
  Rng rng_;
  EnvState state_;
  std::vector<std::vector<double>> traces_;
};

inline Environment env_reset(const MdpModel& model, std::uint64_t seed) { return Environment(model, seed); }

/// Policy callable: state index (clamped view) and a uniform draw -> action.
using PolicyFn = std::function<ActionId(StateIndex, double)>;

PolicyFn table_policy(const PolicyTable& pt);
/// Max power to the sensors with the largest tau first (index breaks ties)
/// until the battery runs out.
ActionId greedy_action(const MdpModel& model, StateIndex s);
PolicyFn greedy_policy(const MdpModel& model);
/// Uniform over the feasible set.
ActionId random_action(const MdpModel& model, StateIndex s, double u);
PolicyFn random_policy(const MdpModel& model);

struct StepTrace {
  std::uint64_t k = 0;
  MdpState state;
  std::vector<int> true_tau;
  ActionId action = 0;
  std::vector<int> gamma;
  double realized_trace = 0.0;
};

struct RolloutReport {
  double avg_reward = 0.0;    // time average of realized_trace
  double avg_expected = 0.0;  // time average of expected_reward
  std::uint64_t horizon = 0;
  std::uint64_t seed = 0;
  MdpState initial;
  /// Means of realized_trace over consecutive equal batches (for error bars).
  std::vector<double> batch_means;
  std::vector<double> batch_means_expected;
  bool battery_in_range = true;
  std::vector<StepTrace> trace;
};

struct RolloutOptions {
  std::size_t batches = 100;
  bool keep_trace = false;
};

RolloutReport rollout(const MdpModel& model, const PolicyFn& policy, std::uint64_t horizon,
                      std::uint64_t seed, const RolloutOptions& opts = {});

/// Standard error of the mean estimated from batch means.
double batch_standard_error(const std::vector<double>& batch_means);

}  // namespace hjam
