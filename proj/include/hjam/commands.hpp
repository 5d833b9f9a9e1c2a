#pragma once

// The experiment subcommands. Each takes a parsed config, runs the pipeline
// and, when `out` is non-empty, writes its CSV files and a manifest there.

#include "hjam/config.hpp"
#include "hjam/mdp.hpp"
#include "hjam/q_learning.hpp"
#include "hjam/rvi.hpp"
#include "hjam/simulator.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hjam {

MdpModel make_model(const ExperimentConfig& cfg);

/// RVI options with the phi_f override resolved to a state index.
RviOptions resolve_rvi_options(const MdpModel& model, const ExperimentConfig& cfg);
/// LearnConfig with the reference state/action resolved.
LearnConfig resolve_learn_config(const MdpModel& model, const ExperimentConfig& cfg);

struct SolveOutcome {
  RviResult rvi;
  StructureReport structure;
  double bellman_residual = 0.0;
};

SolveOutcome cmd_solve(const MdpModel& model, const ExperimentConfig& cfg,
                       const std::filesystem::path& out);

TrainResult cmd_learn(const MdpModel& model, const ExperimentConfig& cfg,
                      const std::filesystem::path& out);

struct SeedResult {
  std::string policy;
  std::uint64_t seed = 0;
  double avg_reward = 0.0;
  double avg_expected = 0.0;
  double std_error = 0.0;
};

struct PolicySummary {
  std::string policy;
  double avg_reward = 0.0;
  /// Combined batch-means standard error of the seed average.
  double std_error = 0.0;
  std::vector<SeedResult> seeds;
};

/// Runs every (policy, seed) rollout in cfg.eval. `rvi_policy` skips the
/// solve when the caller already has one.
std::vector<PolicySummary> evaluate_policies(const MdpModel& model, const ExperimentConfig& cfg,
                                             const PolicyTable* rvi_policy = nullptr);

/// Per-seed rollouts to simulate.csv, plus trace.csv when eval.dump_trace.
std::vector<PolicySummary> cmd_simulate(const MdpModel& model, const ExperimentConfig& cfg,
                                        const std::filesystem::path& out);

/// Seed-averaged rewards to table1.csv, one row per policy.
std::vector<PolicySummary> cmd_compare(const MdpModel& model, const ExperimentConfig& cfg,
                                       const std::filesystem::path& out);

struct VerifyOutcome {
  std::vector<AssumptionResult> assumption;
  StructureReport structure;
  double j_star = 0.0;
  bool ok() const;
};

VerifyOutcome cmd_verify(const MdpModel& model, const ExperimentConfig& cfg,
                         const std::filesystem::path& out);

}  // namespace hjam
