#pragma once

// Experiment configuration: a JSON document with problem / solver / learn /
// eval sections. Every key is checked; unknown keys are errors. The grammar is
// documented in docs/config.md.

#include "hjam/mdp.hpp"
#include "hjam/q_learning.hpp"
#include "hjam/rvi.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hjam {

struct SolverSettings {
  RviOptions rvi;
  std::optional<MdpState> phi_f;
  double tol_struct = 1e-6;
  WorstPower assumption_variant = WorstPower::kPerChannelCap;
};

struct EvalSettings {
  std::uint64_t horizon = 2'000'000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> policies{"rvi", "greedy", "random"};
  bool dump_trace = false;
  std::uint64_t trace_limit = 10'000;
};

struct LearnSettings {
  LearnMode mode = LearnMode::kStandard;
  LearnConfig config;
  std::optional<MdpState> ref_state;
  std::optional<ActionVec> ref_action;
};

struct ExperimentConfig {
  std::string name;
  ProblemConfig problem;
  SolverSettings solver;
  LearnSettings learn;
  EvalSettings eval;
  std::string output_dir = "out";
  /// The document this config was parsed from (after overrides).
  nlohmann::json source;
};

/// Throws ConfigError naming the offending key path.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

std::vector<std::string> preset_names();
/// Throws ConfigError for unknown names.
nlohmann::json preset_json(std::string_view name);

/// 64-bit FNV-1a of the canonical JSON dump, hex encoded.
std::string config_hash(const nlohmann::json& doc);

LearnMode parse_mode(std::string_view name);
std::string to_string(LearnMode mode);

}  // namespace hjam
