// hjam: command-line driver for the solve / learn / simulate / compare /
// verify pipelines.

#include "hjam/commands.hpp"
#include "hjam/config.hpp"
#include "hjam/errors.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kNonconvergence = 3, kDivergence = 4, kVerifyFailed = 5 };

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<bool> pruned;
  std::string mode;
  bool allow_stable = false;
  bool no_dual_projection = false;
  bool full_dual = false;
  std::optional<std::uint64_t> horizon;
};

nlohmann::json load_document(const Options& o) {
  if (!o.config_path.empty() && !o.preset.empty())
    throw hjam::ConfigError("", "--config and --preset are mutually exclusive");
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw hjam::ConfigError("", "cannot open config file " + o.config_path);
    try {
      return nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
      throw hjam::ConfigError("", e.what());
    }
  }
  return hjam::preset_json(o.preset.empty() ? "paper_sec6" : o.preset);
}

// Flags are folded into the JSON document so the manifest hash covers them.
void apply_overrides(nlohmann::json& doc, const Options& o, const std::string& command) {
  if (o.seed) {
    doc["learn"]["seed"] = *o.seed;
    if (command == "simulate" || command == "compare") doc["eval"]["seeds"] = {*o.seed};
  }
  if (o.pruned) doc["solver"]["pruned"] = *o.pruned;
  if (!o.mode.empty()) doc["learn"]["mode"] = o.mode;
  if (o.allow_stable) doc["problem"]["allow_stable"] = true;
  if (o.no_dual_projection) doc["learn"]["dual_projection"] = false;
  if (o.full_dual) doc["learn"]["full_dual"] = true;
  if (o.horizon) {
    if (command == "learn")
      doc["learn"]["horizon"] = *o.horizon;
    else
      doc["eval"]["horizon"] = *o.horizon;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run(const std::string& command, const Options& o) {
  nlohmann::json doc = load_document(o);
  apply_overrides(doc, o, command);
  const hjam::ExperimentConfig cfg = hjam::parse_config(doc);
  const std::filesystem::path out = o.out.empty() ? std::filesystem::path(cfg.output_dir) / command
                                                  : std::filesystem::path(o.out);
  const auto t0 = std::chrono::steady_clock::now();
  const hjam::MdpModel model = hjam::make_model(cfg);
  std::printf("model: %zu states, %zu pairs, %zu actions\n", model.state_count(), model.pair_count(),
              model.action_count());

  if (command == "solve") {
    const auto r = hjam::cmd_solve(model, cfg, out);
    std::printf("j_star %.10f after %zu sweeps (%.1fs)\n", r.rvi.values.j_star, r.rvi.sweeps.size(), seconds_since(t0));
    std::printf("structure: monotone_V=%d monotone_Q=%d superadditive_Q=%d monotone_policy=%d violations=%zu\n",
                r.structure.monotone_V, r.structure.monotone_Q, r.structure.superadditive_Q,
                r.structure.monotone_policy, r.structure.violation_count);
  } else if (command == "learn") {
    const auto r = hjam::cmd_learn(model, cfg, out);
    std::printf("%s learning, %llu steps (%.1fs)\n", hjam::to_string(cfg.learn.mode).c_str(),
                static_cast<unsigned long long>(cfg.learn.config.horizon), seconds_since(t0));
    if (!r.curve.empty()) std::printf("final running average %.6f\n", r.curve.back().running_avg_reward);
  } else if (command == "simulate" || command == "compare") {
    const auto rows = command == "simulate" ? hjam::cmd_simulate(model, cfg, out) : hjam::cmd_compare(model, cfg, out);
    for (const auto& p : rows) std::printf("%-8s %.6f +- %.6f\n", p.policy.c_str(), p.avg_reward, p.std_error);
  } else if (command == "verify") {
    const auto r = hjam::cmd_verify(model, cfg, out);
    for (std::size_t i = 0; i < r.assumption.size(); ++i)
      std::printf("sensor %zu: |A|=%.6f worst_rate=%.6f kappa=%.6f holds=%d\n", i + 1, r.assumption[i].spectral_norm,
                  r.assumption[i].worst_expected_rate, r.assumption[i].kappa, r.assumption[i].holds);
    std::printf("structure all hold: %d (%zu violations)\n", r.structure.all_hold(), r.structure.violation_count);
    std::printf("wrote %s\n", out.string().c_str());
    return r.ok() ? kOk : kVerifyFailed;
  }
  std::printf("wrote %s\n", out.string().c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hjam: optimal jamming power schedules for remote state estimation"};
  Options o;
  bool list_presets = false;
  app.add_flag("--list-presets", list_presets, "Print the bundled preset names");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"solve", "Relative value iteration, policy and structure check"},
      {"learn", "RVI Q-learning (standard or structural)"},
      {"simulate", "Per-seed rollouts of the configured policies"},
      {"compare", "Seed-averaged rewards of the configured policies"},
      {"verify", "Assumption check and structure verification"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", o.preset, "Bundled preset (default paper_sec6)");
    sub->add_option("--seed", o.seed, "Learner seed; for simulate/compare the only rollout seed");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_flag("--pruned,!--no-pruned", o.pruned, "Structure-pruned argmax in RVI");
    sub->add_option("--mode", o.mode, "Learning mode")->check(CLI::IsMember({"standard", "structural"}));
    sub->add_flag("--allow-stable", o.allow_stable, "Accept systems with spectral radius below one");
    sub->add_flag("--no-dual-projection", o.no_dual_projection, "Do not clip multipliers at zero");
    sub->add_flag("--full-dual", o.full_dual, "Update every multiplier each step");
    sub->add_option("--horizon", o.horizon, "Override learn.horizon (learn) or eval.horizon");
  }
  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  if (list_presets) {
    for (const auto& n : hjam::preset_names()) std::puts(n.c_str());
    return kOk;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return kConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return run(command, o);
  } catch (const hjam::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const hjam::ValidationError& e) {
    std::cerr << "invalid problem: " << e.what() << '\n';
    return kConfig;
  } catch (const hjam::ConvergenceError& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return kNonconvergence;
  } catch (const hjam::DivergenceError& e) {
    std::cerr << "learner diverged: " << e.what() << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}
