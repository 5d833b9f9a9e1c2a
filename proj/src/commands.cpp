#include "hjam/commands.hpp"

#include "hjam/csv.hpp"
#include "hjam/errors.hpp"
#include "parallel.hpp"

#include <cmath>

namespace hjam {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> state_header(const MdpModel& model) {
  std::vector<std::string> h{"state", "b", "e"};
  for (std::size_t i = 1; i <= model.sensor_count(); ++i) {
    const auto n = std::to_string(i);
    h.push_back("h" + n);
    h.push_back("g" + n);
    h.push_back("tau" + n);
  }
  return h;
}

void state_fields(CsvWriter& w, const MdpModel& model, StateIndex s) {
  const MdpState st = model.decode(s);
  w.field(std::uint64_t{s}).field(st.b).field(st.e);
  for (const auto& c : st.sensors) w.field(c.h).field(c.g).field(c.tau);
}

std::vector<std::string> action_header(const MdpModel& model) {
  std::vector<std::string> h{"action"};
  for (std::size_t i = 1; i <= model.sensor_count(); ++i) h.push_back("p" + std::to_string(i));
  return h;
}

void action_fields(CsvWriter& w, const MdpModel& model, ActionId a) {
  w.field(std::uint64_t{a});
  for (int p : model.action(a)) w.field(p);
}

template <class... Parts>
std::vector<std::string> concat(const Parts&... parts) {
  std::vector<std::string> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

void write_policy(const fs::path& path, const MdpModel& model, const PolicyTable& pt) {
  CsvWriter w(path, concat(state_header(model), action_header(model)));
  for (StateIndex s = 0; s < model.state_count(); ++s) {
    state_fields(w, model, s);
    action_fields(w, model, pt.action[s]);
    w.end_row();
  }
}

json structure_json(const StructureReport& r) {
  json ce = json::array();
  for (const auto& v : r.counterexamples)
    ce.push_back({{"kind", to_string(v.kind)},
                  {"sensor", v.sensor},
                  {"lower", v.lower},
                  {"upper", v.upper},
                  {"action_low", v.action_low},
                  {"action_high", v.action_high},
                  {"amount", v.amount}});
  return {{"monotone_V", r.monotone_V},
          {"monotone_Q", r.monotone_Q},
          {"superadditive_Q", r.superadditive_Q},
          {"monotone_policy", r.monotone_policy},
          {"violation_count", r.violation_count},
          {"counterexamples", ce}};
}

json assumption_json(const std::vector<AssumptionResult>& rs) {
  json out = json::array();
  for (const auto& r : rs)
    out.push_back({{"spectral_norm", r.spectral_norm},
                   {"worst_expected_rate", r.worst_expected_rate},
                   {"kappa", r.kappa},
                   {"holds", r.holds}});
  return out;
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

PolicyFn policy_by_name(const MdpModel& model, const std::string& name, const PolicyTable* rvi) {
  if (name == "rvi") return table_policy(*rvi);
  if (name == "greedy") return greedy_policy(model);
  if (name == "random") return random_policy(model);
  throw ConfigError("eval.policies", "unknown policy \"" + name + "\"");
}

}  // namespace

MdpModel make_model(const ExperimentConfig& cfg) { return MdpModel(cfg.problem); }

RviOptions resolve_rvi_options(const MdpModel& model, const ExperimentConfig& cfg) {
  RviOptions opts = cfg.solver.rvi;
  if (cfg.solver.phi_f) {
    try {
      opts.reference = model.encode(*cfg.solver.phi_f);
    } catch (const std::exception& e) {
      throw ConfigError("solver.phi_f", e.what());
    }
  }
  return opts;
}

LearnConfig resolve_learn_config(const MdpModel& model, const ExperimentConfig& cfg) {
  LearnConfig lc = cfg.learn.config;
  if (cfg.learn.ref_state) {
    try {
      lc.ref_state = model.encode(*cfg.learn.ref_state);
    } catch (const std::exception& e) {
      throw ConfigError("learn.ref_state", e.what());
    }
  }
  if (cfg.learn.ref_action) {
    const auto a = model.find_action(*cfg.learn.ref_action);
    if (!a) throw ConfigError("learn.ref_action", "not a valid power vector");
    lc.ref_action = *a;
  }
  return lc;
}

SolveOutcome cmd_solve(const MdpModel& model, const ExperimentConfig& cfg, const fs::path& out) {
  SolveOutcome res;
  res.rvi = rvi_solve(model, resolve_rvi_options(model, cfg));
  const QTableExact q = q_from_v(model, res.rvi.values);
  res.structure = verify_structure(model, res.rvi.values, res.rvi.policy, q, cfg.solver.tol_struct);
  res.bellman_residual = bellman_residual(model, res.rvi.values);
  if (out.empty()) return res;

  fs::create_directories(out);
  {
    auto header = state_header(model);
    header.push_back("v");
    CsvWriter w(out / "values.csv", header);
    for (StateIndex s = 0; s < model.state_count(); ++s) {
      state_fields(w, model, s);
      w.field(res.rvi.values.v[s]);
      w.end_row();
    }
  }
  write_policy(out / "policy.csv", model, res.rvi.policy);
  {
    CsvWriter w(out / "sweeps.csv", {"sweep", "span", "j_star"});
    for (const auto& r : res.rvi.sweeps) {
      w.field(std::uint64_t{r.sweep}).field(r.span).field(r.j_star);
      w.end_row();
    }
  }
  write_json(out / "summary.json",
             {{"j_star", res.rvi.values.j_star},
              {"sweeps", res.rvi.sweeps.size()},
              {"converged", res.rvi.converged},
              {"backups", res.rvi.backups},
              {"pruned", cfg.solver.rvi.pruned},
              {"reference_state", res.rvi.values.reference},
              {"states", model.state_count()},
              {"pairs", model.pair_count()},
              {"bellman_residual", res.bellman_residual},
              {"structure", structure_json(res.structure)}});
  write_manifest(out, "solve", cfg.source, 0);
  return res;
}

TrainResult cmd_learn(const MdpModel& model, const ExperimentConfig& cfg, const fs::path& out) {
  const LearnConfig lc = resolve_learn_config(model, cfg);
  const bool need_rows = cfg.learn.mode == LearnMode::kStructural || lc.log_violations;
  std::optional<ConstraintSet> cs;
  if (need_rows) cs = build_constraints(model);

  SnapshotFn snap;
  if (!out.empty()) {
    fs::create_directories(out);
    if (lc.snapshot_every > 0) {
      fs::create_directories(out / "snapshots");
      snap = [&](std::uint64_t k, const QTable& q) {
        CsvWriter w(out / "snapshots" / ("q_" + std::to_string(k) + ".csv"), {"pair", "q", "visits"});
        for (std::size_t p = 0; p < q.q.size(); ++p) {
          w.field(std::uint64_t{p}).field(q.q[p]).field(std::uint64_t{q.visits[p]});
          w.end_row();
        }
      };
    }
  }
  TrainResult res = train(model, cfg.learn.mode, lc, std::move(cs), snap);
  if (out.empty()) return res;

  {
    CsvWriter w(out / "curve.csv", {"step", "running_avg_reward", "bellman_residual", "violation_count"});
    for (const auto& p : res.curve) {
      w.field(p.step).field(p.running_avg_reward);
      if (lc.log_residual)
        w.field(p.bellman_residual);
      else
        w.field(std::string{});
      if (lc.log_violations)
        w.field(std::uint64_t{p.violation_count});
      else
        w.field(std::string{});
      w.end_row();
    }
  }
  {
    CsvWriter w(out / "q_final.csv", concat(state_header(model), action_header(model),
                                             std::vector<std::string>{"q", "visits"}));
    for (StateIndex s = 0; s < model.state_count(); ++s) {
      const auto feas = model.feasible_actions(s);
      for (std::size_t k = 0; k < feas.size(); ++k) {
        const PairIndex p = model.pair_index(s, k);
        state_fields(w, model, s);
        action_fields(w, model, feas[k]);
        w.field(res.q.q[p]).field(std::uint64_t{res.q.visits[p]});
        w.end_row();
      }
    }
  }
  write_policy(out / "policy.csv", model, res.policy);
  write_manifest(out, "learn", cfg.source, lc.seed, {{"mode", to_string(cfg.learn.mode)}});
  return res;
}

std::vector<PolicySummary> evaluate_policies(const MdpModel& model, const ExperimentConfig& cfg,
                                             const PolicyTable* rvi_policy) {
  const auto& ev = cfg.eval;
  PolicyTable solved;
  bool need_rvi = false;
  for (const auto& p : ev.policies) need_rvi = need_rvi || p == "rvi";
  if (need_rvi && !rvi_policy) {
    solved = rvi_solve(model, resolve_rvi_options(model, cfg)).policy;
    rvi_policy = &solved;
  }

  std::vector<PolicyFn> fns;
  for (const auto& name : ev.policies) fns.push_back(policy_by_name(model, name, rvi_policy));

  const std::size_t jobs = ev.policies.size() * ev.seeds.size();
  std::vector<SeedResult> results(jobs);
  detail::parallel_for(jobs, cfg.solver.rvi.threads, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::size_t pi = j / ev.seeds.size();
      const std::uint64_t seed = ev.seeds[j % ev.seeds.size()];
      const RolloutReport rep = rollout(model, fns[pi], ev.horizon, seed);
      results[j] = {ev.policies[pi], seed, rep.avg_reward, rep.avg_expected,
                    batch_standard_error(rep.batch_means)};
    }
  });

  std::vector<PolicySummary> out;
  for (std::size_t pi = 0; pi < ev.policies.size(); ++pi) {
    PolicySummary sum;
    sum.policy = ev.policies[pi];
    double var = 0.0;
    for (std::size_t k = 0; k < ev.seeds.size(); ++k) {
      const auto& r = results[pi * ev.seeds.size() + k];
      sum.seeds.push_back(r);
      sum.avg_reward += r.avg_reward;
      var += r.std_error * r.std_error;
    }
    const auto n = static_cast<double>(ev.seeds.size());
    sum.avg_reward /= n;
    sum.std_error = std::sqrt(var) / n;
    out.push_back(std::move(sum));
  }
  return out;
}

std::vector<PolicySummary> cmd_simulate(const MdpModel& model, const ExperimentConfig& cfg,
                                        const fs::path& out) {
  PolicyTable solved;
  const PolicyTable* rvi = nullptr;
  for (const auto& p : cfg.eval.policies)
    if (p == "rvi" && !rvi) {
      solved = rvi_solve(model, resolve_rvi_options(model, cfg)).policy;
      rvi = &solved;
    }
  auto res = evaluate_policies(model, cfg, rvi);
  if (out.empty()) return res;

  fs::create_directories(out);
  {
    CsvWriter w(out / "simulate.csv", {"policy", "seed", "horizon", "avg_reward", "avg_expected_reward", "std_error"});
    for (const auto& p : res)
      for (const auto& r : p.seeds) {
        w.field(r.policy).field(r.seed).field(cfg.eval.horizon).field(r.avg_reward).field(r.avg_expected).field(r.std_error);
        w.end_row();
      }
  }
  if (cfg.eval.dump_trace) {
    // The trace is a prefix of the first seed's run; the same seed replays
    // the same path.
    auto header = std::vector<std::string>{"policy", "k", "b", "e"};
    for (std::size_t i = 1; i <= model.sensor_count(); ++i) {
      header.push_back("h" + std::to_string(i));
      header.push_back("g" + std::to_string(i));
    }
    for (std::size_t i = 1; i <= model.sensor_count(); ++i) header.push_back("tau" + std::to_string(i));
    header.push_back("action");
    for (std::size_t i = 1; i <= model.sensor_count(); ++i) header.push_back("gamma" + std::to_string(i));
    header.push_back("realized_trace");
    CsvWriter w(out / "trace.csv", header);
    const std::uint64_t steps = std::min(cfg.eval.trace_limit, cfg.eval.horizon);
    for (const auto& name : cfg.eval.policies) {
      RolloutOptions ro;
      ro.keep_trace = true;
      const auto rep = rollout(model, policy_by_name(model, name, rvi), steps, cfg.eval.seeds.front(), ro);
      for (const auto& st : rep.trace) {
        w.field(name).field(st.k).field(st.state.b).field(st.state.e);
        for (const auto& c : st.state.sensors) w.field(c.h).field(c.g);
        for (int t : st.true_tau) w.field(t);
        w.field(std::uint64_t{st.action});
        for (int g : st.gamma) w.field(g);
        w.field(st.realized_trace);
        w.end_row();
      }
    }
  }
  write_manifest(out, "simulate", cfg.source, cfg.eval.seeds.front(), {{"seeds", cfg.eval.seeds}});
  return res;
}

std::vector<PolicySummary> cmd_compare(const MdpModel& model, const ExperimentConfig& cfg,
                                       const fs::path& out) {
  auto res = evaluate_policies(model, cfg);
  if (out.empty()) return res;
  fs::create_directories(out);
  CsvWriter w(out / "table1.csv", {"policy", "avg_reward", "std_error", "seeds", "horizon"});
  for (const auto& p : res) {
    w.field(p.policy).field(p.avg_reward).field(p.std_error).field(std::uint64_t{p.seeds.size()}).field(cfg.eval.horizon);
    w.end_row();
  }
  write_manifest(out, "compare", cfg.source, cfg.eval.seeds.front(), {{"seeds", cfg.eval.seeds}});
  return res;
}

bool VerifyOutcome::ok() const {
  for (const auto& a : assumption)
    if (!a.holds) return false;
  return structure.all_hold();
}

VerifyOutcome cmd_verify(const MdpModel& model, const ExperimentConfig& cfg, const fs::path& out) {
  VerifyOutcome res;
  res.assumption = check_assumption1(model, cfg.solver.assumption_variant);
  const RviResult rvi = rvi_solve(model, resolve_rvi_options(model, cfg));
  res.j_star = rvi.values.j_star;
  res.structure = verify_structure(model, rvi.values, rvi.policy, q_from_v(model, rvi.values), cfg.solver.tol_struct);
  if (out.empty()) return res;
  fs::create_directories(out);
  write_json(out / "verify.json", {{"ok", res.ok()},
                                   {"j_star", res.j_star},
                                   {"assumption", assumption_json(res.assumption)},
                                   {"structure", structure_json(res.structure)}});
  write_manifest(out, "verify", cfg.source, 0);
  return res;
}

}  // namespace hjam
