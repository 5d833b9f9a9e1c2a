#include "hjam/config.hpp"

#include "hjam/errors.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hjam {

using nlohmann::json;

namespace {

/// Walks one JSON object, remembering which keys were read so leftovers can
/// be reported as unknown.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return node_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!node_.contains(key)) throw ConfigError(key_path(key), "missing required key");
    return node_.at(key);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    return as<T>(*v, key_path(key));
  }

  template <class T>
  T require(const std::string& key) {
    return as<T>(at(key), key_path(key));
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }

  template <class T>
  static T as(const json& v, const std::string& path) {
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (v.get<long long>() < 0) throw ConfigError(path, "expected a nonnegative integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(path, "expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError(path, "expected a string");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path, e.what());
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

Matrix parse_matrix(const json& v, const std::string& path) {
  if (v.is_number()) {
    Matrix m(1, 1);
    m(0, 0) = v.get<double>();
    return m;
  }
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a row-major nested list");
  const bool nested = v.front().is_array();
  const std::size_t rows = nested ? v.size() : 1;
  const std::size_t cols = nested ? v.front().size() : v.size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = nested ? v[r] : v;
    if (!row.is_array() || row.size() != cols) throw ConfigError(path, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ConfigError(path, "matrix entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

std::vector<double> parse_vector(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ConfigError(path, "expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

MarkovChain parse_chain(const json& v, const std::string& path) {
  Section sec(v, path);
  auto values = parse_vector(sec.at("values"), sec.key_path("values"));
  std::vector<std::vector<double>> rows;
  const json& r = sec.at("rows");
  if (!r.is_array()) throw ConfigError(sec.key_path("rows"), "expected a list of rows");
  for (const auto& row : r) rows.push_back(parse_vector(row, sec.key_path("rows")));
  sec.finish();
  try {
    return MarkovChain(std::move(values), std::move(rows));
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
}

LtiSystem parse_system(const json& v, const std::string& path) {
  Section sec(v, path);
  LtiSystem sys;
  sys.A = parse_matrix(sec.at("A"), sec.key_path("A"));
  sys.C = parse_matrix(sec.at("C"), sec.key_path("C"));
  sys.W = parse_matrix(sec.at("W"), sec.key_path("W"));
  sys.V = parse_matrix(sec.at("V"), sec.key_path("V"));
  sec.finish();
  return sys;
}

LinkModel parse_link(const json& v, const std::string& path) {
  Section sec(v, path);
  LinkModel link;
  link.sigma2 = sec.require<double>("sigma2");
  link.jam_gain = sec.get<double>("jam_gain", 1.0);
  if (const json* m = sec.find("modulation")) {
    Section ms(*m, sec.key_path("modulation"));
    const auto type = ms.require<std::string>("type");
    if (type == "qam") {
      link.modulation = QamModulation{ms.require<double>("b")};
    } else if (type == "table") {
      TableModulation table;
      const json& pts = ms.at("points");
      if (!pts.is_array()) throw ConfigError(ms.key_path("points"), "expected [[sinr, rate], ...]");
      for (const auto& p : pts) {
        const auto pr = parse_vector(p, ms.key_path("points"));
        if (pr.size() != 2) throw ConfigError(ms.key_path("points"), "each point is [sinr, rate]");
        table.points.emplace_back(pr[0], pr[1]);
      }
      link.modulation = std::move(table);
    } else {
      throw ConfigError(ms.key_path("type"), "expected \"qam\" or \"table\"");
    }
    ms.finish();
  }
  sec.finish();
  try {
    link.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(path, e.what());
  }
  return link;
}

MdpState parse_state(const json& v, const std::string& path) {
  Section sec(v, path);
  MdpState s;
  s.b = sec.require<int>("b");
  s.e = sec.require<int>("e");
  const json& sensors = sec.at("sensors");
  if (!sensors.is_array()) throw ConfigError(sec.key_path("sensors"), "expected a list");
  for (std::size_t i = 0; i < sensors.size(); ++i) {
    Section ss(sensors[i], sec.key_path("sensors") + "[" + std::to_string(i) + "]");
    s.sensors.push_back({ss.require<int>("h"), ss.require<int>("g"), ss.require<int>("tau")});
    ss.finish();
  }
  sec.finish();
  return s;
}

StepSchedule parse_schedule(Section& parent, const std::string& key, StepSchedule fallback) {
  const json* v = parent.find(key);
  if (!v) return fallback;
  Section sec(*v, parent.key_path(key));
  StepSchedule s;
  s.c = sec.get<double>("c", fallback.c);
  s.k0 = sec.get<double>("k0", fallback.k0);
  s.B = sec.get<std::uint64_t>("B", fallback.B);
  sec.finish();
  if (!(s.c > 0.0) || !(s.k0 >= 0.0) || s.B == 0)
    throw ConfigError(parent.key_path(key), "schedule needs c > 0, k0 >= 0, B >= 1");
  return s;
}

ProblemConfig parse_problem(const json& v) {
  Section sec(v, "problem");
  ProblemConfig p;
  const json& systems = sec.at("systems");
  if (!systems.is_array() || systems.empty())
    throw ConfigError("problem.systems", "expected a non-empty list");
  for (std::size_t i = 0; i < systems.size(); ++i)
    p.systems.push_back(parse_system(systems[i], "problem.systems[" + std::to_string(i) + "]"));

  if (const json* per = sec.find("per_sensor_channels")) {
    if (!per->is_array()) throw ConfigError("problem.per_sensor_channels", "expected a list");
    for (std::size_t i = 0; i < per->size(); ++i) {
      const std::string path = "problem.per_sensor_channels[" + std::to_string(i) + "]";
      Section cs((*per)[i], path);
      p.per_sensor_channels.push_back({parse_chain(cs.at("H"), path + ".H"), parse_chain(cs.at("G"), path + ".G")});
      cs.finish();
    }
  }
  if (p.per_sensor_channels.empty())
    p.channel_chain = parse_chain(sec.at("channel_chain"), "problem.channel_chain");
  else if (const json* c = sec.find("channel_chain"))
    p.channel_chain = parse_chain(*c, "problem.channel_chain");
  p.energy_chain = parse_chain(sec.at("energy_chain"), "problem.energy_chain");

  const json& links = sec.at("links");
  if (links.is_object()) {
    p.links.push_back(parse_link(links, "problem.links"));
  } else if (links.is_array() && !links.empty()) {
    for (std::size_t i = 0; i < links.size(); ++i)
      p.links.push_back(parse_link(links[i], "problem.links[" + std::to_string(i) + "]"));
  } else {
    throw ConfigError("problem.links", "expected an object or a non-empty list");
  }

  Section bat(sec.at("battery"), "problem.battery");
  p.battery.b_max = bat.require<int>("b_max");
  p.battery.p_max = bat.require<int>("p_max");
  bat.finish();

  p.L = sec.require<int>("L");
  p.validation.allow_stable = sec.get<bool>("allow_stable", false);
  p.validation.tol_psd = sec.get<double>("tol_psd", p.validation.tol_psd);
  p.riccati.tol_riccati = sec.get<double>("tol_riccati", p.riccati.tol_riccati);
  p.riccati.max_iter = sec.get<std::size_t>("riccati_max_iter", p.riccati.max_iter);
  p.max_states = sec.get<std::size_t>("max_states", p.max_states);
  sec.finish();
  try {
    p.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ValidationError& e) {
    throw ConfigError("problem", e.what());
  }
  return p;
}

}  // namespace

LearnMode parse_mode(std::string_view name) {
  if (name == "standard") return LearnMode::kStandard;
  if (name == "structural") return LearnMode::kStructural;
  throw ConfigError("learn.mode", "expected \"standard\" or \"structural\"");
}

std::string to_string(LearnMode mode) {
  return mode == LearnMode::kStandard ? "standard" : "structural";
}

ExperimentConfig parse_config(const json& doc) {
  Section root(doc, "");
  ExperimentConfig cfg;
  cfg.source = doc;
  cfg.name = root.get<std::string>("name", "");
  cfg.problem = parse_problem(root.at("problem"));
  cfg.output_dir = root.get<std::string>("output", cfg.output_dir);

  if (const json* v = root.find("solver")) {
    Section sec(*v, "solver");
    auto& r = cfg.solver.rvi;
    r.span_tol = sec.get<double>("span_tol", r.span_tol);
    r.max_sweeps = sec.get<std::size_t>("max_sweeps", r.max_sweeps);
    r.pruned = sec.get<bool>("pruned", r.pruned);
    r.threads = sec.get<unsigned>("threads", r.threads);
    if (const json* f = sec.find("phi_f")) cfg.solver.phi_f = parse_state(*f, "solver.phi_f");
    cfg.solver.tol_struct = sec.get<double>("tol_struct", cfg.solver.tol_struct);
    const auto variant = sec.get<std::string>("assumption_variant", "per_channel_cap");
    if (variant == "per_channel_cap")
      cfg.solver.assumption_variant = WorstPower::kPerChannelCap;
    else if (variant == "battery_capacity")
      cfg.solver.assumption_variant = WorstPower::kBatteryCapacity;
    else
      throw ConfigError("solver.assumption_variant", "expected per_channel_cap or battery_capacity");
    sec.finish();
    if (!(r.span_tol > 0.0)) throw ConfigError("solver.span_tol", "must be positive");
  }

  if (const json* v = root.find("learn")) {
    Section sec(*v, "learn");
    auto& l = cfg.learn.config;
    cfg.learn.mode = parse_mode(sec.get<std::string>("mode", "standard"));
    l.epsilon = sec.get<double>("epsilon", l.epsilon);
    l.xi = parse_schedule(sec, "xi", l.xi);
    l.zeta = parse_schedule(sec, "zeta", l.xi);
    const auto clock = sec.get<std::string>("clock", "global");
    if (clock == "global")
      l.clock = StepClock::kGlobal;
    else if (clock == "visit")
      l.clock = StepClock::kVisit;
    else
      throw ConfigError("learn.clock", "expected \"global\" or \"visit\"");
    l.dual_scale = sec.get<double>("dual_scale", l.dual_scale);
    l.horizon = sec.get<std::uint64_t>("horizon", l.horizon);
    l.eval_every = sec.get<std::uint64_t>("eval_every", l.eval_every);
    l.checkpoints = sec.get<std::vector<std::uint64_t>>("checkpoints", l.checkpoints);
    l.seed = sec.get<std::uint64_t>("seed", l.seed);
    l.q_init = sec.get<double>("q_init", l.q_init);
    l.dual_projection = sec.get<bool>("dual_projection", l.dual_projection);
    l.full_dual = sec.get<bool>("full_dual", l.full_dual);
    l.dual_batch = sec.get<std::size_t>("dual_batch", l.dual_batch);
    l.log_residual = sec.get<bool>("log_residual", l.log_residual);
    l.log_violations = sec.get<bool>("log_violations", l.log_violations);
    l.violation_tol = sec.get<double>("violation_tol", l.violation_tol);
    l.snapshot_every = sec.get<std::uint64_t>("snapshot_every", l.snapshot_every);
    if (const json* s = sec.find("ref_state")) cfg.learn.ref_state = parse_state(*s, "learn.ref_state");
    if (const json* a = sec.find("ref_action")) {
      ActionVec act;
      for (double x : parse_vector(*a, "learn.ref_action")) act.push_back(static_cast<int>(x));
      cfg.learn.ref_action = act;
    }
    sec.finish();
    if (!(l.epsilon >= 0.0 && l.epsilon <= 1.0)) throw ConfigError("learn.epsilon", "must lie in [0,1]");
  }

  if (const json* v = root.find("eval")) {
    Section sec(*v, "eval");
    auto& e = cfg.eval;
    e.horizon = sec.get<std::uint64_t>("horizon", e.horizon);
    e.seeds = sec.get<std::vector<std::uint64_t>>("seeds", e.seeds);
    e.policies = sec.get<std::vector<std::string>>("policies", e.policies);
    e.dump_trace = sec.get<bool>("dump_trace", e.dump_trace);
    e.trace_limit = sec.get<std::uint64_t>("trace_limit", e.trace_limit);
    sec.finish();
    for (const auto& p : e.policies)
      if (p != "rvi" && p != "greedy" && p != "random")
        throw ConfigError("eval.policies", "unknown policy \"" + p + "\"");
    if (e.seeds.empty()) throw ConfigError("eval.seeds", "at least one seed is required");
  }
  root.finish();
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("parse error in ") + path + ": " + e.what());
  }
  return parse_config(doc);
}

namespace {

json sec6_systems() {
  return json::array({
      {{"A", {{1.2, 0.2}, {0.3, 1.0}}}, {"C", {{1.0, 0.0}}}, {"W", {{2.0, 0.0}, {0.0, 1.0}}}, {"V", {{1.0}}}},
      {{"A", {{1.2, 0.15}, {0.0, 1.1}}}, {"C", {{1.0, 0.2}}}, {"W", {{1.0, 0.5}, {0.5, 0.5}}}, {"V", {{3.0}}}},
  });
}

json sec6_energy() {
  return {{"values", {0.0, 1.0, 2.0}},
          {"rows", {{0.2, 0.3, 0.5}, {0.3, 0.4, 0.3}, {0.1, 0.2, 0.7}}}};
}

json sec6_link() {
  return {{"sigma2", 0.04}, {"jam_gain", 5.0}, {"modulation", {{"type", "qam"}, {"b", 0.5}}}};
}

json scalar_system() {
  return json::array({{{"A", {{1.0}}}, {"C", {{1.0}}}, {"W", {{1.0}}}, {"V", {{1.0}}}}});
}

json paper_sec6() {
  return {
      {"name", "paper_sec6"},
      {"problem",
       {{"systems", sec6_systems()},
        {"channel_chain", {{"values", {0.02, 0.09}}, {"rows", {{0.8, 0.2}, {0.2, 0.8}}}}},
        {"energy_chain", sec6_energy()},
        {"links", sec6_link()},
        {"battery", {{"b_max", 3}, {"p_max", 1}}},
        {"L", 20}}},
      {"solver", {{"span_tol", 1e-9}, {"max_sweeps", 100000}, {"pruned", false}, {"tol_struct", 1e-6}}},
      {"learn",
       {{"mode", "standard"},
        {"epsilon", 0.1},
        {"xi", {{"c", 5.0}, {"k0", 10.0}, {"B", 1}}},
        {"zeta", {{"c", 5.0}, {"k0", 10.0}, {"B", 1}}},
        {"clock", "visit"},
        {"dual_scale", 1.0},
        {"q_init", 60.0},
        {"horizon", 5000000},
        {"eval_every", 100000},
        {"seed", 1},
        {"log_residual", false}}},
      {"eval", {{"horizon", 2000000}, {"seeds", {1, 2, 3, 4, 5}}, {"policies", {"rvi", "greedy", "random"}}}},
      {"output", "out/paper_sec6"},
  };
}

json paper_sec6_small() {
  json doc = paper_sec6();
  doc["name"] = "paper_sec6_small";
  doc["problem"]["channel_chain"] = {{"values", {0.02}}, {"rows", {{1.0}}}};
  doc["problem"]["L"] = 5;
  doc["learn"]["horizon"] = 1000000;
  doc["learn"]["xi"] = {{"c", 1.0}, {"k0", 10.0}, {"B", 1}};
  doc["learn"]["zeta"] = {{"c", 1.0}, {"k0", 10.0}, {"B", 1}};
  doc["learn"]["q_init"] = 0.0;
  doc["learn"]["eval_every"] = 0;
  doc["learn"]["log_residual"] = true;
  json marks = json::array();
  for (std::uint64_t k : {1000, 3000, 10000, 30000, 100000, 200000, 300000, 400000, 500000, 600000,
                          700000, 800000, 900000, 1000000})
    marks.push_back(k);
  doc["learn"]["checkpoints"] = marks;
  doc["output"] = "out/paper_sec6_small";
  return doc;
}

json toy_n1() {
  return {
      {"name", "toy_n1"},
      {"problem",
       {{"systems", scalar_system()},
        {"channel_chain", {{"values", {0.02}}, {"rows", {{1.0}}}}},
        {"energy_chain", {{"values", {0.0, 1.0}}, {"rows", {{0.5, 0.5}, {0.5, 0.5}}}}},
        {"links", {{"sigma2", 0.04}, {"jam_gain", 5.0}, {"modulation", {{"type", "qam"}, {"b", 0.5}}}}},
        {"battery", {{"b_max", 1}, {"p_max", 1}}},
        {"L", 2}}},
      {"solver", {{"span_tol", 1e-12}, {"max_sweeps", 1000000}}},
      {"learn", {{"mode", "standard"}, {"epsilon", 0.2}, {"horizon", 1000000}, {"eval_every", 100000}, {"clock", "visit"}}},
      {"eval", {{"horizon", 200000}, {"seeds", {1}}}},
      {"output", "out/toy_n1"},
  };
}

json degenerate() {
  return {
      {"name", "degenerate"},
      {"problem",
       {{"systems", scalar_system()},
        {"channel_chain", {{"values", {0.02}}, {"rows", {{1.0}}}}},
        {"energy_chain", {{"values", {0.0}}, {"rows", {{1.0}}}}},
        {"links", {{"sigma2", 0.04}, {"modulation", {{"type", "table"}, {"points", {{0.0, 1.0}}}}}}},
        {"battery", {{"b_max", 0}, {"p_max", 1}}},
        {"L", 0}}},
      {"solver", {{"span_tol", 1e-12}}},
      {"learn", {{"horizon", 1000}, {"eval_every", 100}}},
      {"eval", {{"horizon", 1000}, {"seeds", {1}}, {"policies", {"rvi"}}}},
      {"output", "out/degenerate"},
  };
}

json unit_rate() {
  json doc = paper_sec6();
  doc["name"] = "unit_rate";
  doc["problem"]["links"] = {{"sigma2", 0.04}, {"modulation", {{"type", "table"}, {"points", {{0.0, 1.0}}}}}};
  doc["problem"]["L"] = 3;
  doc["output"] = "out/unit_rate";
  return doc;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"paper_sec6", "paper_sec6_small", "toy_n1", "degenerate", "unit_rate"};
}

json preset_json(std::string_view name) {
  if (name == "paper_sec6") return paper_sec6();
  if (name == "paper_sec6_small") return paper_sec6_small();
  if (name == "toy_n1") return toy_n1();
  if (name == "degenerate") return degenerate();
  if (name == "unit_rate") return unit_rate();
  throw ConfigError("preset", "unknown preset \"" + std::string(name) + "\"");
}

std::string config_hash(const json& doc) {
  const std::string text = doc.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hjam
