#include "reactsim/app.hpp"

#include <cstdio>
#include <functional>
#include <iostream>

#include "reactsim/errors.hpp"
#include "reactsim/svg.hpp"

namespace reactsim::app {

using io::Json;

namespace {

// One JSON object of the run config; every read names the full key path on failure.
class Section {
 public:
  Section(const Json& j, std::string path, std::initializer_list<std::string_view> allowed)
      : j_(j), path_(std::move(path)) {
    io::reject_unknown_keys(j_, allowed, path_);
  }

  bool has(const char* key) const { return j_.contains(key); }
  std::string path_of(const char* key) const { return path_ + "." + key; }
  const Json& raw(const char* key) const { return j_.at(key); }

  template <typename T>
  void read(const char* key, T& target) const {
    if (!has(key)) return;
    try {
      target = j_.at(key).get<T>();
    } catch (const Json::exception&) {
      throw IoError("wrong type for '" + path_of(key) + "'");
    }
  }

  template <typename T>
  void read(const char* key, std::optional<T>& target) const {
    if (!has(key) || j_.at(key).is_null()) return;
    T v{};
    read(key, v);
    target = v;
  }

  Section sub(const char* key, std::initializer_list<std::string_view> allowed) const {
    return Section(j_.at(key), path_of(key), allowed);
  }

 private:
  const Json& j_;
  std::string path_;
};

void read_path(const Section& s, const char* key, std::optional<fs::path>& target) {
  std::optional<std::string> p;
  s.read(key, p);
  if (p) target = fs::path(*p);
}

FollowParams parse_follow(const Section& s) {
  FollowParams p;
  s.read("a_max", p.a_max);
  s.read("b", p.b);
  s.read("s0", p.s0);
  s.read("time_headway", p.time_headway);
  s.read("v0", p.v0);
  s.read("gap_cap", p.gap_cap);
  s.read("lookahead_time", p.lookahead_time);
  s.read("min_lookahead", p.min_lookahead);
  return p;
}

FollowParams parse_follow_in(const Section& parent) {
  return parse_follow(parent.sub("params", {"a_max", "b", "s0", "time_headway", "v0", "gap_cap", "lookahead_time",
                                            "min_lookahead"}));
}

}  // namespace

RunConfig parse_run_config(const Json& doc, const fs::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  const Section root(doc, "config", {"map", "sim", "mode", "policies", "ego", "metrics", "train"});
  root.read("map", cfg.map);

  if (root.has("sim")) {
    const Section s = root.sub("sim", {"dt", "horizon", "seed", "noise", "interrupt_on_ego_collision", "roi_radius",
                                       "phi_max", "jobs"});
    s.read("dt", cfg.sim.dt);
    s.read("horizon", cfg.sim.horizon_steps);
    s.read("seed", cfg.sim.seed);
    s.read("interrupt_on_ego_collision", cfg.sim.interrupt_on_ego_collision);
    s.read("roi_radius", cfg.sim.roi_radius);
    s.read("phi_max", cfg.sim.phi_max);
    s.read("jobs", cfg.sim.jobs);
    if (s.has("noise")) {
      const Section n = s.sub("noise", {"sigma_phi", "sigma_v"});
      n.read("sigma_phi", cfg.sim.control_noise.sigma_phi);
      n.read("sigma_v", cfg.sim.control_noise.sigma_v);
    }
  }

  if (root.has("mode")) {
    const Section m = root.sub("mode", {"name", "episodes", "location", "source_log", "source_step", "sampler",
                                        "behaviour"});
    std::string name = "full";
    m.read("name", name);
    cfg.mode = mode_from_string(name);
    m.read("episodes", cfg.episodes);
    if (m.has("location")) {
      const Section l = m.sub("location", {"x", "y", "yaw"});
      Pose2 p;
      l.read("x", p.x);
      l.read("y", p.y);
      l.read("yaw", p.yaw);
      cfg.location = p;
    }
    read_path(m, "source_log", cfg.source_log);
    m.read("source_step", cfg.source_step);
    if (m.has("sampler")) {
      const Section s = m.sub("sampler", {"kind", "agents_mean", "min_gap", "speed_min", "speed_max",
                                          "placement_radius", "max_attempts", "dataset", "radius"});
      s.read("kind", cfg.sampler);
      if (cfg.sampler != "procedural" && cfg.sampler != "empirical") {
        throw IoError("config.mode.sampler.kind must be procedural or empirical");
      }
      s.read("agents_mean", cfg.procedural.agents_mean);
      s.read("min_gap", cfg.procedural.min_gap);
      s.read("speed_min", cfg.procedural.speed_min);
      s.read("speed_max", cfg.procedural.speed_max);
      s.read("placement_radius", cfg.procedural.placement_radius);
      s.read("max_attempts", cfg.procedural.max_attempts);
      read_path(s, "dataset", cfg.empirical_dataset);
      s.read("radius", cfg.empirical_radius);
    }
    if (m.has("behaviour")) {
      const Json& arr = m.raw("behaviour");
      if (!arr.is_array()) throw IoError("config.mode.behaviour: expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        const Section b(arr[i], "config.mode.behaviour[" + std::to_string(i) + "]", {"agent", "path"});
        BehaviourOverride o;
        b.read("agent", o.agent);
        std::vector<std::array<double, 2>> pts;
        b.read("path", pts);
        if (pts.size() < 2) throw DomainError(b.path_of("path") + ": needs at least 2 points");
        std::vector<Vec2> path;
        for (const auto& p : pts) path.push_back({p[0], p[1]});
        o.path = Polyline(std::move(path));
        cfg.behaviour.push_back(std::move(o));
      }
    }
  }

  if (root.has("policies")) {
    const Section p = root.sub("policies", {"default", "vehicle", "pedestrian", "cyclist", "agents", "weights", "log",
                                            "params"});
    p.read("default", cfg.policies.default_policy);
    for (AgentKind kind : {AgentKind::vehicle, AgentKind::pedestrian, AgentKind::cyclist}) {
      const std::string key(to_string(kind));
      std::optional<std::string> name;
      p.read(key.c_str(), name);
      if (name) cfg.policies.by_kind[kind] = *name;
    }
    if (p.has("agents")) {
      std::map<std::string, std::string> agents;
      p.read("agents", agents);
      for (const auto& [id, name] : agents) {
        try {
          std::size_t used = 0;
          const AgentId a = std::stoll(id, &used);
          if (used != id.size()) throw std::invalid_argument(id);
          cfg.policies.by_agent[a] = name;
        } catch (const std::logic_error&) {
          throw IoError("config.policies.agents: '" + id + "' is not an agent id");
        }
      }
    }
    read_path(p, "weights", cfg.policies.weights);
    read_path(p, "log", cfg.policies.log);
    if (p.has("params")) cfg.policies.follow = parse_follow_in(p);
  }

  if (root.has("ego")) {
    const Section e = root.sub("ego", {"controller", "log", "weights", "params"});
    e.read("controller", cfg.ego.controller);
    read_path(e, "log", cfg.ego.log);
    read_path(e, "weights", cfg.ego.weights);
    if (e.has("params")) cfg.ego.follow = parse_follow_in(e);
  }

  if (root.has("metrics")) {
    const Section m = root.sub("metrics", {"horizons", "d_thresh", "window", "kappa", "g_free", "l_thresh",
                                           "reactivity"});
    m.read("horizons", cfg.horizons);
    m.read("d_thresh", cfg.thresholds.d_thresh);
    m.read("window", cfg.thresholds.window);
    m.read("kappa", cfg.thresholds.kappa);
    m.read("g_free", cfg.thresholds.g_free);
    m.read("l_thresh", cfg.thresholds.l_thresh);
    if (m.has("reactivity")) {
      const Section r = m.sub("reactivity", {"scenes", "gap_min", "gap_max", "speed_min", "speed_max",
                                             "require_reaction"});
      r.read("scenes", cfg.suite.scenes);
      r.read("gap_min", cfg.suite.gap_min);
      r.read("gap_max", cfg.suite.gap_max);
      r.read("speed_min", cfg.suite.speed_min);
      r.read("speed_max", cfg.suite.speed_max);
      r.read("require_reaction", cfg.suite.require_reaction);
    }
  }

  if (root.has("train")) {
    const Section t = root.sub("train", {"lr", "batch", "epochs", "seed", "hidden", "optimizer", "standardize"});
    t.read("lr", cfg.train.lr);
    t.read("batch", cfg.train.batch);
    t.read("epochs", cfg.train.epochs);
    t.read("seed", cfg.train.seed);
    t.read("hidden", cfg.train.hidden);
    std::string opt = cfg.train.optimizer == Optimizer::adam ? "adam" : "sgd";
    t.read("optimizer", opt);
    if (opt != "adam" && opt != "sgd") throw IoError("config.train.optimizer must be adam or sgd");
    cfg.train.optimizer = opt == "adam" ? Optimizer::adam : Optimizer::sgd;
    t.read("standardize", cfg.train.standardize);
  }
  cfg.train.phi_max = cfg.sim.phi_max;
  cfg.suite.horizon = cfg.sim.dt * cfg.sim.horizon_steps;
  if (cfg.episodes < 1) throw DomainError("config.mode.episodes must be >= 1");
  cfg.sim.validate();
  cfg.procedural.validate();
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  return parse_run_config(io::parse_json(io::read_text(path), path.string()), path.parent_path());
}

RunConfig effective_config(const GlobalOptions& g) {
  RunConfig cfg = g.config ? load_run_config(*g.config) : RunConfig{};
  if (g.seed) {
    cfg.sim.seed = *g.seed;
    cfg.train.seed = *g.seed;
  }
  if (g.jobs < 1) throw DomainError("--jobs must be >= 1");
  cfg.sim.jobs = g.jobs;
  return cfg;
}

std::shared_ptr<const SemanticMap> resolve_map(const std::string& ref, const fs::path& base_dir) {
  if (ref == "builtin:straight") return std::make_shared<const SemanticMap>(straight_map());
  if (ref == "builtin:ring") return std::make_shared<const SemanticMap>(ring_map());
  if (ref == "builtin:intersection") return std::make_shared<const SemanticMap>(intersection_map());
  if (ref.starts_with("builtin:")) throw IoError("unknown builtin map '" + ref + "'");
  const fs::path p(ref);
  return std::make_shared<const SemanticMap>(io::load_map(p.is_absolute() ? p : base_dir / p));
}

PolicyPtr make_policy(const std::string& name, const FollowParams& follow, std::shared_ptr<const Episode> log,
                      const std::optional<Mlp>& weights) {
  if (name == "constant_velocity") return std::make_shared<ConstantVelocityPolicy>();
  if (name == "reactive_follow") return std::make_shared<ReactiveFollowPolicy>(follow);
  if (name == "stop_at_lights") {
    FollowParams p = follow;
    p.stop_at_all_lights = true;
    return std::make_shared<ReactiveFollowPolicy>(p);
  }
  if (name == "log_replay") {
    if (!log) throw DomainError("log_replay policy needs a log (policies.log or mode.source_log)");
    return std::make_shared<LogReplayPolicy>(std::move(log));
  }
  if (name == "learned") {
    if (!weights) throw DomainError("learned policy needs a weights file");
    return std::make_shared<LearnedPolicy>(*weights, follow);
  }
  throw DomainError("unknown policy '" + name + "'");
}

EgoPtr make_ego(const std::string& name, const FollowParams& follow, std::shared_ptr<const Episode> log,
                const std::optional<Mlp>& weights) {
  if (name == "stationary") return std::make_shared<StationaryEgo>();
  if (name == "log_replay") {
    if (!log) throw DomainError("log_replay ego needs a log (ego.log or mode.source_log)");
    return std::make_shared<LogReplayEgo>(std::move(log));
  }
  return std::make_shared<PolicyEgo>(make_policy(name, follow, std::move(log), weights));
}

namespace {

std::shared_ptr<const Episode> load_log(const RunConfig& cfg, const std::optional<fs::path>& specific) {
  if (specific) return std::make_shared<const Episode>(io::load_episode(cfg.resolve(*specific)));
  if (cfg.source_log) return std::make_shared<const Episode>(io::load_episode(cfg.resolve(*cfg.source_log)));
  return nullptr;
}

std::optional<Mlp> load_weights(const RunConfig& cfg, const std::optional<fs::path>& path) {
  if (!path) return std::nullopt;
  return io::load_mlp(cfg.resolve(*path));
}

bool uses(const RunConfig& cfg, const std::string& name) {
  if (cfg.policies.default_policy == name) return true;
  for (const auto& [k, n] : cfg.policies.by_kind) {
    if (n == name) return true;
  }
  for (const auto& [k, n] : cfg.policies.by_agent) {
    if (n == name) return true;
  }
  return false;
}

ModeInputs build_inputs(const RunConfig& cfg) {
  ModeInputs in;
  in.map = resolve_map(cfg.map, cfg.base_dir);
  const bool need_log = uses(cfg, "log_replay") || cfg.policies.log.has_value();
  const auto policy_log = need_log ? load_log(cfg, cfg.policies.log) : nullptr;
  const auto weights = uses(cfg, "learned") ? load_weights(cfg, cfg.policies.weights) : std::nullopt;
  const auto& pc = cfg.policies;
  in.policies.set_default(make_policy(pc.default_policy, pc.follow, policy_log, weights));
  for (const auto& [kind, name] : pc.by_kind) in.policies.set_default(kind, make_policy(name, pc.follow, policy_log, weights));
  for (const auto& [id, name] : pc.by_agent) in.policies.assign(id, make_policy(name, pc.follow, policy_log, weights));

  const auto ego_log = cfg.ego.controller == "log_replay" ? load_log(cfg, cfg.ego.log) : nullptr;
  in.ego = make_ego(cfg.ego.controller, cfg.ego.follow, ego_log, load_weights(cfg, cfg.ego.weights));

  if (cfg.sampler == "empirical") {
    if (!cfg.empirical_dataset) throw DomainError("empirical sampler needs mode.sampler.dataset");
    auto data = std::make_shared<std::vector<Episode>>(io::load_episode_dir(cfg.resolve(*cfg.empirical_dataset)));
    in.sampler = EmpiricalSampler{std::move(data), cfg.empirical_radius};
  } else {
    in.sampler = cfg.procedural;
  }
  in.location = cfg.location;
  if (cfg.mode == Mode::scenario || cfg.mode == Mode::behaviour) {
    if (!cfg.source_log) throw DomainError(std::string(to_string(cfg.mode)) + " mode needs mode.source_log");
    const Episode src = io::load_episode(cfg.resolve(*cfg.source_log));
    if (cfg.source_step < 0 || cfg.source_step >= static_cast<std::int64_t>(src.states.size())) {
      throw DomainError("mode.source_step outside the source log");
    }
    in.initial = src.states[static_cast<std::size_t>(cfg.source_step)];
  }
  in.behaviour = cfg.behaviour;
  return in;
}

fs::path report_base(const fs::path& out) {
  fs::path base = out;
  if (base.extension() == ".json" || base.extension() == ".csv") base.replace_extension();
  return base;
}

template <typename Report>
void write_report(const fs::path& out, const Report& r, std::ostream& log) {
  const fs::path base = report_base(out);
  io::write_text(fs::path(base.string() + ".json"), io::to_json(r).dump(2) + "\n");
  io::write_text(fs::path(base.string() + ".csv"), io::to_csv(r));
  log << io::summary_table(r);
}

std::vector<Episode> load_episodes(const fs::path& p) {
  if (fs::is_directory(p)) return io::load_episode_dir(p);
  return {io::load_episode(p)};
}

}  // namespace

std::vector<Episode> simulate(const RunConfig& cfg) {
  const ModeInputs in = build_inputs(cfg);
  std::vector<Episode> out;
  for (int i = 0; i < cfg.episodes; ++i) {
    SimConfig sim = cfg.sim;
    sim.seed = cfg.sim.seed + static_cast<std::uint64_t>(i);
    out.push_back(run_mode(cfg.mode, in, sim));
  }
  return out;
}

int cmd_simulate(const GlobalOptions& g, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  if (g.out.empty()) throw IoError("simulate needs --out");
  const std::vector<Episode> episodes = simulate(cfg);
  const bool single_file = episodes.size() == 1 && g.out.extension() == ".jsonl";
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "episode_%04zu.jsonl", i);
    const fs::path path = single_file ? g.out : g.out / name;
    io::save_episode(path, episodes[i]);
    out << path.string() << ": " << episodes[i].states.size() << " states, termination "
        << to_string(episodes[i].termination) << ", agent contacts " << count_agent_contacts(episodes[i]) << "\n";
  }
  return 0;
}

int cmd_train(const GlobalOptions& g, const fs::path& dataset_dir, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  if (g.out.empty()) throw IoError("train needs --out");
  const std::vector<Episode> episodes = io::load_episode_dir(dataset_dir);
  if (episodes.empty()) throw DomainError("no episode logs in " + dataset_dir.string());
  const auto map = resolve_map(cfg.map, cfg.base_dir);
  const std::vector<TrainingSample> samples = build_bc_dataset(episodes, *map, cfg.sim.phi_max);
  const TrainResult r = mlp_train(samples, cfg.train);
  io::save_mlp(g.out, r.model);
  out << "episodes " << episodes.size() << ", samples " << samples.size() << "\n";
  out << "initial loss " << io::format_double(r.initial_loss) << "\n";
  out << "final loss " << io::format_double(r.epoch_loss.empty() ? r.initial_loss : r.epoch_loss.back()) << "\n";
  return 0;
}

int cmd_eval(const GlobalOptions& g, const EvalInputs& in, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  if (g.out.empty()) throw IoError("eval needs --out");
  if (in.kind == "realism") {
    if (!in.sim || !in.gt) throw IoError("eval realism needs --sim and --gt");
    const auto sims = load_episodes(*in.sim);
    const auto gts = load_episodes(*in.gt);
    write_report(g.out, displacement_error(sims, gts, cfg.horizons), out);
    return 0;
  }
  if (in.kind == "reactivity") {
    const auto map = std::make_shared<const SemanticMap>(straight_map());
    const auto suite = make_static_lead_suite(cfg.suite, cfg.sim.seed, *map);
    const auto weights = in.subject == "learned" ? load_weights(cfg, cfg.policies.weights) : std::nullopt;
    const SimConfig sim = cfg.sim;
    const SubjectFactory factory = [&](std::size_t, const SimState& scene) -> PolicyPtr {
      if (in.subject == "log_replay") {
        return std::make_shared<LogReplayPolicy>(std::make_shared<const Episode>(constant_speed_log(scene, *map, sim)));
      }
      return make_policy(in.subject, cfg.policies.follow, nullptr, weights);
    };
    write_report(g.out, reactivity(suite, factory, *map, sim), out);
    return 0;
  }
  if (in.kind == "planner") {
    std::vector<Episode> episodes, references;
    if (in.fixtures) {
      if (*in.fixtures < 1) throw DomainError("--fixtures must be >= 1");
      const SemanticMap map = intersection_map();
      const auto weights = load_weights(cfg, cfg.ego.weights);
      const EgoPtr probe = make_ego(in.probe, cfg.ego.follow, nullptr, weights);
      for (int i = 0; i < *in.fixtures; ++i) {
        const PlannerFixture f = make_intersection_fixture(map, hash_combine(cfg.sim.seed, static_cast<std::uint64_t>(i)), cfg.sim);
        episodes.push_back(run_planner_probe(f, map, *probe, in.traffic, cfg.sim));
        references.push_back(f.reference);
      }
    } else {
      if (!in.episodes || !in.references) throw IoError("eval planner needs --fixtures or --episodes and --references");
      episodes = load_episodes(*in.episodes);
      references = load_episodes(*in.references);
    }
    write_report(g.out, planner_eval(episodes, references, cfg.thresholds), out);
    return 0;
  }
  throw IoError("unknown eval kind '" + in.kind + "'");
}

int cmd_render(const GlobalOptions& g, const RenderInputs& in, std::ostream& out) {
  if (in.every_n < 1) throw DomainError("--every must be >= 1");
  if (g.out.empty()) throw IoError("render needs --out");
  const Episode e = io::load_episode(in.log);
  std::shared_ptr<const SemanticMap> map;
  if (in.map) {
    map = std::make_shared<const SemanticMap>(io::load_map(*in.map));
  } else if (g.config) {
    const RunConfig cfg = effective_config(g);
    map = resolve_map(cfg.map, cfg.base_dir);
  } else if (e.map_id == "straight" || e.map_id == "ring" || e.map_id == "intersection") {
    map = resolve_map("builtin:" + e.map_id, ".");
  }
  fs::create_directories(g.out);
  int frames = 0;
  for (std::size_t k = 0; k < e.states.size(); k += static_cast<std::size_t>(in.every_n)) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.svg", k);
    io::write_text(g.out / name, svg_frame(e, k, map.get()));
    ++frames;
  }
  io::write_text(g.out / "overview.svg", svg_overview(e, map.get()));
  out << "wrote " << frames << " frames and overview.svg to " << g.out.string() << "\n";
  return 0;
}

int cmd_sample_state(const GlobalOptions& g, const std::optional<fs::path>& pgm_prefix, std::ostream& out) {
  const RunConfig cfg = effective_config(g);
  if (g.out.empty()) throw IoError("sample-state needs --out");
  if (cfg.mode != Mode::full && cfg.mode != Mode::journey) {
    throw DomainError("sample-state needs mode full or journey");
  }
  const ModeInputs in = build_inputs(cfg);
  const SimState s = initial_state_for(cfg.mode, in, cfg.sim);
  io::write_text(g.out, io::state_to_json(s).dump(2) + "\n");
  if (pgm_prefix) {
    write_pgm(render(s, *in.map, s.ego().pose, 0.5, 64, 0.0), *pgm_prefix);
  }
  out << "sampled " << s.agents.size() - 1 << " agents around ego at (" << io::format_double(s.ego().pose.x) << ", "
      << io::format_double(s.ego().pose.y) << ")\n";
  return 0;
}

int guarded(const std::function<int()>& command, std::ostream& err) {
  try {
    return command();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace reactsim::app
