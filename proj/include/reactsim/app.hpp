#ifndef REACTSIM_APP_HPP
#define REACTSIM_APP_HPP

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "reactsim/io.hpp"
#include "reactsim/scenarios.hpp"

// Run configuration and the command implementations behind the `reactsim` executable.
namespace reactsim::app {

namespace fs = std::filesystem;

struct PolicyConfig {
  std::string default_policy = "reactive_follow";
  std::map<AgentKind, std::string> by_kind;
  std::map<AgentId, std::string> by_agent;
  std::optional<fs::path> weights;
  std::optional<fs::path> log;  // for log_replay; defaults to mode.source_log
  FollowParams follow;
};

struct EgoConfig {
  std::string controller = "reactive_follow";
  std::optional<fs::path> log;
  std::optional<fs::path> weights;
  FollowParams follow;
};

struct RunConfig {
  fs::path base_dir = ".";
  // A JSON map path (relative to the config file) or builtin:straight, builtin:ring, builtin:intersection.
  std::string map = "builtin:straight";
  SimConfig sim;

  Mode mode = Mode::full;
  int episodes = 1;
  std::optional<Pose2> location;
  std::optional<fs::path> source_log;
  std::int64_t source_step = 0;
  std::string sampler = "procedural";
  ProceduralConfig procedural;
  std::optional<fs::path> empirical_dataset;
  double empirical_radius = std::numeric_limits<double>::infinity();
  std::vector<BehaviourOverride> behaviour;

  PolicyConfig policies;
  EgoConfig ego;

  std::vector<double> horizons = kDefaultHorizons;
  PlannerThresholds thresholds;
  StaticLeadSuiteConfig suite;

  TrainConfig train;

  fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : base_dir / p; }
};

// Rejects unknown keys at every level, naming the full key path.
RunConfig parse_run_config(const io::Json& doc, const fs::path& base_dir = ".");
RunConfig load_run_config(const fs::path& path);

struct GlobalOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  fs::path out;
};

// Config from --config (defaults otherwise) with --seed and --jobs applied.
RunConfig effective_config(const GlobalOptions& g);

std::shared_ptr<const SemanticMap> resolve_map(const std::string& ref, const fs::path& base_dir);

PolicyPtr make_policy(const std::string& name, const FollowParams& follow, std::shared_ptr<const Episode> log,
                      const std::optional<Mlp>& weights);
EgoPtr make_ego(const std::string& name, const FollowParams& follow, std::shared_ptr<const Episode> log,
                const std::optional<Mlp>& weights);

// Episodes described by the config: episode i uses seed sim.seed + i.
std::vector<Episode> simulate(const RunConfig& cfg);

struct EvalInputs {
  std::string kind;  // realism | reactivity | planner
  std::optional<fs::path> sim, gt;                 // realism
  std::string subject = "reactive_follow";         // reactivity
  std::optional<fs::path> episodes, references;    // planner, precomputed
  std::optional<int> fixtures;                     // planner, generated intersection fixtures
  TrafficMode traffic = TrafficMode::reactive;
  std::string probe = "stop_at_lights";
};

struct RenderInputs {
  fs::path log;
  int every_n = 10;
  std::optional<fs::path> map;
};

// Each returns the process exit code and writes human-readable progress to `out`.
int cmd_simulate(const GlobalOptions& g, std::ostream& out);
int cmd_train(const GlobalOptions& g, const fs::path& dataset_dir, std::ostream& out);
int cmd_eval(const GlobalOptions& g, const EvalInputs& in, std::ostream& out);
int cmd_render(const GlobalOptions& g, const RenderInputs& in, std::ostream& out);
int cmd_sample_state(const GlobalOptions& g, const std::optional<fs::path>& pgm_prefix, std::ostream& out);

// Runs a command, mapping IoError to exit 1 and DomainError (or any other failure) to exit 2.
int guarded(const std::function<int()>& command, std::ostream& err);

}  // namespace reactsim::app

#endif  // REACTSIM_APP_HPP
