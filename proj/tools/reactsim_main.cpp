#include <iostream>

#include <CLI11.hpp>

#include "reactsim/app.hpp"

namespace app = reactsim::app;

int main(int argc, char** argv) {
  CLI::App cli{"Closed-loop reactive traffic simulation"};
  cli.require_subcommand(1);
  cli.fallthrough();

  app::GlobalOptions g;
  std::string config, out;
  std::uint64_t seed = 0;
  cli.add_option("--config", config, "RunConfig JSON file");
  auto* seed_opt = cli.add_option("--seed", seed, "Seed (overrides the config)");
  cli.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cli.add_option("--out", out, "Output file or directory");

  auto* simulate = cli.add_subcommand("simulate", "Run episodes and write episode logs");

  std::string dataset;
  auto* train = cli.add_subcommand("train", "Train the behavioral-cloning policy");
  train->add_option("--dataset", dataset, "Directory of episode logs")->required();

  app::EvalInputs eval_in;
  std::string sim, gt, episodes, references, traffic = "reactive";
  int fixtures = 0;
  auto* eval = cli.add_subcommand("eval", "Compute a metric report");
  eval->add_option("kind", eval_in.kind, "realism | reactivity | planner")
      ->required()
      ->check(CLI::IsMember({"realism", "reactivity", "planner"}));
  eval->add_option("--sim", sim, "Simulated episode log or directory (realism)");
  eval->add_option("--gt", gt, "Ground-truth episode log or directory (realism)");
  eval->add_option("--subject", eval_in.subject, "Follower policy (reactivity)");
  auto* episodes_opt = eval->add_option("--episodes", episodes, "Planner episodes (planner)");
  eval->add_option("--references", references, "Reference episodes (planner)");
  auto* fixtures_opt = eval->add_option("--fixtures", fixtures, "Generated intersection fixtures (planner)");
  eval->add_option("--traffic", traffic, "log_replay | reactive (planner fixtures)")
      ->check(CLI::IsMember({"log_replay", "reactive"}));
  eval->add_option("--probe", eval_in.probe, "Ego controller under test (planner fixtures)");

  app::RenderInputs render_in;
  std::string render_map;
  auto* render = cli.add_subcommand("render", "Write SVG frames and an overview of an episode log");
  render->add_option("--log", render_in.log, "Episode log")->required();
  render->add_option("--every", render_in.every_n, "Frame stride");
  render->add_option("--map", render_map, "Map JSON (defaults to the config or the builtin named by the log)");

  std::string pgm;
  auto* sample = cli.add_subcommand("sample-state", "Sample an initial state");
  sample->add_option("--pgm", pgm, "Also write raster channels as <prefix>_<channel>.pgm");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    cli.exit(e);
    return 1;
  }

  if (!config.empty()) g.config = config;
  if (*seed_opt) g.seed = seed;
  g.out = out;

  return app::guarded(
      [&]() -> int {
        if (simulate->parsed()) return app::cmd_simulate(g, std::cout);
        if (train->parsed()) return app::cmd_train(g, dataset, std::cout);
        if (eval->parsed()) {
          if (!sim.empty()) eval_in.sim = sim;
          if (!gt.empty()) eval_in.gt = gt;
          if (*episodes_opt) eval_in.episodes = episodes;
          if (!references.empty()) eval_in.references = references;
          if (*fixtures_opt) eval_in.fixtures = fixtures;
          eval_in.traffic = reactsim::traffic_mode_from_string(traffic);
          return app::cmd_eval(g, eval_in, std::cout);
        }
        if (render->parsed()) {
          if (!render_map.empty()) render_in.map = render_map;
          return app::cmd_render(g, render_in, std::cout);
        }
        std::optional<app::fs::path> prefix;
        if (!pgm.empty()) prefix = pgm;
        return app::cmd_sample_state(g, prefix, std::cout);
      },
      std::cerr);
}
