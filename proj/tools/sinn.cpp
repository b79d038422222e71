#include <cstdio>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "sinn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Opinion-dynamics simulation, SINN training and evaluation"};
  app.require_subcommand(1);
  sinn::CommandOptions opt;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  using Command = std::function<int(const sinn::CommandOptions&, std::ostream&)>;
  const std::vector<std::tuple<std::string, std::string, Command>> commands{
      {"simulate", "generate a synthetic dataset, trajectory and interaction log", sinn::cmd_simulate},
      {"train", "train a model on the configured dataset", sinn::cmd_train},
      {"evaluate", "evaluate a checkpoint on the test split", sinn::cmd_evaluate},
      {"baseline", "run the Voter, DeGroot and AsLM baselines", sinn::cmd_baseline},
      {"gridsearch", "grid search over model hyperparameters", sinn::cmd_gridsearch},
      {"ablate", "SINN versus the data-only network over several seeds", sinn::cmd_ablate},
      {"gradcheck", "compare analytic gradients against finite differences", sinn::cmd_gradcheck},
      {"report", "comparison table from a run directory", sinn::cmd_report},
  };
  std::map<CLI::App*, Command> handlers;
  for (const auto& [name, help, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "run configuration (JSON)");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", seed, "overrides every seed in the config");
    if (name == "simulate" || name == "train" || name == "baseline" || name == "gridsearch" || name == "ablate")
      sub->add_option("--preset", opt.preset, "simulation preset");
    if (name == "baseline") sub->add_option("--method", opt.methods, "comma separated subset of voter,degroot,aslm");
    if (name == "gridsearch") {
      sub->add_option("--axes", opt.axes, "axes to search, NAME or NAME=v1/v2, comma separated");
      sub->add_option("--jobs", jobs, "parallel grid cells");
    }
    if (name == "gradcheck") sub->add_option("--cases", opt.cases, "random cases per variant");
    if (name == "evaluate") sub->add_option("--checkpoint", opt.checkpoint, "checkpoint (default <out>/checkpoint.json)");
    if (name == "report") sub->add_option("--run", opt.run, "run directory holding results/");
    handlers[sub] = fn;
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [sub, fn] : handlers) {
    if (!sub->parsed()) continue;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->get_option_no_throw("--jobs") && sub->count("--jobs")) opt.jobs = jobs;
    try {
      return fn(opt, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
