#pragma once

// Command implementations behind the sinn executable. Each command reads a
// RunConfig, writes its artifacts under one output directory (with the
// resolved config copied beside them) and returns a process exit code.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sinn/data.hpp"
#include "sinn/model.hpp"
#include "sinn/sim.hpp"

namespace sinn {

enum class Generator { Sbcm, Degroot };

struct SimSection {
  Generator generator = Generator::Sbcm;
  std::string preset;  // empty: plain SbcmGenConfig defaults
  SbcmGenConfig sbcm;
  DegrootGenConfig degroot;
};

struct DataSection {
  std::filesystem::path dataset;   // empty: simulate from the sim section
  std::filesystem::path profiles;  // optional
  SplitSpec split;
};

struct EvalSection {
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t voter_repeats = 10;
  double aslm_ridge = 1e-6;
  double grid_dt = 0.0;  // 0: median post gap
  std::size_t jobs = 1;
};

/// Sections data, model, train, sim and eval; every one is optional and
/// unknown keys anywhere are rejected. Relative paths resolve against the
/// directory of the config file.
struct RunConfig {
  DataSection data;
  SinnConfig model;  // model and train sections together
  SimSection sim;
  EvalSection eval;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

struct CommandOptions {
  std::filesystem::path config;  // empty: defaults
  std::filesystem::path out;  // empty: ./out (report: the run directory)
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::vector<std::string> methods;
  std::vector<std::string> axes;
  std::optional<std::size_t> jobs;
  std::size_t cases = 100;
  std::filesystem::path checkpoint;
  std::filesystem::path run;
};

/// Config file plus command-line overrides (--seed, --preset, --jobs).
RunConfig resolve_config(const CommandOptions& opt);

/// The dataset named in the config, or a fresh simulation when none is.
OpinionDataset load_or_simulate(const RunConfig& c);

int cmd_simulate(const CommandOptions& opt, std::ostream& out);
int cmd_train(const CommandOptions& opt, std::ostream& out);
int cmd_evaluate(const CommandOptions& opt, std::ostream& out);
int cmd_baseline(const CommandOptions& opt, std::ostream& out);
int cmd_gridsearch(const CommandOptions& opt, std::ostream& out);
int cmd_ablate(const CommandOptions& opt, std::ostream& out);
int cmd_gradcheck(const CommandOptions& opt, std::ostream& out);
int cmd_report(const CommandOptions& opt, std::ostream& out);

}  // namespace sinn
