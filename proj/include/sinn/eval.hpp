#pragma once

// Experiment drivers on top of training: grid search with an on-disk cell
// cache, the SINN versus NN ablation, class histograms over time windows
// and the method comparison table.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sinn/data.hpp"
#include "sinn/metrics.hpp"
#include "sinn/model.hpp"

namespace sinn {

/// Axis name -> candidate values as text. Known axes: variant, L, width,
/// alpha, beta, K.
struct GridSpec {
  std::map<std::string, std::vector<std::string>> axes;

  void validate() const;
};

const std::vector<std::string>& grid_axis_names();
GridSpec default_grid();
/// Keeps only the named axes of `spec`; the rest collapse to the base config.
GridSpec subset_grid(const GridSpec& spec, const std::vector<std::string>& keep);

/// Cartesian product in a fixed order (variant slowest, K fastest).
std::vector<SinnConfig> expand_grid(const SinnConfig& base, const GridSpec& spec);

/// Hex digest of the config together with a fingerprint of the training and
/// validation posts, so a cache directory is never reused across datasets.
std::string config_hash(const SinnConfig& config, const DatasetSplit& split);

enum class CellStatus { Trained, Cached, Failed };

struct GridCell {
  std::size_t index = 0;
  std::string hash;
  SinnConfig config;
  CellStatus status = CellStatus::Failed;
  std::string error;
  double val_f1 = 0.0;
  double val_acc = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells;      // in expansion order
  std::optional<std::size_t> best;  // index into cells
  Metrics test;                     // winner only
};

/// Trains every cell (jobs workers), ranks by validation macro-F1 with the
/// lower index winning ties, and evaluates the winner on the test split.
/// Each cell writes runs_dir/<hash>/{checkpoint.json,history.csv,metrics.json}
/// and is skipped when those already exist. Cell training seeds are derived
/// from the base seed and the cell hash.
GridResult grid_search(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& base,
                       const GridSpec& spec, const std::filesystem::path& runs_dir, std::size_t jobs = 1);

/// Highest validation F1 among completed cells; the lower index wins ties.
std::optional<std::size_t> select_best(const std::vector<GridCell>& cells);

/// Ranked by validation F1; failed cells follow with empty metric fields.
std::string leaderboard_csv(const GridResult& result);

struct AblationRow {
  std::uint64_t seed = 0;
  double sinn_acc = 0.0, sinn_f1 = 0.0;
  double nn_acc = 0.0, nn_f1 = 0.0;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  AblationRow median;  // seed field unused
  std::vector<std::vector<EpochRecord>> sinn_history, nn_history;
};

/// The config with the ODE and regularization weights removed.
SinnConfig nn_config(SinnConfig config);

/// SINN and its alpha = beta = 0 counterpart trained per seed on the same
/// split; test-split metrics per seed plus the median of each column.
AblationResult ablation_sinn_vs_nn(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& config,
                                   const std::vector<std::uint64_t>& seeds);

std::string ablation_csv(const AblationResult& result);

double median(std::vector<double> v);

/// Label histogram of posts with time in [begin, end). `labels` overrides
/// the posts' own labels (e.g. predictions) when non-empty.
std::vector<std::size_t> class_distribution(std::span<const Post> posts, double begin, double end, int num_classes,
                                            std::span<const int> labels = {});
std::string class_distribution_csv(const std::vector<std::size_t>& counts);

struct ReportRow {
  std::string method;
  std::optional<Metrics> metrics;  // empty: method not run
};

/// Methods in comparison-table order, with unavailable ones included.
std::vector<std::string> report_methods();

/// "method,ACC,F1"; the best value of each column carries a trailing '*',
/// methods without results show "-".
std::string report_csv(const std::vector<ReportRow>& rows);

}  // namespace sinn
