#include "sinn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include <nlohmann/json.hpp>

#include "sinn/errors.hpp"
#include "sinn/io.hpp"
#include "sinn/rng.hpp"

namespace sinn {

namespace {

std::size_t parse_count(const std::string& axis, const std::string& text) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || text[0] == '-' || v == 0)
    throw InputError("grid axis " + axis + ": expected a positive integer, got \"" + text + "\"");
  return v;
}

double parse_real(const std::string& axis, const std::string& text) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || text.empty() || !std::isfinite(v))
    throw InputError("grid axis " + axis + ": expected a number, got \"" + text + "\"");
  return v;
}

void apply_axis(SinnConfig& c, const std::string& axis, const std::string& value) {
  if (axis == "variant")
    c.variant = parse_ode_variant(value);
  else if (axis == "L")
    c.layers = parse_count(axis, value);
  else if (axis == "width")
    c.width = parse_count(axis, value);
  else if (axis == "K")
    c.K = parse_count(axis, value);
  else if (axis == "alpha")
    c.alpha = parse_real(axis, value);
  else if (axis == "beta")
    c.beta = parse_real(axis, value);
  else
    throw InputError("unknown grid axis \"" + axis + "\"");
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct CellFiles {
  std::filesystem::path dir;
  std::filesystem::path checkpoint() const { return dir / "checkpoint.json"; }
  std::filesystem::path history() const { return dir / "history.csv"; }
  std::filesystem::path metrics() const { return dir / "metrics.json"; }
  std::filesystem::path config() const { return dir / "config.json"; }
  bool complete() const {
    return std::filesystem::exists(checkpoint()) && std::filesystem::exists(history()) &&
           std::filesystem::exists(metrics());
  }
};

Metrics evaluate(const SinnModel& model, const OpinionDataset& data) {
  return compute_metrics(data.labels(), predict_labels(model, data.posts()), data.num_classes());
}

void run_cell(GridCell& cell, const DatasetSplit& split, const ProfileCorpus& corpus, const CellFiles& files) {
  if (files.complete()) {
    const auto j = nlohmann::json::parse(read_text_file(files.metrics()));
    cell.val_f1 = j.at("validation").at("macro_f1").get<double>();
    cell.val_acc = j.at("validation").at("accuracy").get<double>();
    cell.status = CellStatus::Cached;
    return;
  }
  const auto result = train(split, corpus, cell.config);
  const Metrics val = evaluate(result.model, split.val);
  nlohmann::ordered_json m;
  m["config_hash"] = cell.hash;
  m["best_epoch"] = result.best_epoch;
  m["validation"] = nlohmann::ordered_json::parse(metrics_to_json(val));
  write_text_file(files.config(), sinn_config_to_json(cell.config).dump(2) + "\n");
  write_text_file(files.history(), history_csv(result.history));
  save_checkpoint(result.model, files.checkpoint());
  // metrics last: its presence marks the cell complete
  write_text_file(files.metrics(), m.dump(2) + "\n");
  cell.val_f1 = val.macro_f1;
  cell.val_acc = val.accuracy;
  cell.status = CellStatus::Trained;
}

}  // namespace

void GridSpec::validate() const {
  if (axes.empty()) throw InputError("grid: no axes");
  for (const auto& [name, values] : axes) {
    if (std::find(grid_axis_names().begin(), grid_axis_names().end(), name) == grid_axis_names().end())
      throw InputError("unknown grid axis \"" + name + "\"");
    if (values.empty()) throw InputError("grid axis " + name + " has no values");
  }
}

const std::vector<std::string>& grid_axis_names() {
  static const std::vector<std::string> names{"variant", "L", "width", "alpha", "beta", "K"};
  return names;
}

GridSpec default_grid() {
  GridSpec g;
  g.axes["variant"] = {"degroot", "fj", "bcm", "sbcm"};
  g.axes["L"] = {"3", "5", "7"};
  g.axes["width"] = {"8", "12", "16"};
  g.axes["alpha"] = {"0.1", "1.0", "5.0"};
  g.axes["beta"] = {"0.1", "1.0", "5.0"};
  g.axes["K"] = {"1", "2", "3"};
  return g;
}

GridSpec subset_grid(const GridSpec& spec, const std::vector<std::string>& keep) {
  GridSpec out;
  for (const auto& name : keep) {
    auto it = spec.axes.find(name);
    if (it == spec.axes.end()) throw InputError("unknown grid axis \"" + name + "\"");
    out.axes[name] = it->second;
  }
  return out;
}

std::vector<SinnConfig> expand_grid(const SinnConfig& base, const GridSpec& spec) {
  spec.validate();
  std::vector<SinnConfig> out{base};
  for (const auto& axis : grid_axis_names()) {
    auto it = spec.axes.find(axis);
    if (it == spec.axes.end()) continue;
    std::vector<SinnConfig> next;
    next.reserve(out.size() * it->second.size());
    for (const auto& c : out)
      for (const auto& value : it->second) {
        SinnConfig cell = c;
        apply_axis(cell, axis, value);
        next.push_back(cell);
      }
    out = std::move(next);
  }
  for (const auto& c : out) c.validate();
  return out;
}

std::string config_hash(const SinnConfig& config, const DatasetSplit& split) {
  std::uint64_t h = fnv1a(sinn_config_to_json(config).dump());
  h = fnv1a(format_dataset(split.train), h);
  h = fnv1a(format_dataset(split.val), h);
  return hex64(h);
}

GridResult grid_search(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& base,
                       const GridSpec& spec, const std::filesystem::path& runs_dir, std::size_t jobs) {
  GridResult result;
  const auto configs = expand_grid(base, spec);
  result.cells.resize(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) {
    GridCell& cell = result.cells[i];
    cell.index = i;
    cell.config = configs[i];
    cell.hash = config_hash(configs[i], split);
    cell.config.seed = mix_seed(base.seed, fnv1a(cell.hash));
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      GridCell& cell = result.cells[i];
      try {
        run_cell(cell, split, corpus, CellFiles{runs_dir / cell.hash});
      } catch (const std::exception& e) {
        cell.status = CellStatus::Failed;
        cell.error = e.what();
      }
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, result.cells.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.best = select_best(result.cells);
  if (result.best) {
    const GridCell& win = result.cells[*result.best];
    const SinnModel model = load_checkpoint(CellFiles{runs_dir / win.hash}.checkpoint(), corpus);
    result.test = evaluate(model, split.test);
  }
  return result;
}

std::optional<std::size_t> select_best(const std::vector<GridCell>& cells) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].status == CellStatus::Failed) continue;
    if (!best || cells[i].val_f1 > cells[*best].val_f1) best = i;
  }
  return best;
}

std::string leaderboard_csv(const GridResult& result) {
  std::vector<const GridCell*> order;
  for (const auto& c : result.cells) order.push_back(&c);
  std::stable_sort(order.begin(), order.end(), [](const GridCell* a, const GridCell* b) {
    const bool fa = a->status == CellStatus::Failed, fb = b->status == CellStatus::Failed;
    if (fa != fb) return fb;
    if (fa) return false;
    return a->val_f1 > b->val_f1;
  });
  CsvWriter csv({"config_hash", "variant", "L", "width", "alpha", "beta", "K", "val_f1", "val_acc"});
  for (const GridCell* c : order) {
    const bool failed = c->status == CellStatus::Failed;
    csv.row({c->hash, std::string(to_string(c->config.variant)), std::to_string(c->config.layers),
             std::to_string(c->config.width), format_double(c->config.alpha), format_double(c->config.beta),
             std::to_string(c->config.K), failed ? "" : format_double(c->val_f1),
             failed ? "" : format_double(c->val_acc)});
  }
  return csv.str();
}

SinnConfig nn_config(SinnConfig config) {
  config.alpha = 0.0;
  config.beta = 0.0;
  return config;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

AblationResult ablation_sinn_vs_nn(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& config,
                                   const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw UsageError("ablation: no seeds");
  AblationResult out;
  for (std::uint64_t seed : seeds) {
    SinnConfig sinn = config;
    sinn.seed = seed;
    const auto a = train(split, corpus, sinn);
    const auto b = train(split, corpus, nn_config(sinn));
    const Metrics ma = evaluate(a.model, split.test), mb = evaluate(b.model, split.test);
    out.rows.push_back({seed, ma.accuracy, ma.macro_f1, mb.accuracy, mb.macro_f1});
    out.sinn_history.push_back(a.history);
    out.nn_history.push_back(b.history);
  }
  auto column = [&](double AblationRow::*field) {
    std::vector<double> v;
    for (const auto& r : out.rows) v.push_back(r.*field);
    return median(v);
  };
  out.median = {0, column(&AblationRow::sinn_acc), column(&AblationRow::sinn_f1), column(&AblationRow::nn_acc),
                column(&AblationRow::nn_f1)};
  return out;
}

std::string ablation_csv(const AblationResult& result) {
  CsvWriter csv({"seed", "sinn_acc", "sinn_f1", "nn_acc", "nn_f1"});
  auto add = [&](const std::string& key, const AblationRow& r) {
    csv.row({key, format_double(r.sinn_acc), format_double(r.sinn_f1), format_double(r.nn_acc),
             format_double(r.nn_f1)});
  };
  for (const auto& r : result.rows) add(std::to_string(r.seed), r);
  add("median", result.median);
  return csv.str();
}

std::vector<std::size_t> class_distribution(std::span<const Post> posts, double begin, double end, int num_classes,
                                            std::span<const int> labels) {
  if (num_classes < 1) throw UsageError("class_distribution: need at least one class");
  if (!labels.empty() && labels.size() != posts.size())
    throw UsageError("class_distribution: labels and posts differ in length");
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < posts.size(); ++i) {
    if (!(posts[i].time >= begin && posts[i].time < end)) continue;
    const int label = labels.empty() ? posts[i].label : labels[i];
    if (label < 0 || label >= num_classes) throw InputError("class_distribution: label out of range");
    counts[static_cast<std::size_t>(label)] += 1;
  }
  return counts;
}

std::string class_distribution_csv(const std::vector<std::size_t>& counts) {
  CsvWriter csv({"class", "count"});
  for (std::size_t k = 0; k < counts.size(); ++k) csv.row({std::to_string(k), std::to_string(counts[k])});
  return csv.str();
}

std::vector<std::string> report_methods() {
  return {"Voter", "DeGroot", "AsLM", "SLANT", "SLANT+", "NN", "Proposed"};
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  double best_acc = -1.0, best_f1 = -1.0;
  for (const auto& r : rows)
    if (r.metrics) {
      best_acc = std::max(best_acc, r.metrics->accuracy);
      best_f1 = std::max(best_f1, r.metrics->macro_f1);
    }
  auto cell = [](double v, double best) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf) + (v == best ? "*" : "");
  };
  CsvWriter csv({"method", "ACC", "F1"});
  for (const auto& r : rows) {
    if (r.metrics)
      csv.row({r.method, cell(r.metrics->accuracy, best_acc), cell(r.metrics->macro_f1, best_f1)});
    else
      csv.row({r.method, "-", "-"});
  }
  return csv.str();
}

}  // namespace sinn
