#include "sinn/commands.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "sinn/baselines.hpp"
#include "sinn/errors.hpp"
#include "sinn/eval.hpp"
#include "sinn/gradcheck.hpp"
#include "sinn/io.hpp"
#include "sinn/json_util.hpp"
#include "sinn/metrics.hpp"

namespace sinn {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

const std::set<std::string> kTrainKeys{"epochs", "batch", "lr", "seed"};

fs::path resolve_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string_view to_string(Generator g) { return g == Generator::Sbcm ? "sbcm" : "degroot"; }

Generator parse_generator(const std::string& s, const std::string& where) {
  if (s == "sbcm") return Generator::Sbcm;
  if (s == "degroot") return Generator::Degroot;
  throw InputError(where + ": unknown generator \"" + s + "\" (expected sbcm or degroot)");
}

SbcmGenConfig preset_or_throw(const std::string& name, const std::string& where) {
  try {
    return sbcm_preset(name);
  } catch (const std::exception& e) {
    throw InputError(where + ": " + e.what());
  }
}

DataSection parse_data(const nlohmann::json& j, const fs::path& base) {
  DataSection d;
  JsonFields f(j, "data");
  std::string dataset, profiles;
  f.get("dataset", dataset);
  f.get("profiles", profiles);
  d.dataset = resolve_path(dataset, base);
  d.profiles = resolve_path(profiles, base);
  if (const auto* s = f.raw("split")) {
    JsonFields sf(*s, "data.split");
    sf.get("train", d.split.train_frac);
    sf.get("val", d.split.val_frac);
    sf.get("test", d.split.test_frac);
    sf.finish();
    try {
      d.split.validate();
    } catch (const std::exception& e) {
      throw InputError(std::string("data.split: ") + e.what());
    }
  }
  f.finish();
  return d;
}

SimSection parse_sim(const nlohmann::json& j) {
  SimSection s;
  JsonFields f(j, "sim");
  std::string generator = "sbcm";
  f.get("generator", generator);
  s.generator = parse_generator(generator, f.path("generator"));
  f.get("preset", s.preset);
  if (!s.preset.empty()) s.sbcm = preset_or_throw(s.preset, f.path("preset"));
  for (std::size_t* n : {&s.sbcm.num_users, &s.degroot.num_users}) f.get("num_users", *n);
  for (std::size_t* n : {&s.sbcm.num_steps, &s.degroot.num_steps}) f.get("num_steps", *n);
  for (std::uint64_t* n : {&s.sbcm.seed, &s.degroot.seed}) f.get("seed", *n);
  for (double* x : {&s.sbcm.init_low, &s.degroot.init_low}) f.get("init_low", *x);
  for (double* x : {&s.sbcm.init_high, &s.degroot.init_high}) f.get("init_high", *x);
  if (s.generator == Generator::Sbcm) {
    f.get("initiators_per_step", s.sbcm.initiators_per_step);
    f.get("mu", s.sbcm.mu);
    f.get("rho", s.sbcm.rho);
    f.get("eps", s.sbcm.eps);
    std::string rule(to_string(s.sbcm.update_rule));
    f.get("update_rule", rule);
    try {
      s.sbcm.update_rule = parse_update_rule(rule);
    } catch (const std::exception& e) {
      throw InputError(f.path("update_rule") + ": " + e.what());
    }
    s.sbcm.validate();
  } else {
    f.get("spectral_radius", s.degroot.spectral_radius);
    s.degroot.validate();
  }
  f.finish();
  return s;
}

EvalSection parse_eval(const nlohmann::json& j) {
  EvalSection e;
  JsonFields f(j, "eval");
  f.get("seeds", e.seeds);
  f.get("voter_repeats", e.voter_repeats);
  f.get("aslm_ridge", e.aslm_ridge);
  f.get("grid_dt", e.grid_dt);
  f.get("jobs", e.jobs);
  f.finish();
  if (e.seeds.empty()) throw InputError("eval.seeds: needs at least one seed");
  if (e.voter_repeats < 1) throw InputError("eval.voter_repeats: must be at least 1");
  if (!(e.aslm_ridge >= 0.0)) throw InputError("eval.aslm_ridge: must be non-negative");
  return e;
}

SinnConfig parse_model(const nlohmann::json* model, const nlohmann::json* train) {
  nlohmann::json merged = nlohmann::json::object();
  if (model) {
    if (!model->is_object()) throw InputError("model: expected a JSON object");
    for (auto it = model->begin(); it != model->end(); ++it) {
      if (kTrainKeys.count(it.key())) throw InputError("model." + it.key() + ": belongs in the train section");
      merged[it.key()] = it.value();
    }
  }
  SinnConfig c = sinn_config_from_json(merged, "model");
  if (train) {
    JsonFields f(*train, "train");
    f.get("epochs", c.epochs);
    f.get("batch", c.batch);
    f.get("lr", c.lr);
    f.get("seed", c.seed);
    f.finish();
  }
  try {
    c.validate();
  } catch (const std::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  }
  return c;
}

fs::path out_dir(const CommandOptions& opt) { return opt.out.empty() ? fs::path("out") : opt.out; }

void write_json(const fs::path& path, const ojson& j) { write_text_file(path, j.dump(2) + "\n"); }

void copy_config(const RunConfig& c, const fs::path& dir) {
  write_text_file(dir / "config.json", run_config_to_json(c).dump(2) + "\n");
}

ojson metrics_json(const Metrics& m) { return ojson::parse(metrics_to_json(m)); }

void write_result(const fs::path& dir, const std::string& method, double acc, double f1) {
  ojson j;
  j["method"] = method;
  j["accuracy"] = acc;
  j["macro_f1"] = f1;
  write_json(dir / "results" / (method + ".json"), j);
}

ProfileCorpus load_corpus(const RunConfig& c) {
  return c.data.profiles.empty() ? ProfileCorpus{} : load_profiles(c.data.profiles);
}

Metrics test_metrics(const SinnModel& model, const OpinionDataset& test) {
  return compute_metrics(test.labels(), predict_labels(model, test.posts()), test.num_classes());
}

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const std::size_t comma = std::min(item.find(',', start), item.size());
      if (comma > start) out.push_back(item.substr(start, comma - start));
      start = comma + 1;
    }
  }
  return out;
}

GridSpec grid_from_axes(const std::vector<std::string>& axes) {
  const GridSpec full = default_grid();
  if (axes.empty()) return full;
  GridSpec g;
  for (const auto& a : split_list(axes)) {
    const auto eq = a.find('=');
    const std::string name = a.substr(0, eq);
    if (!full.axes.count(name)) throw InputError("--axes: unknown grid axis \"" + name + "\"");
    if (eq == std::string::npos) {
      g.axes[name] = full.axes.at(name);
      continue;
    }
    std::vector<std::string> values;
    std::string rest = a.substr(eq + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      const std::size_t slash = std::min(rest.find('/', start), rest.size());
      if (slash > start) values.push_back(rest.substr(start, slash - start));
      start = slash + 1;
    }
    if (values.empty()) throw InputError("--axes: axis " + name + " has no values");
    g.axes[name] = values;
  }
  return g;
}

std::string method_name(const std::string& m) {
  if (m == "voter") return "Voter";
  if (m == "degroot") return "DeGroot";
  if (m == "aslm") return "AsLM";
  throw InputError("--method: unknown baseline \"" + m + "\" (expected voter, degroot or aslm)");
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  RunConfig c;
  JsonFields f(j, "config");
  if (const auto* d = f.raw("data")) c.data = parse_data(*d, base_dir);
  c.model = parse_model(f.raw("model"), f.raw("train"));
  if (const auto* s = f.raw("sim")) c.sim = parse_sim(*s);
  if (const auto* e = f.raw("eval")) c.eval = parse_eval(*e);
  f.finish();
  return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  ojson j;
  ojson data;
  data["dataset"] = c.data.dataset.string();
  data["profiles"] = c.data.profiles.string();
  data["split"] = {{"train", c.data.split.train_frac}, {"val", c.data.split.val_frac}, {"test", c.data.split.test_frac}};
  j["data"] = data;
  auto both = ojson::parse(sinn_config_to_json(c.model).dump());
  ojson model, train;
  for (auto it = both.begin(); it != both.end(); ++it)
    (kTrainKeys.count(it.key()) ? train : model)[it.key()] = it.value();
  j["model"] = model;
  j["train"] = train;
  ojson sim;
  sim["generator"] = std::string(to_string(c.sim.generator));
  if (c.sim.generator == Generator::Sbcm) {
    const auto& s = c.sim.sbcm;
    if (!c.sim.preset.empty()) sim["preset"] = c.sim.preset;
    sim["num_users"] = s.num_users;
    sim["num_steps"] = s.num_steps;
    sim["initiators_per_step"] = s.initiators_per_step;
    sim["mu"] = s.mu;
    sim["rho"] = s.rho;
    sim["update_rule"] = std::string(to_string(s.update_rule));
    sim["init_low"] = s.init_low;
    sim["init_high"] = s.init_high;
    sim["eps"] = s.eps;
    sim["seed"] = s.seed;
  } else {
    const auto& s = c.sim.degroot;
    sim["num_users"] = s.num_users;
    sim["num_steps"] = s.num_steps;
    sim["spectral_radius"] = s.spectral_radius;
    sim["init_low"] = s.init_low;
    sim["init_high"] = s.init_high;
    sim["seed"] = s.seed;
  }
  j["sim"] = sim;
  j["eval"] = {{"seeds", c.eval.seeds},
               {"voter_repeats", c.eval.voter_repeats},
               {"aslm_ridge", c.eval.aslm_ridge},
               {"grid_dt", c.eval.grid_dt},
               {"jobs", c.eval.jobs}};
  return nlohmann::json::parse(j.dump());
}

RunConfig load_run_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j, path.parent_path());
}

RunConfig resolve_config(const CommandOptions& opt) {
  RunConfig c = opt.config.empty() ? RunConfig{} : load_run_config(opt.config);
  if (!opt.preset.empty()) {
    const std::uint64_t seed = c.sim.sbcm.seed;
    c.sim.generator = Generator::Sbcm;
    c.sim.preset = opt.preset;
    c.sim.sbcm = preset_or_throw(opt.preset, "--preset");
    c.sim.sbcm.seed = seed;
  }
  if (opt.seed) {
    c.model.seed = *opt.seed;
    c.sim.sbcm.seed = *opt.seed;
    c.sim.degroot.seed = *opt.seed;
  }
  if (opt.jobs) c.eval.jobs = *opt.jobs;
  return c;
}

OpinionDataset load_or_simulate(const RunConfig& c) {
  if (!c.data.dataset.empty()) return load_dataset(c.data.dataset);
  if (c.sim.generator == Generator::Sbcm) return generate_sbcm_dataset(c.sim.sbcm).dataset;
  return generate_degroot_dataset(c.sim.degroot).dataset;
}

int cmd_simulate(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  Eigen::MatrixXd traj;
  OpinionDataset data;
  if (c.sim.generator == Generator::Sbcm) {
    auto run = generate_sbcm_dataset(c.sim.sbcm);
    write_text_file(dir / "interactions.csv", interactions_csv(run.interactions));
    traj = std::move(run.trajectory);
    data = std::move(run.dataset);
  } else {
    auto run = generate_degroot_dataset(c.sim.degroot);
    write_text_file(dir / "interaction_matrix.csv", trajectory_csv(run.interaction));
    traj = std::move(run.trajectory);
    data = std::move(run.dataset);
  }
  save_dataset(data, dir / "dataset.jsonl");
  write_text_file(dir / "trajectory.csv", trajectory_csv(traj));
  copy_config(c, dir);

  const Eigen::VectorXd first = traj.col(0), last = traj.col(traj.cols() - 1);
  const std::vector<double> x0(first.data(), first.data() + first.size());
  const std::vector<double> xt(last.data(), last.data() + last.size());
  const auto clusters = histogram_clusters(xt);
  ojson s;
  s["generator"] = std::string(to_string(c.sim.generator));
  if (!c.sim.preset.empty()) s["preset"] = c.sim.preset;
  if (c.sim.generator == Generator::Sbcm) s["rho"] = c.sim.sbcm.rho;
  s["num_users"] = data.num_users();
  s["num_steps"] = static_cast<std::size_t>(traj.cols());
  s["num_posts"] = data.size();
  s["initial_std"] = population_std(x0);
  s["final_std"] = population_std(xt);
  s["clusters"] = clusters.count;
  s["max_cluster_gap"] = clusters.max_gap;
  s["cluster_centers"] = clusters.centers;
  write_json(dir / "summary.json", s);
  out << s.dump() << "\n";
  return 0;
}

int cmd_train(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  const auto split = chronological_split(load_or_simulate(c), c.data.split);
  const auto corpus = load_corpus(c);
  copy_config(c, dir);
  const auto result = train(split, corpus, c.model);
  save_checkpoint(result.model, dir / "checkpoint.json");
  write_text_file(dir / "history.csv", history_csv(result.history));
  const Metrics val = compute_metrics(split.val.labels(), predict_labels(result.model, split.val.posts()),
                                      split.val.num_classes());
  const Metrics test = test_metrics(result.model, split.test);
  ojson m;
  m["best_epoch"] = result.best_epoch;
  m["validation"] = metrics_json(val);
  m["test"] = metrics_json(test);
  write_json(dir / "metrics.json", m);
  const bool nn = c.model.alpha == 0.0 && c.model.beta == 0.0;
  write_result(dir, nn ? "NN" : "Proposed", test.accuracy, test.macro_f1);
  out << "trained " << result.history.size() << " epochs, best epoch " << result.best_epoch << ": test accuracy "
      << format_double(test.accuracy) << ", macro-F1 " << format_double(test.macro_f1) << "\n";
  return 0;
}

int cmd_evaluate(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  const fs::path ckpt = opt.checkpoint.empty() ? dir / "checkpoint.json" : opt.checkpoint;
  if (!fs::exists(ckpt)) throw IoError("checkpoint not found: " + ckpt.string());
  const auto split = chronological_split(load_or_simulate(c), c.data.split);
  const auto model = load_checkpoint(ckpt, load_corpus(c));
  const auto pred = predict_labels(model, split.test.posts());
  const Metrics m = compute_metrics(split.test.labels(), pred, split.test.num_classes());
  copy_config(c, dir);
  write_text_file(dir / "metrics.json", metrics_to_json(m) + "\n");
  write_text_file(dir / "predictions.csv", predictions_csv(split.test.posts(), pred, "sinn"));
  out << "test accuracy " << format_double(m.accuracy) << ", macro-F1 " << format_double(m.macro_f1) << "\n";
  return 0;
}

int cmd_baseline(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  auto methods = split_list(opt.methods);
  if (methods.empty()) methods = {"voter", "degroot", "aslm"};
  for (const auto& m : methods) method_name(m);
  const auto split = chronological_split(load_or_simulate(c), c.data.split);
  const auto series = regularize_series(split.train, c.eval.grid_dt);
  for (const auto& w : series.warnings) out << "warning: " << w << "\n";
  const auto& posts = split.test.posts();
  const auto truth = split.test.labels();
  const int C = split.test.num_classes();
  copy_config(c, dir);
  ojson all;
  for (const auto& m : methods) {
    const std::string name = method_name(m);
    std::vector<int> pred;
    double acc = 0.0, f1 = 0.0;
    ojson entry;
    if (m == "voter") {
      const auto vp = voter_predict(series, posts, c.eval.voter_repeats, c.model.seed);
      for (const auto& run : vp.runs) {
        const Metrics r = compute_metrics(truth, run, C);
        acc += r.accuracy / static_cast<double>(vp.runs.size());
        f1 += r.macro_f1 / static_cast<double>(vp.runs.size());
      }
      pred = vp.majority;
      entry["repeats"] = vp.runs.size();
      entry["majority"] = metrics_json(compute_metrics(truth, pred, C));
    } else {
      std::vector<int> p =
          m == "degroot" ? degroot_predict(fit_degroot(series), posts) : aslm_predict(fit_aslm(series, c.eval.aslm_ridge), posts);
      const Metrics r = compute_metrics(truth, p, C);
      acc = r.accuracy;
      f1 = r.macro_f1;
      entry["metrics"] = metrics_json(r);
      pred = std::move(p);
    }
    entry["accuracy"] = acc;
    entry["macro_f1"] = f1;
    all[m] = entry;
    write_text_file(dir / ("predictions_" + m + ".csv"), predictions_csv(posts, pred, m));
    write_result(dir, name, acc, f1);
    out << name << ": accuracy " << format_double(acc) << ", macro-F1 " << format_double(f1) << "\n";
  }
  write_json(dir / "metrics.json", all);
  return 0;
}

int cmd_gridsearch(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  const GridSpec spec = grid_from_axes(opt.axes);
  const auto split = chronological_split(load_or_simulate(c), c.data.split);
  const auto corpus = load_corpus(c);
  copy_config(c, dir);
  const auto r = grid_search(split, corpus, c.model, spec, dir / "runs", c.eval.jobs);
  write_text_file(dir / "leaderboard.csv", leaderboard_csv(r));
  std::size_t failed = 0;
  for (const auto& cell : r.cells)
    if (cell.status == CellStatus::Failed) {
      ++failed;
      out << "cell " << cell.index << " (" << cell.hash << ") failed: " << cell.error << "\n";
    }
  if (!r.best) {
    out << "every grid cell failed\n";
    return 1;
  }
  const GridCell& win = r.cells[*r.best];
  ojson m;
  m["cells"] = r.cells.size();
  m["failed"] = failed;
  m["best_hash"] = win.hash;
  m["best_config"] = ojson::parse(sinn_config_to_json(win.config).dump());
  m["validation"] = {{"accuracy", win.val_acc}, {"macro_f1", win.val_f1}};
  m["test"] = metrics_json(r.test);
  write_json(dir / "metrics.json", m);
  write_text_file(dir / "history.csv", read_text_file(dir / "runs" / win.hash / "history.csv"));
  write_result(dir, "Proposed", r.test.accuracy, r.test.macro_f1);
  out << r.cells.size() << " cells, best " << win.hash << " (val macro-F1 " << format_double(win.val_f1)
      << "), test macro-F1 " << format_double(r.test.macro_f1) << "\n";
  return 0;
}

int cmd_ablate(const CommandOptions& opt, std::ostream& out) {
  const RunConfig c = resolve_config(opt);
  const fs::path dir = out_dir(opt);
  const std::vector<std::uint64_t> seeds = opt.seed ? std::vector<std::uint64_t>{*opt.seed} : c.eval.seeds;
  const auto split = chronological_split(load_or_simulate(c), c.data.split);
  copy_config(c, dir);
  const auto r = ablation_sinn_vs_nn(split, load_corpus(c), c.model, seeds);
  write_text_file(dir / "ablation.csv", ablation_csv(r));
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    write_text_file(dir / ("history_sinn_" + std::to_string(seeds[i]) + ".csv"), history_csv(r.sinn_history[i]));
    write_text_file(dir / ("history_nn_" + std::to_string(seeds[i]) + ".csv"), history_csv(r.nn_history[i]));
  }
  auto row_json = [](const AblationRow& row) {
    return ojson{{"sinn_acc", row.sinn_acc}, {"sinn_f1", row.sinn_f1}, {"nn_acc", row.nn_acc}, {"nn_f1", row.nn_f1}};
  };
  ojson m;
  m["seeds"] = seeds;
  ojson rows = ojson::array();
  for (const auto& row : r.rows) rows.push_back(row_json(row));
  m["per_seed"] = rows;
  m["median"] = row_json(r.median);
  write_json(dir / "metrics.json", m);
  write_result(dir, "Proposed", r.median.sinn_acc, r.median.sinn_f1);
  write_result(dir, "NN", r.median.nn_acc, r.median.nn_f1);
  out << "median macro-F1: SINN " << format_double(r.median.sinn_f1) << ", NN " << format_double(r.median.nn_f1)
      << "\n";
  return 0;
}

int cmd_gradcheck(const CommandOptions& opt, std::ostream& out) {
  const auto report = run_gradcheck(opt.seed.value_or(0), opt.cases);
  out << report.text();
  return report.pass() ? 0 : 1;
}

int cmd_report(const CommandOptions& opt, std::ostream& out) {
  const fs::path run = opt.run.empty() ? out_dir(opt) : opt.run;
  const fs::path results = run / "results";
  if (!fs::is_directory(results)) throw IoError("no results directory under " + run.string());
  std::map<std::string, Metrics> found;
  std::vector<std::string> extra;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(results))
    if (e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const auto j = nlohmann::json::parse(read_text_file(p));
    Metrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    const std::string name = p.stem().string();
    found[name] = m;
    const auto known = report_methods();
    if (std::find(known.begin(), known.end(), name) == known.end()) extra.push_back(name);
  }
  std::vector<ReportRow> rows;
  for (const auto& name : report_methods()) {
    auto it = found.find(name);
    rows.push_back({name, it == found.end() ? std::nullopt : std::optional<Metrics>(it->second)});
  }
  for (const auto& name : extra) rows.push_back({name, found.at(name)});
  const std::string csv = report_csv(rows);
  write_text_file((opt.out.empty() ? run : opt.out) / "report.csv", csv);
  out << csv;
  return 0;
}

}  // namespace sinn
