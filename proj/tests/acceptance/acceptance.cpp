// End-to-end acceptance checks. Run without arguments for every criterion or
// pass criterion numbers to run a subset; prints one PASS/FAIL line each and
// exits nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sinn/baselines.hpp"
#include "sinn/commands.hpp"
#include "sinn/data.hpp"
#include "sinn/eval.hpp"
#include "sinn/gradcheck.hpp"
#include "sinn/io.hpp"
#include "sinn/metrics.hpp"
#include "sinn/model.hpp"
#include "sinn/ode.hpp"
#include "sinn/sim.hpp"

using namespace sinn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> column(const Eigen::MatrixXd& m, Eigen::Index c) {
  const Eigen::VectorXd v = m.col(c);
  return {v.data(), v.data() + v.size()};
}

// 1
Outcome gradient_correctness() {
  const auto r = run_gradcheck(0, 100);
  double worst = 0.0;
  std::size_t checked = 0, groups = 0;
  for (const auto& g : r.groups) {
    if (g.name == "time_derivative") continue;
    worst = std::max(worst, g.max_rel_err);
    checked += g.checked;
    ++groups;
  }
  std::string d = std::to_string(groups) + " groups, " + std::to_string(checked) +
                  " entries, max rel err " + fmt("%.2e", worst);
  if (!r.pass()) d += ", failing seeds " + std::to_string(r.failing_case_seeds.size());
  return {r.pass(), d};
}

// 2
Outcome time_derivative() {
  const auto r = run_time_derivative_check(7, 100);
  return {r.pass(), "100 nets, max rel err " + fmt("%.2e", r.groups.at(0).max_rel_err)};
}

// 3
Outcome gumbel_fidelity() {
  const std::vector<double> p{0.2, 0.3, 0.5};
  const double tau = 0.1;
  const int n = 20000;
  Rng rng(3);
  std::vector<int> counts(3, 0);
  bool simplex = true, oracle = true;
  for (int i = 0; i < n; ++i) {
    const auto g = sample_gumbel_noise(3, rng);
    const auto z = gumbel_softmax<double>(p, g, tau);
    double total = 0.0;
    for (double v : z) {
      simplex &= v >= 0.0 && v <= 1.0;
      total += v;
    }
    simplex &= std::abs(total - 1.0) < 1e-12;
    const auto relaxed = std::max_element(z.begin(), z.end()) - z.begin();
    // Gumbel-max: argmax of log p + g is an exact categorical draw
    std::size_t hard = 0;
    for (std::size_t k = 1; k < 3; ++k)
      if (std::log(p[k]) + g[k] > std::log(p[hard]) + g[hard]) hard = k;
    oracle &= static_cast<std::size_t>(relaxed) == hard;
    counts[relaxed] += 1;
  }
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(counts[k] / double(n) - p[k]));
  return {simplex && oracle && worst <= 0.02, "max |freq - p| " + fmt("%.4f", worst) +
                                                  (oracle ? ", argmax agrees with Gumbel-max" : ", argmax disagrees") +
                                                  (simplex ? ", simplex ok" : ", simplex violated")};
}

// 4
Outcome synthetic_regimes() {
  bool ok = true;
  std::ostringstream d;
  d << "consensus std ratio";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = sbcm_preset("consensus");
    c.seed = seed;
    const auto run = generate_sbcm_dataset(c);
    const double ratio = population_std(column(run.trajectory, run.trajectory.cols() - 1)) /
                         population_std(column(run.trajectory, 0));
    ok &= ratio < 0.2;
    d << " " << fmt("%.3f", ratio);
  }
  d << "; polarization clusters/gap";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = sbcm_preset("polarization");
    c.seed = seed;
    const auto run = generate_sbcm_dataset(c);
    const auto cl = histogram_clusters(column(run.trajectory, run.trajectory.cols() - 1));
    ok &= cl.count >= 2 && cl.max_gap > 0.5;
    d << " " << cl.count << "/" << fmt("%.2f", cl.max_gap);
  }
  return {ok, d.str()};
}

// 5
Outcome sinn_vs_nn() {
  auto g = sbcm_preset("consensus");
  g.num_users = 50;
  g.num_steps = 100;
  g.seed = 0;
  const auto split = chronological_split(generate_sbcm_dataset(g).dataset, {});
  SinnConfig c;
  c.variant = OdeVariant::SBCM;
  c.epochs = 1000;
  const auto r = ablation_sinn_vs_nn(split, {}, c, {0, 1, 2, 3, 4});
  return {r.median.sinn_f1 >= r.median.nn_f1,
          "median test macro-F1 SINN " + fmt("%.4f", r.median.sinn_f1) + " vs NN " + fmt("%.4f", r.median.nn_f1)};
}

// 6
Outcome ode_trainability() {
  DegrootGenConfig g;
  g.num_users = 20;
  g.num_steps = 100;
  g.seed = 0;
  const auto split = chronological_split(generate_degroot_dataset(g).dataset, {});
  SinnConfig c;
  c.variant = OdeVariant::DeGroot;
  c.epochs = 1000;
  c.alpha = 1.0;
  c.beta = 0.0;
  const auto r = train(split, {}, c);
  const double first = r.history.front().ode_loss, last = r.history.back().ode_loss;
  const auto truth = split.test.labels();
  const Metrics sinn = compute_metrics(truth, predict_labels(r.model, split.test.posts()), 5);
  const auto voter = voter_predict(regularize_series(split.train), split.test.posts(), 10, 0);
  double voter_f1 = 0.0;
  for (const auto& run : voter.runs) voter_f1 += compute_metrics(truth, run, 5).macro_f1 / voter.runs.size();
  const double drop = first / last;
  return {drop >= 10.0 && sinn.macro_f1 > voter_f1, "ode loss " + fmt("%.3g", first) + " -> " + fmt("%.3g", last) +
                                                        " (" + fmt("%.1f", drop) + "x), test macro-F1 " +
                                                        fmt("%.3f", sinn.macro_f1) + " vs Voter " +
                                                        fmt("%.3f", voter_f1)};
}

// 7
Outcome baseline_consistency() {
  DegrootGenConfig g;
  g.num_users = 10;
  g.num_steps = 100;
  g.seed = 0;
  const auto run = generate_degroot_dataset(g);
  const auto split = chronological_split(run.dataset, {});
  const auto train_steps = static_cast<Eigen::Index>(split.train.posts().back().time) + 1;
  const auto fit = fit_degroot(series_from_trajectory(run.trajectory.leftCols(train_steps)));
  const double a_err = (fit.A - run.interaction).cwiseAbs().maxCoeff();
  const double acc = compute_metrics(split.test.labels(), degroot_predict(fit, split.test.posts()), 5).accuracy;

  // identity dynamics: every user keeps one label throughout
  Rng rng(1);
  std::vector<Post> posts;
  std::vector<int> fixed(10);
  for (int& l : fixed) l = static_cast<int>(rng.index(5));
  for (int t = 0; t < 100; ++t)
    for (std::size_t u = 0; u < 10; ++u) posts.push_back({u, static_cast<double>(t), fixed[u]});
  const OpinionDataset still(posts, 10, 5, 99.0);
  const auto aslm = fit_aslm(chronological_split(still, {}).train);
  const double w_err = (aslm.W - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff();
  return {a_err < 0.05 && acc > 0.9 && w_err < 0.05, "DeGroot max |A - A_hat| " + fmt("%.4f", a_err) +
                                                         ", test accuracy " + fmt("%.3f", acc) +
                                                         "; AsLM max |W - I| " + fmt("%.2e", w_err)};
}

// 8
Metrics oracle_metrics(const std::vector<int>& t, const std::vector<int>& p, int C) {
  std::vector<std::vector<std::size_t>> m(C, std::vector<std::size_t>(C, 0));
  for (std::size_t i = 0; i < t.size(); ++i) ++m[t[i]][p[i]];
  Metrics out;
  out.confusion = m;
  std::size_t diag = 0;
  for (int k = 0; k < C; ++k) diag += m[k][k];
  out.accuracy = static_cast<double>(diag) / static_cast<double>(t.size());
  unsigned long long num = 0, den = 1, classes = 0;
  for (int k = 0; k < C; ++k) {
    std::size_t row = 0, col = 0;
    for (int j = 0; j < C; ++j) {
      row += m[k][j];
      col += m[j][k];
    }
    const std::size_t tp = m[k][k];
    ClassMetrics c;
    c.support = row;
    c.precision = col ? static_cast<double>(tp) / col : 0.0;
    c.recall = row ? static_cast<double>(tp) / row : 0.0;
    c.f1 = tp ? static_cast<double>(2 * tp) / (row + col) : 0.0;
    out.per_class.push_back(c);
    if (!row) continue;
    ++classes;
    num = num * (row + col) + 2 * tp * den;
    den *= row + col;
    const auto r = std::gcd(num, den);
    num /= r;
    den /= r;
  }
  den *= classes;
  const auto r = std::gcd(num, den);
  out.macro_f1 = static_cast<double>(num / r) / static_cast<double>(den / r);
  return out;
}

Outcome metrics_oracle() {
  Rng rng(8);
  std::size_t mismatches = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int C = std::vector<int>{2, 4, 5}[rng.index(3)];
    std::vector<int> t(1 + rng.index(100)), p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<int>(rng.index(C));
      p[i] = rng.uniform() < 0.5 ? t[i] : static_cast<int>(rng.index(C));
    }
    const Metrics a = compute_metrics(t, p, C), b = oracle_metrics(t, p, C);
    bool same = a.accuracy == b.accuracy && a.macro_f1 == b.macro_f1 && a.confusion == b.confusion;
    for (int k = 0; k < C; ++k)
      same &= a.per_class[k].precision == b.per_class[k].precision && a.per_class[k].recall == b.per_class[k].recall &&
              a.per_class[k].f1 == b.per_class[k].f1 && a.per_class[k].support == b.per_class[k].support;
    mismatches += !same;
  }
  const Metrics hand = compute_metrics(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 1, 1, 1}, 2);
  const bool exact = hand.accuracy == 0.75 && hand.macro_f1 == 11.0 / 15.0;
  return {mismatches == 0 && exact, std::to_string(mismatches) + " mismatches in 1000 vectors; hand example " +
                                        (exact ? "exact" : "differs")};
}

// 9
Outcome round_trips() {
  std::size_t failures = 0;
  for (int C = 2; C <= 10; ++C)
    for (int k = 0; k < C; ++k) failures += discretize_opinion(label_to_continuous(k, C), C) != k;
  Rng rng(9);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t U = 1 + rng.index(20), n = 1 + rng.index(200);
    const int C = 2 + static_cast<int>(rng.index(4));
    std::vector<Post> posts;
    for (std::size_t i = 0; i < n; ++i)
      posts.push_back({rng.index(U), std::floor(rng.uniform(0, 50) * 4) / 4, static_cast<int>(rng.index(C))});
    const OpinionDataset d(posts, U, C, 50.0);
    SplitSpec s;
    s.train_frac = rng.uniform(0.1, 0.8);
    s.val_frac = rng.uniform(0.0, 1.0 - s.train_frac);
    s.test_frac = 1.0 - s.train_frac - s.val_frac;
    const auto sp = chronological_split(d, s);
    std::vector<Post> joined = sp.train.posts();
    joined.insert(joined.end(), sp.val.posts().begin(), sp.val.posts().end());
    joined.insert(joined.end(), sp.test.posts().begin(), sp.test.posts().end());
    failures += joined != d.posts();
    failures += sp.train.size() != static_cast<std::size_t>(std::floor(n * s.train_frac));
    for (std::size_t i = 1; i < joined.size(); ++i) failures += joined[i - 1].time > joined[i].time;
    if (rep % 100 == 0) failures += !(parse_dataset(format_dataset(d)) == d);
  }
  SbcmGenConfig g = sbcm_preset("clustering");
  g.num_users = 30;
  g.num_steps = 40;
  const auto d = generate_sbcm_dataset(g).dataset;
  const auto path = fs::temp_directory_path() / "sinn_acceptance_dataset.jsonl";
  save_dataset(d, path);
  failures += !(load_dataset(path) == d);
  fs::remove(path);
  return {failures == 0, std::to_string(failures) + " violations across labels, 1000 splits and save/load"};
}

// 10
Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "sinn_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  write_text_file(root / "config.json", R"({
  "model": {"variant": "sbcm", "L": 2, "width": 6, "embed_dim": 4},
  "train": {"epochs": 20, "batch": 64, "seed": 3},
  "sim": {"preset": "consensus", "num_users": 20, "num_steps": 30, "initiators_per_step": 5},
  "eval": {"seeds": [1, 2], "voter_repeats": 4}
})");
  struct Step {
    std::string name;
    std::function<int(CommandOptions&)> run;
    std::vector<std::string> files;
  };
  const std::vector<Step> steps{
      {"simulate", [](CommandOptions& o) { std::ostringstream s; return cmd_simulate(o, s); },
       {"dataset.jsonl", "summary.json"}},
      {"train", [](CommandOptions& o) { std::ostringstream s; return cmd_train(o, s); },
       {"metrics.json", "history.csv", "checkpoint.json"}},
      {"baseline", [](CommandOptions& o) { std::ostringstream s; return cmd_baseline(o, s); }, {"metrics.json"}},
      {"ablate", [](CommandOptions& o) { std::ostringstream s; return cmd_ablate(o, s); },
       {"metrics.json", "history_sinn_1.csv", "history_nn_2.csv"}},
      {"gridsearch",
       [](CommandOptions& o) {
         o.axes = {"variant=degroot/fj", "width=4/6"};
         o.jobs = 2;
         std::ostringstream s;
         return cmd_gridsearch(o, s);
       },
       {"metrics.json", "history.csv", "leaderboard.csv"}},
  };
  std::size_t compared = 0, differing = 0;
  std::string notes;
  for (const auto& step : steps) {
    std::string first[2][8];
    for (int rep = 0; rep < 2; ++rep) {
      CommandOptions o;
      o.config = root / "config.json";
      o.out = root / (step.name + std::to_string(rep));
      if (step.run(o) != 0) return {false, step.name + " exited nonzero"};
      for (std::size_t f = 0; f < step.files.size(); ++f) first[rep][f] = read_text_file(o.out / step.files[f]);
    }
    for (std::size_t f = 0; f < step.files.size(); ++f) {
      ++compared;
      if (first[0][f] != first[1][f]) {
        ++differing;
        notes += " " + step.name + "/" + step.files[f];
      }
    }
  }
  {
    CommandOptions o;
    o.config = root / "config.json";
    o.out = root / "train0";
    std::ostringstream s;
    cmd_evaluate(o, s);
    const auto a = read_text_file(o.out / "metrics.json");
    cmd_evaluate(o, s);
    ++compared;
    if (read_text_file(o.out / "metrics.json") != a) {
      ++differing;
      notes += " evaluate/metrics.json";
    }
  }
  fs::remove_all(root);
  return {differing == 0, std::to_string(compared) + " artifacts compared over 6 commands, " +
                              std::to_string(differing) + " differ" + notes};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", 120, gradient_correctness},
    {2, "time-derivative path", 30, time_derivative},
    {3, "Gumbel-Softmax fidelity", 10, gumbel_fidelity},
    {4, "synthetic regimes", 60, synthetic_regimes},
    {5, "SINN vs NN ablation", 1800, sinn_vs_nn},
    {6, "ODE-loss trainability", 600, ode_trainability},
    {7, "baseline self-consistency", 60, baseline_consistency},
    {8, "metrics oracle", 5, metrics_oracle},
    {9, "round-trip and split invariants", 10, round_trips},
    {10, "determinism", 300, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  bool all_pass = true;
  for (const auto& c : kCriteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool pass = o.pass && in_time;
    all_pass &= pass;
    std::printf("criterion %2d %s  %s: %s (%.1f s of %.0f s)\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.budget_seconds);
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
