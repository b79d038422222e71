#include "sinn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sinn/errors.hpp"
#include "sinn/io.hpp"
#include "sinn/rng.hpp"
#include "sinn/sim.hpp"

namespace sinn {

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int to_label(double x, int num_classes) { return discretize_opinion(x, num_classes); }

// Processes posts in time order, calling advance(duration) between distinct
// times and collecting state_of(post) into the output.
template <class State, class Advance>
std::vector<double> sweep(std::span<const Post> posts, double t_end, State state, Advance advance) {
  std::vector<std::size_t> order(posts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return posts[a].time < posts[b].time; });
  std::vector<double> out(posts.size());
  double now = t_end;
  for (std::size_t i : order) {
    const double t = std::max(posts[i].time, t_end);
    if (t > now) {
      advance(state, now, t);
      now = t;
    }
    out[i] = state(static_cast<Eigen::Index>(posts[i].user));
  }
  return out;
}

}  // namespace

double median_post_gap(const OpinionDataset& data) {
  std::vector<double> last(data.num_users(), -1.0), gaps;
  for (const auto& p : data.posts()) {
    if (last[p.user] >= 0 && p.time > last[p.user]) gaps.push_back(p.time - last[p.user]);
    last[p.user] = p.time;
  }
  if (!gaps.empty()) return median(gaps);
  for (std::size_t i = 1; i < data.size(); ++i) {
    const double g = data.posts()[i].time - data.posts()[i - 1].time;
    if (g > 0) gaps.push_back(g);
  }
  return gaps.empty() ? 1.0 : median(gaps);
}

OpinionSeries regularize_series(const OpinionDataset& data, double dt) {
  if (data.empty()) throw InputError("cannot build a series from an empty dataset");
  OpinionSeries s;
  s.dt = dt > 0 ? dt : median_post_gap(data);
  s.num_classes = data.num_classes();
  s.t0 = data.posts().front().time;
  const double span = data.posts().back().time - s.t0;
  const auto cols = static_cast<Eigen::Index>(std::floor(span / s.dt + 1e-9)) + 1;
  const auto U = static_cast<Eigen::Index>(data.num_users());
  s.values = Eigen::MatrixXd::Zero(U, cols);
  s.observed.assign(data.num_users(), false);
  std::vector<double> current(data.num_users(), 0.0);
  const auto& posts = data.posts();
  std::size_t next = 0;
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double g = s.t0 + s.dt * static_cast<double>(c);
    while (next < posts.size() && posts[next].time <= g + 1e-9 * s.dt) {
      const auto& p = posts[next++];
      const double x = label_to_continuous(p.label, data.num_classes());
      if (!s.observed[p.user]) {
        s.observed[p.user] = true;
        for (Eigen::Index k = 0; k < c; ++k) s.values(p.user, k) = x;  // back-fill
      }
      current[p.user] = x;
    }
    for (Eigen::Index u = 0; u < U; ++u) s.values(u, c) = current[u];
  }
  // Posts between the last grid point and the final post time still update the end state.
  for (; next < posts.size(); ++next) {
    const auto& p = posts[next];
    const double x = label_to_continuous(p.label, data.num_classes());
    if (!s.observed[p.user]) {
      s.observed[p.user] = true;
      s.values.row(p.user).setConstant(x);
    }
  }
  for (std::size_t u = 0; u < data.num_users(); ++u)
    if (!s.observed[u]) s.warnings.push_back("user " + std::to_string(u) + " has no posts and is held neutral");
  return s;
}

OpinionSeries series_from_trajectory(const Eigen::MatrixXd& trajectory, double dt, int num_classes, double t0) {
  if (trajectory.cols() < 1 || !(dt > 0.0)) throw UsageError("series_from_trajectory: empty trajectory or bad step");
  OpinionSeries s;
  s.values = trajectory;
  s.t0 = t0;
  s.dt = dt;
  s.num_classes = num_classes;
  s.observed.assign(static_cast<std::size_t>(trajectory.rows()), true);
  return s;
}

std::size_t steps_after(const OpinionSeries& s, double t) {
  const double k = std::round((t - s.t_end()) / s.dt);
  return k > 0 ? static_cast<std::size_t>(k) : 0;
}

VoterPrediction voter_predict(const OpinionSeries& train, std::span<const Post> test, std::size_t repeats,
                              std::uint64_t seed) {
  if (train.values.size() == 0) throw InputError("voter: empty training series");
  if (repeats < 1) throw UsageError("voter: repeats must be at least 1");
  const std::size_t U = static_cast<std::size_t>(train.values.rows());
  std::vector<std::size_t> steps(test.size());
  std::size_t horizon = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    steps[i] = steps_after(train, test[i].time);
    horizon = std::max(horizon, steps[i]);
  }
  std::vector<std::vector<std::size_t>> by_step(horizon + 1);
  for (std::size_t i = 0; i < test.size(); ++i) by_step[steps[i]].push_back(i);

  VoterPrediction out;
  for (std::size_t r = 0; r < repeats; ++r) {
    SimState state{std::vector<double>(U), 0, Rng(mix_seed(seed, r))};
    for (std::size_t u = 0; u < U; ++u) state.opinions[u] = train.values(u, train.values.cols() - 1);
    std::vector<int> labels(test.size());
    for (std::size_t k = 0; k <= horizon; ++k) {
      if (k > 0) step_voter(state);
      for (std::size_t i : by_step[k]) labels[i] = to_label(state.opinions[test[i].user], train.num_classes);
    }
    out.runs.push_back(std::move(labels));
  }
  out.majority.resize(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    std::map<int, std::size_t> votes;
    for (const auto& run : out.runs) votes[run[i]]++;
    int best = votes.begin()->first;
    for (const auto& [label, n] : votes)
      if (n > votes[best]) best = label;
    out.majority[i] = best;
  }
  return out;
}

DegrootFit fit_degroot(const OpinionSeries& series) {
  const Eigen::Index U = series.values.rows(), S = series.values.cols();
  if (S < 2) throw InputError("degroot fit needs a grid with at least two steps");
  const Eigen::MatrixXd X = series.values.leftCols(S - 1);
  const Eigen::MatrixXd Y = (series.values.rightCols(S - 1) - X) / series.dt;
  DegrootFit fit;
  fit.A = Eigen::MatrixXd::Zero(U, U);
  fit.x_end = series.values.col(S - 1);
  fit.t_end = series.t_end();
  fit.grid_dt = series.dt;
  fit.num_classes = series.num_classes;
  if (U < 2) return fit;
  for (Eigen::Index u = 0; u < U; ++u) {
    // Regressors: every row of X except u.
    Eigen::MatrixXd Xo(U - 1, S - 1);
    for (Eigen::Index v = 0, r = 0; v < U; ++v)
      if (v != u) Xo.row(r++) = X.row(v);
    Eigen::MatrixXd G = Xo * Xo.transpose();
    const Eigen::VectorXd rhs = Xo * Y.row(u).transpose();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12)) {
      G.diagonal().array() += 1e-6;
      ldlt.compute(G);
    }
    const Eigen::VectorXd a = ldlt.solve(rhs);
    for (Eigen::Index v = 0, r = 0; v < U; ++v)
      if (v != u) fit.A(u, v) = a(r++);
  }
  return fit;
}

DegrootFit fit_degroot(const OpinionDataset& train, double dt) { return fit_degroot(regularize_series(train, dt)); }

Eigen::VectorXd integrate_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double duration, double dt) {
  if (!(duration > 0)) return x;
  const double h_max = dt / 4.0;
  const auto n = static_cast<long>(std::ceil(duration / h_max - 1e-9));
  const double h = duration / static_cast<double>(n);
  Eigen::VectorXd y = x;
  for (long i = 0; i < n; ++i) {
    const Eigen::VectorXd k1 = A * y;
    const Eigen::VectorXd k2 = A * (y + 0.5 * h * k1);
    const Eigen::VectorXd k3 = A * (y + 0.5 * h * k2);
    const Eigen::VectorXd k4 = A * (y + h * k3);
    y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

std::vector<double> degroot_states(const DegrootFit& fit, std::span<const Post> posts) {
  return sweep(posts, fit.t_end, fit.x_end, [&](Eigen::VectorXd& x, double from, double to) {
    x = integrate_linear(fit.A, x, to - from, fit.grid_dt);
  });
}

std::vector<int> degroot_predict(const DegrootFit& fit, std::span<const Post> posts) {
  const auto states = degroot_states(fit, posts);
  std::vector<int> out;
  out.reserve(states.size());
  for (double x : states) out.push_back(to_label(x, fit.num_classes));
  return out;
}

AslmFit fit_aslm(const OpinionSeries& series, double ridge) {
  const Eigen::Index U = series.values.rows(), S = series.values.cols();
  if (S < 2) throw InputError("aslm fit needs a grid with at least two steps");
  if (!(ridge >= 0)) throw UsageError("aslm ridge must be non-negative");
  Eigen::MatrixXd Z(U + 1, S - 1);
  Z.topRows(U) = series.values.leftCols(S - 1);
  Z.row(U).setOnes();
  const Eigen::MatrixXd Y = series.values.rightCols(S - 1);
  Eigen::MatrixXd prior = Eigen::MatrixXd::Zero(U, U + 1);
  prior.leftCols(U).setIdentity();
  Eigen::MatrixXd G = Z * Z.transpose();
  G.diagonal().array() += ridge;
  const Eigen::MatrixXd R = Y * Z.transpose() + ridge * prior;
  // Theta G = R  <=>  G Theta^T = R^T (G is symmetric).
  const Eigen::MatrixXd theta = G.ldlt().solve(R.transpose()).transpose();
  AslmFit fit;
  fit.W = theta.leftCols(U);
  fit.bias = theta.col(U);
  fit.ridge = ridge;
  fit.x_end = series.values.col(S - 1);
  fit.t_end = series.t_end();
  fit.grid_dt = series.dt;
  fit.num_classes = series.num_classes;
  return fit;
}

AslmFit fit_aslm(const OpinionDataset& train, double dt, double ridge) {
  return fit_aslm(regularize_series(train, dt), ridge);
}

Eigen::VectorXd aslm_iterate(const AslmFit& fit, Eigen::VectorXd x, std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) x = fit.W * x + fit.bias;
  return x;
}

std::vector<int> aslm_predict(const AslmFit& fit, std::span<const Post> posts) {
  const auto states = sweep(posts, fit.t_end, fit.x_end, [&](Eigen::VectorXd& x, double from, double to) {
    // Whole grid steps between the two times, measured from the train end.
    const auto k_from = static_cast<long>(std::round((from - fit.t_end) / fit.grid_dt));
    const auto k_to = static_cast<long>(std::round((to - fit.t_end) / fit.grid_dt));
    if (k_to > k_from) x = aslm_iterate(fit, x, static_cast<std::size_t>(k_to - k_from));
  });
  std::vector<int> out;
  out.reserve(states.size());
  for (double x : states) out.push_back(to_label(x, fit.num_classes));
  return out;
}

std::string predictions_csv(std::span<const Post> posts, std::span<const int> pred, const std::string& method) {
  if (posts.size() != pred.size()) throw UsageError("predictions_csv: length mismatch");
  CsvWriter csv({"user", "time", "true_label", "pred_label", "method"});
  for (std::size_t i = 0; i < posts.size(); ++i)
    csv.row({std::to_string(posts[i].user), format_double(posts[i].time), std::to_string(posts[i].label),
             std::to_string(pred[i]), method});
  return csv.str();
}

}  // namespace sinn
