#pragma once

// Comparison methods on a regular time grid: Voter copying, a fitted linear
// (DeGroot) ODE and an autoregressive linear map.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sinn/data.hpp"

namespace sinn {

/// Continuous opinions on the grid t0, t0 + dt, ..., one row per user.
struct OpinionSeries {
  Eigen::MatrixXd values;  // U x S
  double t0 = 0.0;
  double dt = 1.0;
  int num_classes = 5;
  std::vector<bool> observed;  // users with at least one post
  std::vector<std::string> warnings;

  std::size_t steps() const { return static_cast<std::size_t>(values.cols()); }
  double t_end() const { return t0 + dt * static_cast<double>(values.cols() - 1); }
};

/// Median gap between consecutive posts of the same user (positive gaps
/// only); falls back to the median gap between distinct post times, then 1.
double median_post_gap(const OpinionDataset& data);

/// Labels mapped to bin midpoints and carried forward onto the grid;
/// before a user's first post the first value is used. Users without posts
/// are flagged, held at 0 and reported in `warnings`. dt <= 0 selects
/// median_post_gap.
OpinionSeries regularize_series(const OpinionDataset& data, double dt = 0.0);

/// Wraps a noiseless users x steps trajectory sampled every dt from t0.
OpinionSeries series_from_trajectory(const Eigen::MatrixXd& trajectory, double dt = 1.0, int num_classes = 5,
                                     double t0 = 0.0);

/// Number of grid steps from the series end to time t (never negative).
std::size_t steps_after(const OpinionSeries& s, double t);

struct VoterPrediction {
  std::vector<std::vector<int>> runs;  // one label vector per repeat
  std::vector<int> majority;           // per-post mode over runs, ties to the lower label
};

/// Simulates the copy rule forward from the train-end state for each repeat.
VoterPrediction voter_predict(const OpinionSeries& train, std::span<const Post> test, std::size_t repeats = 10,
                              std::uint64_t seed = 0);

struct DegrootFit {
  Eigen::MatrixXd A;      // zero diagonal
  Eigen::VectorXd x_end;  // state at the end of training
  double t_end = 0.0;
  double grid_dt = 1.0;
  int num_classes = 5;
};

/// Row-wise least squares of (x(t+dt) - x(t)) / dt on x(t) with the
/// diagonal held at zero. Near-singular systems get a 1e-6 ridge.
DegrootFit fit_degroot(const OpinionSeries& series);
DegrootFit fit_degroot(const OpinionDataset& train, double dt = 0.0);

/// dx/dt = A x by fourth-order Runge-Kutta with step dt / 4.
Eigen::VectorXd integrate_linear(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, double duration, double dt);

std::vector<double> degroot_states(const DegrootFit& fit, std::span<const Post> posts);
std::vector<int> degroot_predict(const DegrootFit& fit, std::span<const Post> posts);

struct AslmFit {
  Eigen::MatrixXd W;
  Eigen::VectorXd bias;
  double ridge = 1e-6;
  Eigen::VectorXd x_end;
  double t_end = 0.0;
  double grid_dt = 1.0;
  int num_classes = 5;
};

/// Ridge regression x(t+1) ~ W x(t) + b, shrunk toward W = I, b = 0:
///   min |Y - W X - b|^2 + ridge (|W - I|^2 + |b|^2).
AslmFit fit_aslm(const OpinionSeries& series, double ridge = 1e-6);
AslmFit fit_aslm(const OpinionDataset& train, double dt = 0.0, double ridge = 1e-6);

/// Map iterated `steps` times from x.
Eigen::VectorXd aslm_iterate(const AslmFit& fit, Eigen::VectorXd x, std::size_t steps);
std::vector<int> aslm_predict(const AslmFit& fit, std::span<const Post> posts);

std::string predictions_csv(std::span<const Post> posts, std::span<const int> pred, const std::string& method);

}  // namespace sinn
