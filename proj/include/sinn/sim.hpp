#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sinn/autodiff.hpp"
#include "sinn/data.hpp"
#include "sinn/errors.hpp"
#include "sinn/rng.hpp"

namespace sinn {

enum class UpdateRule {
  Additive,    // x_u + mu x_v, as printed for the synthetic generator
  Attractive,  // x_u + mu (x_v - x_u)
};

std::string_view to_string(UpdateRule rule);
UpdateRule parse_update_rule(std::string_view name);

struct SbcmGenConfig {
  std::size_t num_users = 200;
  std::size_t num_steps = 200;
  std::size_t initiators_per_step = 15;
  double mu = 0.1;
  double rho = -1.0;
  UpdateRule update_rule = UpdateRule::Attractive;
  double init_low = -1.0;
  double init_high = 1.0;
  double eps = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Named exponent presets: consensus (-1.0), polarization (0.5),
/// clustering (0.05), plus the alternative values consensus-appx (-1.0),
/// polarization-appx (1.0) and clustering-appx (0.1).
SbcmGenConfig sbcm_preset(std::string_view name);
std::vector<std::string> sbcm_preset_names();

struct SimState {
  std::vector<double> opinions;
  std::size_t step = 0;
  Rng rng;
};

struct Interaction {
  std::size_t step = 0;
  std::size_t initiator = 0;
  std::size_t partner = 0;
};
using InteractionLog = std::vector<Interaction>;

/// Partner-selection distribution for initiator u:
///   p_v = max(|x_u - x_v|, eps)^-rho / sum_{v' != u} max(|x_u - x_v'|, eps)^-rho
/// with p_u = 0. Written once over the scalar type so the simulator and the
/// differentiable ODE residual share it.
template <class S>
std::vector<S> sbcm_partner_probs(std::span<const S> x, std::size_t u, const S& rho, double eps = 1e-6) {
  const std::size_t n = x.size();
  if (n < 2) throw UsageError("partner selection needs at least two users");
  if (u >= n) throw UsageError("initiator index out of range");
  if (!(eps > 0.0)) throw UsageError("distance floor must be positive");
  std::vector<S> w(n, S(0.0));
  for (std::size_t v = 0; v < n; ++v) {
    if (v == u) continue;
    const S dist = ad::max(ad::abs(x[u] - x[v]), eps);
    w[v] = ad::exp(-rho * ad::log(dist));
  }
  const S total = ad::sum(std::span<const S>(w));
  for (std::size_t v = 0; v < n; ++v)
    if (v != u) w[v] = w[v] / total;
  return w;
}

/// One step: initiators_per_step users (without replacement) each draw a
/// partner from sbcm_partner_probs and update in sampled order.
InteractionLog step_sbcm(SimState& state, const SbcmGenConfig& config);

/// x_u <- x_u + sum_{v != u} a_uv x_v (diagonal of A ignored).
void step_degroot(SimState& state, const Eigen::MatrixXd& A);
/// x_u <- s_u sum_{v != u} x_v + (1 - s_u) x0_u.
void step_fj(SimState& state, std::span<const double> susceptibility, std::span<const double> innate);
/// Hegselmann-Krause: average over N_u = {v : |x_u - x_v| <= delta}, u included.
void step_hk(SimState& state, double delta);
/// Every user copies the opinion of a uniformly drawn user (possibly itself).
void step_voter(SimState& state);

struct SimulationRun {
  OpinionDataset dataset;
  InteractionLog interactions;
  Eigen::MatrixXd trajectory;  // users x steps
};

/// Runs num_steps snapshots (the first is the initial state) and emits one
/// post per user per snapshot, labeled by discretize_opinion.
SimulationRun generate_sbcm_dataset(const SbcmGenConfig& config);

struct DegrootGenConfig {
  std::size_t num_users = 20;
  std::size_t num_steps = 100;
  double spectral_radius = 0.05;
  double init_low = -0.6;
  double init_high = 0.6;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Random antisymmetric interaction matrix (zero diagonal) with the given
/// spectral norm. Trajectories rotate slowly instead of collapsing, which
/// keeps the series well conditioned for regression.
Eigen::MatrixXd random_degroot_matrix(std::size_t num_users, double spectral_radius, std::uint64_t seed);

struct DegrootRun {
  OpinionDataset dataset;
  Eigen::MatrixXd interaction;  // the generating A
  Eigen::MatrixXd trajectory;   // users x steps
};

DegrootRun generate_degroot_dataset(const DegrootGenConfig& config);

/// Occupied-bin clusters of a 0.1-wide histogram on [-1, 1].
struct ClusterSummary {
  std::size_t count = 0;
  double max_gap = 0.0;  // widest empty span between consecutive clusters
  std::vector<double> centers;
};
ClusterSummary histogram_clusters(std::span<const double> opinions, double bin_width = 0.1);

double population_std(std::span<const double> x);

std::string trajectory_csv(const Eigen::MatrixXd& trajectory);
std::string interactions_csv(const InteractionLog& log);

}  // namespace sinn
