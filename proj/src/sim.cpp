#include "sinn/sim.hpp"

#include <algorithm>
#include <cmath>

#include "sinn/errors.hpp"
#include "sinn/io.hpp"

namespace sinn {

std::string_view to_string(UpdateRule rule) { return rule == UpdateRule::Additive ? "additive" : "attractive"; }

UpdateRule parse_update_rule(std::string_view name) {
  if (name == "additive") return UpdateRule::Additive;
  if (name == "attractive") return UpdateRule::Attractive;
  throw InputError("unknown update rule \"" + std::string(name) + "\" (expected additive or attractive)");
}

void SbcmGenConfig::validate() const {
  if (num_users < 2) throw InputError("sim: num_users must be at least 2");
  if (num_steps < 1) throw InputError("sim: num_steps must be at least 1");
  if (initiators_per_step > num_users) throw InputError("sim: initiators_per_step exceeds num_users");
  if (!(mu > 0.0 && mu <= 1.0)) throw InputError("sim: mu must lie in (0, 1]");
  if (!std::isfinite(rho)) throw InputError("sim: rho must be finite");
  if (!(init_low <= init_high)) throw InputError("sim: init range is empty");
  if (!(eps > 0.0)) throw InputError("sim: eps must be positive");
}

namespace {

struct Preset {
  const char* name;
  double rho;
};
constexpr Preset kPresets[] = {
    {"consensus", -1.0},      {"polarization", 0.5},       {"clustering", 0.05},
    {"consensus-appx", -1.0}, {"polarization-appx", 1.0}, {"clustering-appx", 0.1},
};

}  // namespace

SbcmGenConfig sbcm_preset(std::string_view name) {
  for (const auto& p : kPresets) {
    if (name == p.name) {
      SbcmGenConfig c;
      c.rho = p.rho;
      return c;
    }
  }
  throw InputError("unknown preset \"" + std::string(name) + "\"");
}

std::vector<std::string> sbcm_preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

InteractionLog step_sbcm(SimState& state, const SbcmGenConfig& config) {
  auto& x = state.opinions;
  const std::size_t n = x.size();
  if (n < 2) throw UsageError("step_sbcm needs at least two users");
  if (config.initiators_per_step > n) throw UsageError("more initiators than users");
  InteractionLog log;
  log.reserve(config.initiators_per_step);
  const auto initiators = state.rng.sample_without_replacement(n, config.initiators_per_step);
  for (std::size_t u : initiators) {
    const auto probs = sbcm_partner_probs<double>(x, u, config.rho, config.eps);
    const std::size_t v = state.rng.categorical(probs);
    if (config.update_rule == UpdateRule::Additive)
      x[u] = x[u] + config.mu * x[v];
    else
      x[u] = x[u] + config.mu * (x[v] - x[u]);
    log.push_back({state.step, u, v});
  }
  ++state.step;
  return log;
}

void step_degroot(SimState& state, const Eigen::MatrixXd& A) {
  const auto n = static_cast<Eigen::Index>(state.opinions.size());
  if (A.rows() != n || A.cols() != n) throw UsageError("interaction matrix shape does not match users");
  Eigen::Map<const Eigen::VectorXd> x(state.opinions.data(), n);
  Eigen::VectorXd next = x + A * x - A.diagonal().cwiseProduct(x);
  std::copy(next.data(), next.data() + n, state.opinions.begin());
  ++state.step;
}

void step_fj(SimState& state, std::span<const double> susceptibility, std::span<const double> innate) {
  auto& x = state.opinions;
  if (susceptibility.size() != x.size() || innate.size() != x.size())
    throw UsageError("FJ parameter lengths do not match users");
  double total = 0.0;
  for (double v : x) total += v;
  std::vector<double> next(x.size());
  for (std::size_t u = 0; u < x.size(); ++u)
    next[u] = susceptibility[u] * (total - x[u]) + (1.0 - susceptibility[u]) * innate[u];
  x.swap(next);
  ++state.step;
}

void step_hk(SimState& state, double delta) {
  const auto& x = state.opinions;
  std::vector<double> next(x.size());
  for (std::size_t u = 0; u < x.size(); ++u) {
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t v = 0; v < x.size(); ++v) {
      if (std::abs(x[u] - x[v]) <= delta) {
        acc += x[v] - x[u];
        ++count;
      }
    }
    next[u] = x[u] + acc / static_cast<double>(count);
  }
  state.opinions.swap(next);
  ++state.step;
}

void step_voter(SimState& state) {
  const auto& x = state.opinions;
  std::vector<double> next(x.size());
  for (std::size_t u = 0; u < x.size(); ++u) next[u] = x[state.rng.index(x.size())];
  state.opinions.swap(next);
  ++state.step;
}

namespace {

OpinionDataset posts_from_trajectory(const Eigen::MatrixXd& traj) {
  std::vector<Post> posts;
  posts.reserve(static_cast<std::size_t>(traj.size()));
  for (Eigen::Index t = 0; t < traj.cols(); ++t)
    for (Eigen::Index u = 0; u < traj.rows(); ++u)
      posts.push_back({static_cast<std::size_t>(u), static_cast<double>(t), discretize_opinion(traj(u, t), 5)});
  return OpinionDataset(std::move(posts), static_cast<std::size_t>(traj.rows()), 5,
                        static_cast<double>(traj.cols() - 1));
}

}  // namespace

SimulationRun generate_sbcm_dataset(const SbcmGenConfig& config) {
  config.validate();
  SimState state{std::vector<double>(config.num_users), 0, Rng(config.seed)};
  for (double& x : state.opinions) x = state.rng.uniform(config.init_low, config.init_high);

  const auto n = static_cast<Eigen::Index>(config.num_users);
  Eigen::MatrixXd traj(n, static_cast<Eigen::Index>(config.num_steps));
  InteractionLog log;
  for (std::size_t t = 0; t < config.num_steps; ++t) {
    if (t > 0) {
      auto entries = step_sbcm(state, config);
      log.insert(log.end(), entries.begin(), entries.end());
    }
    for (Eigen::Index u = 0; u < n; ++u) traj(u, static_cast<Eigen::Index>(t)) = state.opinions[u];
  }
  return {posts_from_trajectory(traj), std::move(log), std::move(traj)};
}

void DegrootGenConfig::validate() const {
  if (num_users < 2) throw InputError("sim: num_users must be at least 2");
  if (num_steps < 1) throw InputError("sim: num_steps must be at least 1");
  if (!(spectral_radius >= 0.0)) throw InputError("sim: spectral_radius must be non-negative");
  if (!(init_low <= init_high)) throw InputError("sim: init range is empty");
}

Eigen::MatrixXd random_degroot_matrix(std::size_t num_users, double spectral_radius, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(num_users);
  Rng rng(mix_seed(seed, 0xA11CE));
  Eigen::MatrixXd B(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) B(i, j) = rng.normal();
  Eigen::MatrixXd A = B - B.transpose();
  if (spectral_radius == 0.0) return Eigen::MatrixXd::Zero(n, n);
  const double norm = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
  return A * (spectral_radius / norm);
}

DegrootRun generate_degroot_dataset(const DegrootGenConfig& config) {
  config.validate();
  Eigen::MatrixXd A = random_degroot_matrix(config.num_users, config.spectral_radius, config.seed);
  SimState state{std::vector<double>(config.num_users), 0, Rng(config.seed)};
  for (double& x : state.opinions) x = state.rng.uniform(config.init_low, config.init_high);
  const auto n = static_cast<Eigen::Index>(config.num_users);
  Eigen::MatrixXd traj(n, static_cast<Eigen::Index>(config.num_steps));
  for (std::size_t t = 0; t < config.num_steps; ++t) {
    if (t > 0) step_degroot(state, A);
    for (Eigen::Index u = 0; u < n; ++u) traj(u, static_cast<Eigen::Index>(t)) = state.opinions[u];
  }
  return {posts_from_trajectory(traj), std::move(A), std::move(traj)};
}

ClusterSummary histogram_clusters(std::span<const double> opinions, double bin_width) {
  const auto bins = static_cast<std::size_t>(std::llround(2.0 / bin_width));
  std::vector<std::size_t> hist(bins, 0);
  for (double x : opinions) {
    const double c = std::clamp(x, -1.0, 1.0);
    auto b = static_cast<std::size_t>((c + 1.0) / bin_width);
    hist[std::min(b, bins - 1)]++;
  }
  ClusterSummary out;
  std::size_t i = 0;
  double last_end = 0.0;
  while (i < bins) {
    if (hist[i] == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double mass = 0.0, moment = 0.0;
    while (j < bins && hist[j] > 0) {
      mass += static_cast<double>(hist[j]);
      moment += static_cast<double>(hist[j]) * (-1.0 + (j + 0.5) * bin_width);
      ++j;
    }
    const double start = -1.0 + i * bin_width;
    if (out.count > 0) out.max_gap = std::max(out.max_gap, start - last_end);
    last_end = -1.0 + j * bin_width;
    out.centers.push_back(moment / mass);
    ++out.count;
    i = j;
  }
  return out;
}

double population_std(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

std::string trajectory_csv(const Eigen::MatrixXd& trajectory) {
  std::vector<std::string> header{"step"};
  for (Eigen::Index u = 0; u < trajectory.rows(); ++u) header.push_back("u" + std::to_string(u));
  CsvWriter csv(header);
  for (Eigen::Index t = 0; t < trajectory.cols(); ++t) {
    std::vector<std::string> row{std::to_string(t)};
    for (Eigen::Index u = 0; u < trajectory.rows(); ++u) row.push_back(format_double(trajectory(u, t)));
    csv.row(row);
  }
  return csv.str();
}

std::string interactions_csv(const InteractionLog& log) {
  CsvWriter csv({"step", "initiator", "partner"});
  for (const auto& e : log)
    csv.row({std::to_string(e.step), std::to_string(e.initiator), std::to_string(e.partner)});
  return csv.str();
}

}  // namespace sinn
