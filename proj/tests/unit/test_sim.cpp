#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "sinn/errors.hpp"
#include "sinn/sim.hpp"

using namespace sinn;

TEST_CASE("partner probabilities by hand") {
  std::vector<double> x{0.0, 0.5, 1.0};
  auto p = sbcm_partner_probs<double>(x, 0, 1.0);
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(2.0 / 3.0));
  CHECK(p[2] == doctest::Approx(1.0 / 3.0));
  p = sbcm_partner_probs<double>(x, 0, -1.0);
  CHECK(p[1] == doctest::Approx(1.0 / 3.0));
  CHECK(p[2] == doctest::Approx(2.0 / 3.0));
  std::vector<double> four{0.3, -0.9, 0.1, 0.8};
  p = sbcm_partner_probs<double>(four, 2, 0.0);
  for (std::size_t v : {0, 1, 3}) CHECK(p[v] == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(sbcm_partner_probs<double>(std::vector<double>{0.1}, 0, 1.0), UsageError);
}

TEST_CASE("partner probabilities form a distribution") {
  Rng rng(4);
  for (int rep = 0; rep < 300; ++rep) {
    std::vector<double> x(2 + rng.index(10));
    for (double& v : x) v = rng.uniform(-1, 1);
    if (rep % 5 == 0) x[1] = x[0];  // coincident opinions hit the floor
    const double rho = rng.uniform(-5, 5);
    const std::size_t u = rng.index(x.size());
    auto p = sbcm_partner_probs<double>(x, u, rho);
    double total = 0.0;
    for (double q : p) {
      CHECK(q >= 0.0);
      total += q;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    CHECK(p[u] == 0.0);
  }
}

TEST_CASE("sampled partners follow the distribution") {
  std::vector<double> x{0.0, 0.2, -0.5, 0.9};
  auto p = sbcm_partner_probs<double>(x, 0, 1.0);
  Rng rng(17);
  std::vector<double> freq(4, 0.0);
  const int draws = 50000;
  for (int i = 0; i < draws; ++i) freq[rng.categorical(p)] += 1.0 / draws;
  for (std::size_t v = 0; v < 4; ++v) CHECK(std::abs(freq[v] - p[v]) < 0.01);
}

TEST_CASE("update rules") {
  SbcmGenConfig cfg;
  cfg.num_users = 2;
  cfg.initiators_per_step = 1;
  cfg.seed = 1;
  // With two users the partner is forced, so the updates are exact.
  cfg.update_rule = UpdateRule::Additive;
  SimState s{{0.5, 1.0}, 0, Rng(3)};
  auto log = step_sbcm(s, cfg);
  REQUIRE(log.size() == 1);
  const std::size_t u = log[0].initiator;
  CHECK(log[0].partner == 1 - u);
  CHECK(s.opinions[u] == doctest::Approx(u == 0 ? 0.6 : 1.05));
  CHECK(s.step == 1);

  cfg.update_rule = UpdateRule::Attractive;
  cfg.mu = 1.0;
  s = {{0.0, 0.8}, 0, Rng(5)};
  log = step_sbcm(s, cfg);
  CHECK(s.opinions[0] == doctest::Approx(0.8));
  CHECK(s.opinions[1] == doctest::Approx(0.8));

  cfg.mu = 0.3;
  s = {{0.4, 0.4, 0.4}, 0, Rng(5)};
  cfg.num_users = 3;
  step_sbcm(s, cfg);
  CHECK(s.opinions == std::vector<double>{0.4, 0.4, 0.4});
}

TEST_CASE("attractive updates stay in the convex hull") {
  SbcmGenConfig cfg;
  cfg.num_users = 30;
  cfg.initiators_per_step = 10;
  cfg.mu = 0.7;
  cfg.rho = 0.5;
  Rng init(2);
  SimState s{std::vector<double>(30), 0, Rng(9)};
  for (double& x : s.opinions) x = init.uniform(-0.3, 0.9);
  const double lo = *std::min_element(s.opinions.begin(), s.opinions.end());
  const double hi = *std::max_element(s.opinions.begin(), s.opinions.end());
  for (int t = 0; t < 100; ++t) {
    auto log = step_sbcm(s, cfg);
    for (const auto& e : log) CHECK(e.initiator != e.partner);
    for (double x : s.opinions) {
      REQUIRE(x >= lo - 1e-15);
      REQUIRE(x <= hi + 1e-15);
    }
  }
}

TEST_CASE("classical simulators") {
  SimState s{{0.1, -0.4, 0.7}, 0, Rng(1)};
  step_degroot(s, Eigen::MatrixXd::Zero(3, 3));
  CHECK(s.opinions == std::vector<double>{0.1, -0.4, 0.7});
  Eigen::MatrixXd A(2, 2);
  A << 5.0, 0.5, -0.25, 9.0;
  s = {{0.2, 0.4}, 0, Rng(1)};
  step_degroot(s, A);
  CHECK(s.opinions[0] == doctest::Approx(0.4));
  CHECK(s.opinions[1] == doctest::Approx(0.35));

  std::vector<double> x0{0.3, -0.6, 0.9}, stubborn(3, 0.0);
  s = {{0.0, 0.5, -1.0}, 0, Rng(1)};
  for (int t = 0; t < 5; ++t) {
    step_fj(s, stubborn, x0);
    CHECK(s.opinions == x0);
  }
  std::vector<double> open(3, 1.0);
  s = {{0.2, 0.6, 0.1}, 0, Rng(1)};
  step_fj(s, open, x0);
  CHECK(s.opinions[0] == doctest::Approx(0.7));

  s = {{0.25, 0.25, 0.25}, 0, Rng(1)};
  step_hk(s, 0.1);
  CHECK(s.opinions == std::vector<double>{0.25, 0.25, 0.25});
  s = {{0.0, 0.1, 0.9}, 0, Rng(1)};
  step_hk(s, 0.2);
  CHECK(s.opinions[0] == doctest::Approx(0.05));
  CHECK(s.opinions[1] == doctest::Approx(0.05));
  CHECK(s.opinions[2] == doctest::Approx(0.9));

  s = {{0.5}, 0, Rng(1)};
  step_voter(s);
  CHECK(s.opinions[0] == 0.5);
  s = {{0.1, 0.2, 0.3, 0.4}, 0, Rng(6)};
  for (int t = 0; t < 10; ++t) step_voter(s);
  for (double x : s.opinions) CHECK((x == 0.1 || x == 0.2 || x == 0.3 || x == 0.4));
}

TEST_CASE("dataset generation") {
  SbcmGenConfig cfg;
  cfg.num_users = 2;
  cfg.num_steps = 1;
  cfg.initiators_per_step = 1;
  cfg.seed = 3;
  auto run = generate_sbcm_dataset(cfg);
  REQUIRE(run.dataset.size() == 2);
  for (const auto& p : run.dataset.posts()) {
    CHECK(p.time == 0.0);
    CHECK(p.label == discretize_opinion(run.trajectory(p.user, 0)));
  }

  cfg = SbcmGenConfig{};
  cfg.seed = 12;
  auto a = generate_sbcm_dataset(cfg);
  CHECK(a.dataset.size() == 40000);
  CHECK(a.trajectory.rows() == 200);
  CHECK(a.trajectory.cols() == 200);
  CHECK(a.interactions.size() == 199u * 15u);
  auto b = generate_sbcm_dataset(cfg);
  CHECK(a.dataset == b.dataset);
  CHECK(a.trajectory == b.trajectory);
}

TEST_CASE("presets") {
  CHECK(sbcm_preset("consensus").rho == -1.0);
  CHECK(sbcm_preset("polarization").rho == 0.5);
  CHECK(sbcm_preset("clustering").rho == 0.05);
  CHECK(sbcm_preset("consensus-appx").rho == -1.0);
  CHECK(sbcm_preset("polarization-appx").rho == 1.0);
  CHECK(sbcm_preset("clustering-appx").rho == 0.1);
  CHECK_THROWS_AS(sbcm_preset("anarchy"), InputError);
}

TEST_CASE("consensus regime shrinks spread") {
  auto cfg = sbcm_preset("consensus");
  for (std::uint64_t seed : {0, 1, 2}) {
    cfg.seed = seed;
    auto run = generate_sbcm_dataset(cfg);
    Eigen::VectorXd first = run.trajectory.col(0), last = run.trajectory.col(run.trajectory.cols() - 1);
    CHECK(population_std(std::span<const double>(last.data(), last.size())) <
          0.2 * population_std(std::span<const double>(first.data(), first.size())));
  }
}

TEST_CASE("histogram clusters") {
  std::vector<double> two{-0.85, -0.83, -0.75, 0.71, 0.75};
  auto c = histogram_clusters(two);
  CHECK(c.count == 2);
  CHECK(c.max_gap == doctest::Approx(1.4));
  std::vector<double> one{0.01, 0.02, 0.15};
  CHECK(histogram_clusters(one).count == 1);
  CHECK(histogram_clusters(one).max_gap == 0.0);
}

TEST_CASE("degroot generator") {
  DegrootGenConfig cfg;
  cfg.num_users = 6;
  cfg.num_steps = 12;
  auto run = generate_degroot_dataset(cfg);
  CHECK(run.dataset.size() == 72);
  for (int i = 0; i < 6; ++i) CHECK(run.interaction(i, i) == 0.0);
  CHECK((run.interaction + run.interaction.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(run.interaction);
  CHECK(svd.singularValues()(0) == doctest::Approx(0.05));
  Eigen::VectorXd x = run.trajectory.col(0);
  Eigen::VectorXd next = x + run.interaction * x;
  CHECK((next - run.trajectory.col(1)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("csv exports") {
  Eigen::MatrixXd traj(2, 2);
  traj << 0.5, 0.25, -1.0, 0.0;
  CHECK(trajectory_csv(traj) == "step,u0,u1\n0,0.5,-1\n1,0.25,0\n");
  CHECK(interactions_csv({{0, 1, 2}, {1, 3, 0}}) == "step,initiator,partner\n0,1,2\n1,3,0\n");
}
