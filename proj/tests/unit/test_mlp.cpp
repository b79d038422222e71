#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "sinn/errors.hpp"
#include "sinn/mlp.hpp"
#include "sinn/rng.hpp"

using namespace sinn;
using ad::Var;

namespace {

struct Case {
  FnnParams params;
  double t;
  std::vector<double> onehot;
  std::vector<double> profile;
};

Case random_case(Rng& rng, std::size_t layers = 3, std::size_t width = 8) {
  const std::size_t users = 1 + rng.index(6), dim = rng.index(4);
  Case c{init_params(layers, width, 1 + users + dim, rng.next(), 10.0), rng.uniform(0.0, 10.0),
         std::vector<double>(users, 0.0), std::vector<double>(dim)};
  // Larger biases make the test less forgiving than a zero-bias init.
  for (auto& layer : c.params.layers)
    for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  c.onehot[rng.index(users)] = 1.0;
  for (double& x : c.profile) x = rng.uniform(-1, 1);
  return c;
}

bool close(double analytic, double numeric) {
  if (std::abs(analytic) < 1e-6) return std::abs(analytic - numeric) < 1e-8;
  return std::abs(analytic - numeric) / std::abs(analytic) < 1e-4;
}

}  // namespace

TEST_CASE("zero network outputs zero") {
  auto p = init_params(3, 8, 5, 1);
  p.for_each_tensor([](const std::string&, std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); });
  std::vector<double> onehot{0, 1, 0, 0}, profile;
  CHECK(forward<double>(p, 3.0, onehot, profile) == 0.0);
  auto vs = value_and_time_derivative<double>(p, 3.0, onehot, profile);
  CHECK(vs.value == 0.0);
  CHECK(vs.slope == 0.0);
}

TEST_CASE("init shapes and determinism") {
  auto a = init_params(3, 8, 13, 42), b = init_params(3, 8, 13, 42), c = init_params(3, 8, 13, 43);
  REQUIRE(a.layers.size() == 4);
  CHECK(a.hidden_layers() == 3);
  CHECK(a.width() == 8);
  CHECK(a.layers[0].in == 13);
  CHECK(a.layers[0].out == 8);
  CHECK(a.layers[1].in == 8);
  CHECK(a.layers[3].out == 1);
  CHECK(a.layers[0].weight == b.layers[0].weight);
  CHECK(a.layers[0].weight != c.layers[0].weight);
  const double limit = std::sqrt(6.0 / (13 + 8));
  for (double w : a.layers[0].weight) CHECK(std::abs(w) <= limit);
  for (double w : a.layers[0].bias) CHECK(w == 0.0);
}

TEST_CASE("single tanh unit slope") {
  FnnParams p;
  p.layers.push_back({1, 1, {1.0}, {0.0}});
  std::vector<double> none;
  auto vs = value_and_time_derivative<double>(p, 0.0, none, none);
  CHECK(vs.value == 0.0);
  CHECK(vs.slope == doctest::Approx(1.0));
}

TEST_CASE("output bounded under large weights") {
  Rng rng(8);
  for (int rep = 0; rep < 50; ++rep) {
    auto c = random_case(rng);
    for (auto& layer : c.params.layers)
      for (double& w : layer.weight) w *= 50;
    const double y = forward<double>(c.params, c.t, c.onehot, c.profile);
    CHECK(y >= -1.0);
    CHECK(y <= 1.0);
  }
}

TEST_CASE("input validation") {
  auto p = init_params(1, 4, 3, 0);
  std::vector<double> onehot{1.0}, profile{0.0}, wrong{1.0, 0.0};
  CHECK_THROWS_AS(forward<double>(p, 0.0, wrong, profile), UsageError);
  CHECK_THROWS_AS(forward<double>(p, NAN, onehot, profile), InputError);
  profile[0] = INFINITY;
  CHECK_THROWS_AS(forward<double>(p, 0.0, onehot, profile), InputError);
}

TEST_CASE("parameter gradients match finite differences") {
  Rng rng(21);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = random_case(rng);
    ad::Tape tape;
    auto lifted = c.params.transform<Var>(
        [&](const std::string&, const std::vector<double>& v) { return ad::variables(tape, v); });
    std::vector<Var> oh(c.onehot.begin(), c.onehot.end()), pr(c.profile.begin(), c.profile.end());
    Var y = forward<Var>(lifted, Var(c.t), oh, pr);
    CHECK(y.value() == forward<double>(c.params, c.t, c.onehot, c.profile));
    auto adj = tape.backward(y.index());
    for (std::size_t l = 0; l < c.params.layers.size(); ++l) {
      auto& layer = c.params.layers[l];
      for (std::size_t i = 0; i < layer.weight.size(); ++i) {
        const double w0 = layer.weight[i];
        layer.weight[i] = w0 + 1e-5;
        const double fp = forward<double>(c.params, c.t, c.onehot, c.profile);
        layer.weight[i] = w0 - 1e-5;
        const double fm = forward<double>(c.params, c.t, c.onehot, c.profile);
        layer.weight[i] = w0;
        CHECK(close(ad::gradient(adj, lifted.layers[l].weight[i]), (fp - fm) / 2e-5));
      }
    }
  }
}

TEST_CASE("time derivative matches finite differences") {
  Rng rng(22);
  for (int rep = 0; rep < 100; ++rep) {
    auto c = random_case(rng);
    auto vs = value_and_time_derivative<double>(c.params, c.t, c.onehot, c.profile);
    const double fd = (forward<double>(c.params, c.t + 1e-5, c.onehot, c.profile) -
                       forward<double>(c.params, c.t - 1e-5, c.onehot, c.profile)) /
                      2e-5;
    CHECK(close(vs.slope, fd));
    CHECK(vs.value == doctest::Approx(forward<double>(c.params, c.t, c.onehot, c.profile)).epsilon(1e-14));
  }
}

TEST_CASE("slope is differentiable with respect to weights") {
  Rng rng(23);
  auto c = random_case(rng, 2, 5);
  ad::Tape tape;
  auto lifted = c.params.transform<Var>(
      [&](const std::string&, const std::vector<double>& v) { return ad::variables(tape, v); });
  std::vector<Var> oh(c.onehot.begin(), c.onehot.end()), pr(c.profile.begin(), c.profile.end());
  Var slope = value_and_time_derivative<Var>(lifted, Var(c.t), oh, pr).slope;
  auto adj = tape.backward(slope.index());
  auto& w = c.params.layers[0].weight;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double w0 = w[i];
    w[i] = w0 + 1e-5;
    const double fp = value_and_time_derivative<double>(c.params, c.t, c.onehot, c.profile).slope;
    w[i] = w0 - 1e-5;
    const double fm = value_and_time_derivative<double>(c.params, c.t, c.onehot, c.profile).slope;
    w[i] = w0;
    CHECK(close(ad::gradient(adj, lifted.layers[0].weight[i]), (fp - fm) / 2e-5));
  }
}

TEST_CASE("checkpoint round trip") {
  auto p = init_params(3, 8, 7, 99, 4.5);
  auto q = fnn_from_json(nlohmann::json::parse(fnn_to_json(p).dump()));
  CHECK(q.time_scale == 4.5);
  REQUIRE(q.layers.size() == p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    CHECK(q.layers[l].weight == p.layers[l].weight);
    CHECK(q.layers[l].bias == p.layers[l].bias);
  }
}
