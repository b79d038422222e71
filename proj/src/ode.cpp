#include "sinn/ode.hpp"

#include <algorithm>
#include <cctype>

namespace sinn {

std::string_view to_string(OdeVariant v) {
  switch (v) {
    case OdeVariant::DeGroot:
      return "degroot";
    case OdeVariant::FJ:
      return "fj";
    case OdeVariant::BCM:
      return "bcm";
    case OdeVariant::SBCM:
      return "sbcm";
  }
  return "?";
}

OdeVariant parse_ode_variant(std::string_view name) {
  std::string lower(name);
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (auto v : all_ode_variants())
    if (lower == to_string(v)) return v;
  throw InputError("unknown ODE variant \"" + std::string(name) + "\" (expected degroot, fj, bcm or sbcm)");
}

std::vector<OdeVariant> all_ode_variants() {
  return {OdeVariant::DeGroot, OdeVariant::FJ, OdeVariant::BCM, OdeVariant::SBCM};
}

std::vector<double> sample_gumbel_noise(std::size_t n, Rng& rng) {
  std::vector<double> g(n);
  for (double& x : g) x = rng.gumbel();
  return g;
}

std::vector<double> gumbel_softmax_sample(std::span<const double> p, double tau, Rng& rng) {
  const auto g = sample_gumbel_noise(p.size(), rng);
  return gumbel_softmax<double>(p, g, tau);
}

OdeParams init_ode_params(OdeVariant variant, std::size_t num_users, std::size_t K, std::uint64_t seed,
                          const OdeInit& init) {
  if (num_users < 2) throw UsageError("ODE parameters need at least two users");
  OdeParams p;
  p.variant = variant;
  p.num_users = num_users;
  p.K = K;
  p.tau = init.tau;
  Rng rng(seed);
  switch (variant) {
    case OdeVariant::DeGroot:
      if (K < 1) throw UsageError("latent dimension K must be at least 1");
      p.M.resize(num_users * K);
      p.Q.resize(num_users * K);
      for (double& m : p.M) m = rng.uniform(-init.factor_scale, init.factor_scale);
      for (double& q : p.Q) q = rng.uniform(-init.factor_scale, init.factor_scale);
      break;
    case OdeVariant::FJ: {
      const double s = std::clamp(init.susceptibility, 1e-6, 1 - 1e-6);
      p.s_raw.assign(num_users, std::log(s / (1 - s)));
      p.x0.assign(num_users, 0.0);
      break;
    }
    case OdeVariant::BCM:
      p.delta_raw = {ad::softplus_inverse(init.delta)};
      p.gamma_raw = {ad::softplus_inverse(init.gamma)};
      break;
    case OdeVariant::SBCM:
      p.rho = {init.rho};
      break;
  }
  return p;
}

}  // namespace sinn
