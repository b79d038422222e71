#pragma once

// Right-hand sides of the continuous-time opinion models used as ODE
// residual targets, written over the scalar type so the same code serves
// plain evaluation and taped training.

#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sinn/autodiff.hpp"
#include "sinn/errors.hpp"
#include "sinn/rng.hpp"
#include "sinn/sim.hpp"

namespace sinn {

enum class OdeVariant { DeGroot, FJ, BCM, SBCM };

std::string_view to_string(OdeVariant v);
OdeVariant parse_ode_variant(std::string_view name);
std::vector<OdeVariant> all_ode_variants();

inline constexpr double kProbabilityFloor = 1e-12;

/// sum_{v != u} (m_u . q_v) x_v with M, Q stored U x K row-major.
template <class S>
S degroot_rhs(std::span<const S> x, std::span<const S> M, std::span<const S> Q, std::size_t K, std::size_t u) {
  S acc(0.0);
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (v == u) continue;
    acc += ad::dot(M.subspan(u * K, K), Q.subspan(v * K, K)) * x[v];
  }
  return acc;
}

/// degroot_rhs for every user at once in O(U K):
/// rhs_u = m_u . (sum_v q_v x_v - q_u x_u).
template <class S>
std::vector<S> degroot_rhs_all(std::span<const S> x, std::span<const S> M, std::span<const S> Q, std::size_t K) {
  const std::size_t U = x.size();
  if (M.size() != U * K || Q.size() != U * K) throw UsageError("degroot_rhs_all: factor shapes do not match");
  std::vector<S> total(K);
  std::vector<S> column(U);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t v = 0; v < U; ++v) column[v] = Q[v * K + k];
    total[k] = ad::dot(std::span<const S>(column), x);
  }
  std::vector<S> out(U), others(K);
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t k = 0; k < K; ++k) others[k] = total[k] - Q[u * K + k] * x[u];
    out[u] = ad::dot(M.subspan(u * K, K), std::span<const S>(others));
  }
  return out;
}

/// s_u sum_{v != u} x_v + (1 - s_u) x0_u - x_u, with s_u already in [0, 1].
template <class S>
S fj_rhs(std::span<const S> x, std::span<const double> x0, std::span<const S> s, std::size_t u) {
  S others(0.0);
  for (std::size_t v = 0; v < x.size(); ++v)
    if (v != u) others += x[v];
  return s[u] * others + (S(1.0) - s[u]) * S(x0[u]) - x[u];
}

template <class S>
std::vector<S> fj_rhs_all(std::span<const S> x, std::span<const double> x0, std::span<const S> s) {
  const S total = ad::sum(x);
  std::vector<S> out(x.size());
  for (std::size_t u = 0; u < x.size(); ++u)
    out[u] = s[u] * (total - x[u]) + (S(1.0) - s[u]) * S(x0[u]) - x[u];
  return out;
}

/// sum_v sigmoid(gamma (delta - |x_u - x_v|)) (x_v - x_u); the v = u term is zero.
template <class S>
S bcm_rhs(std::span<const S> x, const S& delta, const S& gamma, std::size_t u) {
  std::vector<S> terms;
  terms.reserve(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) {
    if (v == u) continue;
    const S diff = x[v] - x[u];
    terms.push_back(ad::sigmoid(gamma * (delta - ad::abs(diff))) * diff);
  }
  return ad::sum(std::span<const S>(terms));
}

/// softmax((log max(p, floor) + g) / tau) with the Gumbel noise g supplied,
/// so two evaluations can share one draw.
template <class S>
std::vector<S> gumbel_softmax(std::span<const S> p, std::span<const double> noise, double tau) {
  if (p.size() != noise.size()) throw UsageError("gumbel_softmax: noise length does not match");
  if (!(tau > 0.0)) throw UsageError("gumbel_softmax: temperature must be positive");
  std::vector<S> logits(p.size());
  double shift = -INFINITY;
  for (std::size_t i = 0; i < p.size(); ++i) {
    logits[i] = (ad::log(ad::max(p[i], kProbabilityFloor)) + S(noise[i])) * S(1.0 / tau);
    shift = std::max(shift, ad::value_of(logits[i]));
  }
  for (S& l : logits) l = ad::exp(l - S(shift));
  const S total = ad::sum(std::span<const S>(logits));
  for (S& l : logits) l = l / total;
  return logits;
}

std::vector<double> sample_gumbel_noise(std::size_t n, Rng& rng);

/// Fresh relaxed one-hot sample z~ on the simplex.
std::vector<double> gumbel_softmax_sample(std::span<const double> p, double tau, Rng& rng);

/// sum_v z_v (x_v - x_u).
template <class S>
S sbcm_rhs(std::span<const S> x, std::span<const S> z, std::size_t u) {
  std::vector<S> diff(x.size());
  for (std::size_t v = 0; v < x.size(); ++v) diff[v] = x[v] - x[u];
  return ad::dot(z, std::span<const S>(diff));
}

/// Learnable ODE parameters. Positive or bounded scalars are stored raw and
/// squashed on use: s = sigmoid(s_raw), delta = softplus(delta_raw),
/// gamma = softplus(gamma_raw). Only the tensors of the active variant are
/// non-empty.
template <class S>
struct OdeParamsT {
  OdeVariant variant = OdeVariant::DeGroot;
  std::size_t num_users = 0;
  std::size_t K = 0;
  std::vector<S> M, Q;        // DeGroot, U x K row-major
  std::vector<S> s_raw;       // FJ, length U
  std::vector<double> x0;     // FJ innate opinions, held fixed
  std::vector<S> delta_raw;   // BCM, length 1
  std::vector<S> gamma_raw;   // BCM, length 1
  std::vector<S> rho;         // SBCM, length 1
  double tau = 0.5;           // SBCM Gumbel temperature, held fixed

  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  template <class T, class F>
  OdeParamsT<T> transform(F&& f) const {
    OdeParamsT<T> out;
    out.variant = variant;
    out.num_users = num_users;
    out.K = K;
    out.x0 = x0;
    out.tau = tau;
    out.M = f("ode.M", M);
    out.Q = f("ode.Q", Q);
    out.s_raw = f("ode.s", s_raw);
    out.delta_raw = f("ode.delta", delta_raw);
    out.gamma_raw = f("ode.gamma", gamma_raw);
    out.rho = f("ode.rho", rho);
    return out;
  }

 private:
  template <class Self, class F>
  static void visit(Self& self, F& f) {
    if (!self.M.empty()) f("ode.M", self.M);
    if (!self.Q.empty()) f("ode.Q", self.Q);
    if (!self.s_raw.empty()) f("ode.s", self.s_raw);
    if (!self.delta_raw.empty()) f("ode.delta", self.delta_raw);
    if (!self.gamma_raw.empty()) f("ode.gamma", self.gamma_raw);
    if (!self.rho.empty()) f("ode.rho", self.rho);
  }
};

using OdeParams = OdeParamsT<double>;

struct OdeInit {
  double factor_scale = 1.0;  // M, Q uniform on [-scale, scale]
  double susceptibility = 0.5;
  double delta = 0.3;
  double gamma = 10.0;
  double rho = 0.0;
  double tau = 0.5;
};

OdeParams init_ode_params(OdeVariant variant, std::size_t num_users, std::size_t K, std::uint64_t seed,
                          const OdeInit& init = {});

/// Right-hand side for every user at the network state x. `noise` holds one
/// U-vector of Gumbel draws per initiator (U x U row-major) and is only read
/// by the SBCM variant.
template <class S>
std::vector<S> ode_rhs_all(const OdeParamsT<S>& p, std::span<const S> x, std::span<const double> noise) {
  const std::size_t U = x.size();
  if (U != p.num_users) throw UsageError("ode_rhs_all: state has the wrong number of users");
  std::vector<S> out;
  switch (p.variant) {
    case OdeVariant::DeGroot:
      return degroot_rhs_all<S>(x, p.M, p.Q, p.K);
    case OdeVariant::FJ: {
      std::vector<S> s(U);
      for (std::size_t u = 0; u < U; ++u) s[u] = ad::sigmoid(p.s_raw[u]);
      return fj_rhs_all<S>(x, p.x0, s);
    }
    case OdeVariant::BCM: {
      const S delta = ad::softplus(p.delta_raw[0]), gamma = ad::softplus(p.gamma_raw[0]);
      out.reserve(U);
      for (std::size_t u = 0; u < U; ++u) out.push_back(bcm_rhs<S>(x, delta, gamma, u));
      return out;
    }
    case OdeVariant::SBCM: {
      if (noise.size() != U * U) throw UsageError("ode_rhs_all: SBCM needs U x U Gumbel noise");
      out.reserve(U);
      for (std::size_t u = 0; u < U; ++u) {
        const auto probs = sbcm_partner_probs<S>(x, u, p.rho[0]);
        const auto z = gumbel_softmax<S>(probs, noise.subspan(u * U, U), p.tau);
        out.push_back(sbcm_rhs<S>(x, z, u));
      }
      return out;
    }
  }
  return out;
}

/// Sum of |entries| of M and Q; zero for variants without factors.
template <class S>
S l1_regularizer(const OdeParamsT<S>& p) {
  std::vector<S> terms;
  terms.reserve(p.M.size() + p.Q.size());
  for (const S& m : p.M) terms.push_back(ad::abs(m));
  for (const S& q : p.Q) terms.push_back(ad::abs(q));
  return ad::sum(std::span<const S>(terms));
}

}  // namespace sinn
