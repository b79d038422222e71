#pragma once

// tanh feedforward approximator x_hat = f(t, e_u, h_u).
//
// The input layer is the concatenation [t / time_scale, one-hot user, profile
// vector]. `layers` hidden tanh layers of equal width are followed by a tanh
// output unit, so the output always lies in (-1, 1).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sinn/autodiff.hpp"
#include "sinn/errors.hpp"

namespace sinn {

template <class S>
struct DenseLayerT {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<S> weight;  // out x in, row-major
  std::vector<S> bias;    // out
};

template <class S>
struct FnnParamsT {
  std::vector<DenseLayerT<S>> layers;
  double time_scale = 1.0;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t hidden_layers() const { return layers.empty() ? 0 : layers.size() - 1; }
  std::size_t width() const { return layers.size() < 2 ? 0 : layers.front().out; }

  /// Visit every tensor in a fixed order with a stable name.
  template <class F>
  void for_each_tensor(F&& f) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      f("fnn.W" + std::to_string(l), layers[l].weight);
      f("fnn.b" + std::to_string(l), layers[l].bias);
    }
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      f("fnn.W" + std::to_string(l), layers[l].weight);
      f("fnn.b" + std::to_string(l), layers[l].bias);
    }
  }

  /// Same architecture, each tensor replaced by f(name, tensor).
  template <class T, class F>
  FnnParamsT<T> transform(F&& f) const {
    FnnParamsT<T> out;
    out.time_scale = time_scale;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      DenseLayerT<T> d;
      d.in = layers[l].in;
      d.out = layers[l].out;
      d.weight = f("fnn.W" + std::to_string(l), layers[l].weight);
      d.bias = f("fnn.b" + std::to_string(l), layers[l].bias);
      out.layers.push_back(std::move(d));
    }
    return out;
  }
};

using FnnParams = FnnParamsT<double>;

/// Glorot-uniform weights, zero biases. `hidden_layers` >= 1 tanh layers of
/// `width` units, then one output unit.
FnnParams init_params(std::size_t hidden_layers, std::size_t width, std::size_t input_dim, std::uint64_t seed,
                      double time_scale = 1.0);

template <class S>
struct ValueAndSlope {
  S value;
  S slope;  // d value / d t
};

namespace detail {

template <class S>
void check_inputs(const FnnParamsT<S>& p, const S& t, std::span<const S> onehot, std::span<const S> profile) {
  if (p.layers.empty()) throw UsageError("network has no layers");
  if (1 + onehot.size() + profile.size() != p.input_dim())
    throw UsageError("input dimension " + std::to_string(1 + onehot.size() + profile.size()) +
                     " does not match network input " + std::to_string(p.input_dim()));
  auto finite = [](const S& x) { return std::isfinite(ad::value_of(x)); };
  bool ok = finite(t);
  for (const S& x : onehot) ok = ok && finite(x);
  for (const S& x : profile) ok = ok && finite(x);
  if (!ok) throw InputError("network input is not finite");
}

template <class S>
std::vector<S> assemble_input(const FnnParamsT<S>& p, const S& t, std::span<const S> onehot,
                              std::span<const S> profile) {
  std::vector<S> a;
  a.reserve(p.input_dim());
  a.push_back(t * S(1.0 / p.time_scale));
  a.insert(a.end(), onehot.begin(), onehot.end());
  a.insert(a.end(), profile.begin(), profile.end());
  return a;
}

}  // namespace detail

template <class S>
S forward(const FnnParamsT<S>& p, const S& t, std::span<const S> onehot, std::span<const S> profile) {
  detail::check_inputs(p, t, onehot, profile);
  std::vector<S> a = detail::assemble_input(p, t, onehot, profile);
  std::vector<S> next;
  for (const auto& layer : p.layers) {
    next.clear();
    next.reserve(layer.out);
    std::span<const S> w(layer.weight);
    for (std::size_t i = 0; i < layer.out; ++i)
      next.push_back(ad::tanh(ad::dot(w.subspan(i * layer.in, layer.in), std::span<const S>(a)) + layer.bias[i]));
    a.swap(next);
  }
  return a.front();
}

/// Output and its exact derivative with respect to t, by propagating the
/// tangent of t forward alongside the values. With S = ad::Var the tangent
/// computation is itself on the tape, so losses built from the slope can be
/// differentiated with respect to the weights.
template <class S>
ValueAndSlope<S> value_and_time_derivative(const FnnParamsT<S>& p, const S& t, std::span<const S> onehot,
                                           std::span<const S> profile) {
  detail::check_inputs(p, t, onehot, profile);
  std::vector<S> a = detail::assemble_input(p, t, onehot, profile);
  std::vector<S> da(a.size(), S(0.0));
  da[0] = S(1.0 / p.time_scale);
  std::vector<S> next, dnext;
  for (const auto& layer : p.layers) {
    next.clear();
    dnext.clear();
    std::span<const S> w(layer.weight);
    for (std::size_t i = 0; i < layer.out; ++i) {
      auto row = w.subspan(i * layer.in, layer.in);
      S y = ad::tanh(ad::dot(row, std::span<const S>(a)) + layer.bias[i]);
      S dz = ad::dot(row, std::span<const S>(da));
      dnext.push_back((S(1.0) - y * y) * dz);
      next.push_back(std::move(y));
    }
    a.swap(next);
    da.swap(dnext);
  }
  return {a.front(), da.front()};
}

nlohmann::json fnn_to_json(const FnnParams& p);
FnnParams fnn_from_json(const nlohmann::json& j);

}  // namespace sinn
