#include "sinn/mlp.hpp"

#include <nlohmann/json.hpp>

#include "sinn/rng.hpp"

namespace sinn {

FnnParams init_params(std::size_t hidden_layers, std::size_t width, std::size_t input_dim, std::uint64_t seed,
                      double time_scale) {
  if (hidden_layers < 1) throw UsageError("need at least one hidden layer");
  if (width < 1 || input_dim < 1) throw UsageError("layer sizes must be positive");
  if (!(time_scale > 0.0)) throw UsageError("time_scale must be positive");
  Rng rng(seed);
  FnnParams p;
  p.time_scale = time_scale;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l <= hidden_layers; ++l) {
    const std::size_t out = l == hidden_layers ? 1 : width;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseLayerT<double> layer;
    layer.in = in;
    layer.out = out;
    layer.weight.resize(in * out);
    for (double& w : layer.weight) w = rng.uniform(-limit, limit);
    layer.bias.assign(out, 0.0);
    p.layers.push_back(std::move(layer));
    in = out;
  }
  return p;
}

nlohmann::json fnn_to_json(const FnnParams& p) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : p.layers)
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weight", l.weight}, {"bias", l.bias}});
  return {{"time_scale", p.time_scale}, {"layers", layers}};
}

FnnParams fnn_from_json(const nlohmann::json& j) {
  FnnParams p;
  p.time_scale = j.at("time_scale").get<double>();
  std::size_t prev_out = 0;
  for (const auto& lj : j.at("layers")) {
    DenseLayerT<double> l;
    l.in = lj.at("in").get<std::size_t>();
    l.out = lj.at("out").get<std::size_t>();
    l.weight = lj.at("weight").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    if (l.weight.size() != l.in * l.out || l.bias.size() != l.out)
      throw ParseError("layer tensor sizes do not match declared shape");
    if (prev_out && l.in != prev_out) throw ParseError("layer shapes do not chain");
    prev_out = l.out;
    p.layers.push_back(std::move(l));
  }
  if (p.layers.empty() || p.layers.back().out != 1) throw ParseError("network must end in a single output unit");
  return p;
}

}  // namespace sinn
