#include "sinn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sinn/adam.hpp"
#include "sinn/io.hpp"
#include "sinn/json_util.hpp"
#include "sinn/rng.hpp"

namespace sinn {

namespace {

constexpr std::uint64_t kEmbeddingSeed = 0x5eed;
const char* const kTensorGroups[] = {"fnn", "head", "attention", "ode"};

bool is_frozen(const std::string& name, const std::vector<std::string>& frozen) {
  for (const auto& f : frozen)
    if (name == f || (name.size() > f.size() && name.compare(0, f.size(), f) == 0 && name[f.size()] == '.'))
      return true;
  return false;
}

}  // namespace

void SinnConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("model config: " + what);
  };
  require(layers >= 1, "layers must be at least 1");
  require(width >= 1, "width must be at least 1");
  require(variant != OdeVariant::DeGroot || K >= 1, "K must be at least 1");
  require(alpha >= 0 && std::isfinite(alpha), "alpha must be finite and >= 0");
  require(beta >= 0 && std::isfinite(beta), "beta must be finite and >= 0");
  require(tau > 0 && std::isfinite(tau), "tau must be positive");
  require(gamma > 0 && std::isfinite(gamma), "gamma must be positive");
  require(J >= 1, "J must be at least 1");
  require(embed_dim >= 1, "embed_dim must be at least 1");
  require(max_words >= 1, "max_words must be at least 1");
  require(batch >= 1, "batch must be at least 1");
  require(lr > 0 && std::isfinite(lr), "lr must be positive");
  require(horizon >= 0 && std::isfinite(horizon), "horizon must be finite and >= 0");
  require(head_scale >= 0 && std::isfinite(head_scale), "head_scale must be finite and >= 0");
  for (const auto& f : freeze) {
    bool known = false;
    for (const char* g : kTensorGroups) known = known || f == g || f.rfind(std::string(g) + ".", 0) == 0;
    require(known, "cannot freeze unknown tensor \"" + f + "\"");
  }
}

nlohmann::json sinn_config_to_json(const SinnConfig& c) {
  return {{"variant", std::string(to_string(c.variant))},
          {"L", c.layers},
          {"width", c.width},
          {"K", c.K},
          {"alpha", c.alpha},
          {"beta", c.beta},
          {"tau", c.tau},
          {"gamma", c.gamma},
          {"J", c.J},
          {"embed_dim", c.embed_dim},
          {"max_words", c.max_words},
          {"mask_pads", c.mask_pads},
          {"embeddings", c.embeddings_path},
          {"epochs", c.epochs},
          {"batch", c.batch},
          {"lr", c.lr},
          {"seed", c.seed},
          {"horizon", c.horizon},
          {"head_scale", c.head_scale},
          {"freeze", c.freeze}};
}

SinnConfig sinn_config_from_json(const nlohmann::json& j, const std::string& where) {
  SinnConfig c;
  JsonFields f(j, where);
  std::string variant(to_string(c.variant));
  f.get("variant", variant);
  try {
    c.variant = parse_ode_variant(variant);
  } catch (const InputError& e) {
    throw InputError(f.path("variant") + ": " + e.what());
  }
  f.get("L", c.layers);
  f.get("width", c.width);
  f.get("K", c.K);
  f.get("alpha", c.alpha);
  f.get("beta", c.beta);
  f.get("tau", c.tau);
  f.get("gamma", c.gamma);
  f.get("J", c.J);
  f.get("embed_dim", c.embed_dim);
  f.get("max_words", c.max_words);
  f.get("mask_pads", c.mask_pads);
  f.get("embeddings", c.embeddings_path);
  f.get("epochs", c.epochs);
  f.get("batch", c.batch);
  f.get("lr", c.lr);
  f.get("seed", c.seed);
  f.get("horizon", c.horizon);
  f.get("head_scale", c.head_scale);
  f.get("freeze", c.freeze);
  f.finish();
  return c;
}

std::vector<std::string> tensor_names(const SinnParams& p) {
  std::vector<std::string> names;
  p.for_each_tensor([&](const std::string& n, const std::vector<double>&) { names.push_back(n); });
  return names;
}

std::vector<double> flatten(const SinnParams& p) {
  std::vector<double> flat;
  p.for_each_tensor([&](const std::string&, const std::vector<double>& v) { flat.insert(flat.end(), v.begin(), v.end()); });
  return flat;
}

void unflatten(SinnParams& p, std::span<const double> flat) {
  std::size_t pos = 0;
  p.for_each_tensor([&](const std::string&, std::vector<double>& v) {
    if (pos + v.size() > flat.size()) throw UsageError("unflatten: vector too short");
    std::copy(flat.begin() + pos, flat.begin() + pos + v.size(), v.begin());
    pos += v.size();
  });
  if (pos != flat.size()) throw UsageError("unflatten: vector too long");
}

SinnParamsT<ad::Var> lift(const SinnParams& p, ad::Tape& tape, const std::vector<std::string>& frozen) {
  return p.transform<ad::Var>([&](const std::string& name, const std::vector<double>& v) {
    return ad::variables(tape, v, !is_frozen(name, frozen));
  });
}

std::vector<double> flat_gradients(const SinnParamsT<ad::Var>& p, const std::vector<double>& adjoints) {
  std::vector<double> g;
  p.for_each_tensor([&](const std::string&, const std::vector<ad::Var>& v) {
    for (const auto& x : v) g.push_back(adjoints.empty() ? 0.0 : ad::gradient(adjoints, x));
  });
  return g;
}

ProfileEncoder make_encoder(const ProfileCorpus& corpus, const SinnConfig& config) {
  ProfileEncoder enc;
  enc.max_words = config.max_words;
  enc.mask_pads = config.mask_pads;
  if (!config.embeddings_path.empty())
    enc.table = EmbeddingTable::load(config.embeddings_path, kEmbeddingSeed);
  else
    enc.table = EmbeddingTable::random(build_vocabulary(corpus, enc.tokenizer), config.embed_dim, kEmbeddingSeed);
  return enc;
}

std::vector<double> innate_opinions(const OpinionDataset& train) {
  std::vector<double> x0(train.num_users(), 0.0);
  std::vector<bool> seen(train.num_users(), false);
  for (const auto& p : train.posts()) {
    if (seen[p.user]) continue;
    seen[p.user] = true;
    x0[p.user] = label_to_continuous(p.label, train.num_classes());
  }
  return x0;
}

SinnModel init_model(const SinnConfig& config, std::size_t num_users, int num_classes, double horizon,
                     const ProfileCorpus& corpus) {
  config.validate();
  if (num_users < 2) throw InputError("training needs at least two users");
  SinnModel m;
  m.config = config;
  m.num_users = num_users;
  m.num_classes = num_classes;
  m.horizon = horizon;
  m.encoder = make_encoder(corpus, config);
  m.profiles = encode_corpus(m.encoder, corpus, num_users);
  const std::size_t dim = m.encoder.dim();
  m.params.fnn = init_params(config.layers, config.width, 1 + num_users + dim, mix_seed(config.seed, 1),
                             std::max(horizon, 1.0));
  for (int c = 0; c < num_classes; ++c) {
    const double mid = label_to_continuous(c, num_classes);
    m.params.head_w.push_back(config.head_scale * mid);
    m.params.head_b.push_back(-0.5 * config.head_scale * mid * mid);
  }
  m.params.context.assign(dim, 0.0);
  OdeInit init;
  init.gamma = config.gamma;
  init.tau = config.tau;
  m.params.ode = init_ode_params(config.variant, num_users, config.K, mix_seed(config.seed, 2), init);
  return m;
}

namespace {

std::vector<int> labels_with(const SinnParams& p, const LossInputs& in, std::span<const Post> posts) {
  const auto h = user_representations(p, in);
  std::vector<int> out;
  out.reserve(posts.size());
  for (const Post& post : posts) {
    const auto e = onehot<double>(in.num_users, post.user);
    const auto z = head_logits(p, forward<double>(p.fnn, post.time, e, h[post.user]));
    out.push_back(static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()));
  }
  return out;
}

void require_finite(double v, const char* term, std::size_t epoch, std::size_t step) {
  if (!std::isfinite(v))
    throw NumericError(std::string("non-finite ") + term + " at epoch " + std::to_string(epoch) + ", step " +
                       std::to_string(step));
}

}  // namespace

TrainResult train(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& config,
                  const EpochCallback& on_epoch) {
  const OpinionDataset& train_set = split.train;
  if (train_set.empty()) throw InputError("training split is empty");
  const double horizon = config.horizon > 0 ? config.horizon : train_set.horizon();
  TrainResult result{init_model(config, train_set.num_users(), train_set.num_classes(), horizon, corpus), {}, 0};
  SinnModel& model = result.model;
  if (config.variant == OdeVariant::FJ) model.params.ode.x0 = innate_opinions(train_set);

  const std::size_t U = model.num_users;
  const bool use_ode = config.alpha != 0.0;
  const bool stochastic = use_ode && config.variant == OdeVariant::SBCM;
  const LossInputs inputs = model.loss_inputs();
  const auto& posts = train_set.posts();

  Rng shuffle_rng(mix_seed(config.seed, 11));
  Rng colloc_rng(mix_seed(config.seed, 12));
  Rng noise_rng(mix_seed(config.seed, 13));
  AdamState adam;
  adam.learning_rate = config.lr;
  std::vector<std::size_t> order(posts.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Post> batch;
  std::vector<double> times, noise;
  ad::Tape tape;
  double best_f1 = -1.0;
  SinnParams best = model.params;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochRecord rec;
    rec.epoch = epoch;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch) {
      ++step;
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch); ++i) batch.push_back(posts[order[i]]);
      times.clear();
      noise.clear();
      if (use_ode) {
        for (std::size_t j = 0; j < config.J; ++j) times.push_back(colloc_rng.uniform(0.0, horizon));
        if (stochastic) noise = sample_gumbel_noise(config.J * U * U, noise_rng);
      }
      tape.clear();
      const auto vp = lift(model.params, tape, config.freeze);
      const auto terms = total_loss<ad::Var>(vp, inputs, batch, times, noise, config.alpha, config.beta);
      require_finite(terms.data.value(), "data_loss", epoch, step);
      require_finite(terms.ode.value(), "ode_loss", epoch, step);
      require_finite(terms.reg.value(), "regularizer", epoch, step);
      require_finite(terms.total.value(), "total_loss", epoch, step);
      const auto adj = terms.total.is_constant() ? std::vector<double>{} : tape.backward(terms.total.index());
      const auto grads = flat_gradients(vp, adj);
      for (double g : grads) require_finite(g, "gradient", epoch, step);
      auto flat = flatten(model.params);
      adam_step(flat, grads, adam);
      unflatten(model.params, flat);
      rec.data_loss += terms.data.value();
      rec.ode_loss += terms.ode.value();
      rec.reg += terms.reg.value();
      rec.total += terms.total.value();
      ++steps;
    }
    rec.data_loss /= static_cast<double>(steps);
    rec.ode_loss /= static_cast<double>(steps);
    rec.reg /= static_cast<double>(steps);
    rec.total /= static_cast<double>(steps);
    if (!split.val.empty()) {
      const auto pred = labels_with(model.params, inputs, split.val.posts());
      const auto truth = split.val.labels();
      const auto m = compute_metrics(truth, pred, model.num_classes);
      rec.val_acc = m.accuracy;
      rec.val_f1 = m.macro_f1;
      if (rec.val_f1 > best_f1) {
        best_f1 = rec.val_f1;
        best = model.params;
        result.best_epoch = epoch;
      }
    } else {
      best = model.params;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  model.params = std::move(best);
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  CsvWriter csv({"epoch", "data_loss", "ode_loss", "reg", "total", "val_acc", "val_f1"});
  for (const auto& r : history)
    csv.row({std::to_string(r.epoch), format_double(r.data_loss), format_double(r.ode_loss), format_double(r.reg),
             format_double(r.total), format_double(r.val_acc), format_double(r.val_f1)});
  return csv.str();
}

namespace {

void check_user(const SinnModel& model, std::size_t user) {
  if (user >= model.num_users)
    throw InputError("unknown user " + std::to_string(user) + " (model has " + std::to_string(model.num_users) +
                     " users)");
}

std::vector<double> user_vector(const SinnModel& model, std::size_t user) {
  if (user < model.profiles.size())
    return encode_user<double>(model.profiles[user], model.params.context, model.config.mask_pads);
  return std::vector<double>(model.params.context.size(), 0.0);
}

}  // namespace

double latent_opinion(const SinnModel& model, std::size_t user, double t) {
  check_user(model, user);
  const auto e = onehot<double>(model.num_users, user);
  return forward<double>(model.params.fnn, t, e, user_vector(model, user));
}

std::vector<double> predict(const SinnModel& model, std::size_t user, double t) {
  auto z = head_logits(model.params, latent_opinion(model, user, t));
  const double shift = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (double& v : z) total += (v = std::exp(v - shift));
  for (double& v : z) v /= total;
  return z;
}

std::vector<int> predict_labels(const SinnModel& model, std::span<const Post> posts) {
  for (const Post& p : posts) check_user(model, p.user);
  return labels_with(model.params, model.loss_inputs(), posts);
}

nlohmann::json model_to_json(const SinnModel& model) {
  nlohmann::json tensors = nlohmann::json::object();
  model.params.for_each_tensor(
      [&](const std::string& name, const std::vector<double>& v) { tensors[name] = v; });
  nlohmann::json j;
  j["format"] = "sinn-checkpoint";
  j["version"] = 1;
  j["config"] = sinn_config_to_json(model.config);
  j["num_users"] = model.num_users;
  j["num_classes"] = model.num_classes;
  j["horizon"] = model.horizon;
  j["fnn"] = fnn_to_json(model.params.fnn);
  j["tensors"] = tensors;
  j["ode"] = {{"variant", std::string(to_string(model.params.ode.variant))},
              {"K", model.params.ode.K},
              {"tau", model.params.ode.tau},
              {"x0", model.params.ode.x0}};
  j["encoder"] = {{"dim", model.encoder.dim()},
                  {"seed", model.encoder.table.seed()},
                  {"oov_buckets", model.encoder.table.oov_buckets()},
                  {"vocabulary", model.encoder.table.vocabulary()}};
  return j;
}

SinnModel model_from_json(const nlohmann::json& j, const ProfileCorpus& corpus) {
  try {
    if (j.value("format", "") != "sinn-checkpoint") throw InputError("not a checkpoint document");
    SinnModel m = init_model(sinn_config_from_json(j.at("config"), "config"), j.at("num_users").get<std::size_t>(),
                             j.at("num_classes").get<int>(), j.at("horizon").get<double>(), corpus);
    const auto& enc = j.at("encoder");
    if (m.config.embeddings_path.empty()) {
      m.encoder.table = EmbeddingTable::random(enc.at("vocabulary").get<std::vector<std::string>>(),
                                               enc.at("dim").get<std::size_t>(), enc.at("seed").get<std::uint64_t>(),
                                               enc.at("oov_buckets").get<std::size_t>());
      m.profiles = encode_corpus(m.encoder, corpus, m.num_users);
    }
    m.params.fnn = fnn_from_json(j.at("fnn"));
    if (m.params.fnn.input_dim() != 1 + m.num_users + m.encoder.dim())
      throw InputError("network input does not match users and encoder dimension");
    const auto& tensors = j.at("tensors");
    m.params.for_each_tensor([&](const std::string& name, std::vector<double>& v) {
      if (name.rfind("fnn.", 0) == 0) return;
      auto stored = tensors.at(name).get<std::vector<double>>();
      if (stored.size() != v.size())
        throw InputError("tensor " + name + " has " + std::to_string(stored.size()) + " values, expected " +
                         std::to_string(v.size()));
      v = std::move(stored);
    });
    m.params.ode.x0 = j.at("ode").at("x0").get<std::vector<double>>();
    m.params.ode.tau = j.at("ode").at("tau").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const SinnModel& model, const std::filesystem::path& path) {
  write_text_file(path, model_to_json(model).dump(1) + "\n");
}

SinnModel load_checkpoint(const std::filesystem::path& path, const ProfileCorpus& corpus) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return model_from_json(j, corpus);
}

}  // namespace sinn
