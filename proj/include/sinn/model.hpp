#pragma once

// The sociologically-informed network: tanh approximator x_hat(t, u, h_u),
// softmax output head, attention-pooled profile encoder and ODE parameters,
// trained on  data_loss + alpha * ode_loss + beta * l1(M, Q).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "sinn/autodiff.hpp"
#include "sinn/data.hpp"
#include "sinn/encoder.hpp"
#include "sinn/metrics.hpp"
#include "sinn/mlp.hpp"
#include "sinn/ode.hpp"

namespace sinn {

struct SinnConfig {
  OdeVariant variant = OdeVariant::SBCM;
  std::size_t layers = 3;  // hidden layers
  std::size_t width = 8;
  std::size_t K = 2;
  double alpha = 1.0;
  double beta = 0.1;
  double tau = 0.5;
  double gamma = 10.0;  // initial BCM sigmoid slope
  std::size_t J = 1;    // collocation points per step
  std::size_t embed_dim = 32;
  std::size_t max_words = 25;
  bool mask_pads = true;
  std::string embeddings_path;  // optional external word vectors
  std::size_t epochs = 100;
  std::size_t batch = 128;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  double horizon = 0.0;  // collocation domain [0, horizon]; 0 takes the dataset's
  double head_scale = 4.0;
  std::vector<std::string> freeze;  // tensor names held fixed, e.g. "ode.rho"

  void validate() const;
};

nlohmann::json sinn_config_to_json(const SinnConfig& c);
/// Strict: unknown keys and wrong types raise InputError naming the key.
SinnConfig sinn_config_from_json(const nlohmann::json& j, const std::string& where = "model");

template <class S>
struct SinnParamsT {
  FnnParamsT<S> fnn;
  std::vector<S> head_w;   // C
  std::vector<S> head_b;   // C
  std::vector<S> context;  // attention context vector E
  OdeParamsT<S> ode;

  template <class F>
  void for_each_tensor(F&& f) {
    fnn.for_each_tensor(f);
    f("head.w", head_w);
    f("head.b", head_b);
    f("attention.E", context);
    ode.for_each_tensor(f);
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    fnn.for_each_tensor(f);
    f("head.w", head_w);
    f("head.b", head_b);
    f("attention.E", context);
    ode.for_each_tensor(f);
  }

  template <class T, class F>
  SinnParamsT<T> transform(F&& f) const {
    SinnParamsT<T> out;
    out.fnn = fnn.template transform<T>(f);
    out.head_w = f("head.w", head_w);
    out.head_b = f("head.b", head_b);
    out.context = f("attention.E", context);
    out.ode = ode.template transform<T>(f);
    return out;
  }
};

using SinnParams = SinnParamsT<double>;

std::vector<std::string> tensor_names(const SinnParams& p);
std::vector<double> flatten(const SinnParams& p);
void unflatten(SinnParams& p, std::span<const double> flat);

/// Parameters moved onto `tape`; tensors named in `frozen` become constants.
SinnParamsT<ad::Var> lift(const SinnParams& p, ad::Tape& tape, const std::vector<std::string>& frozen = {});
/// Gradients in flatten() order; constants contribute zeros.
std::vector<double> flat_gradients(const SinnParamsT<ad::Var>& p, const std::vector<double>& adjoints);

/// Fixed inputs of the loss: user count, classes and pre-tokenized profiles.
struct LossInputs {
  std::size_t num_users = 0;
  int num_classes = 0;
  std::span<const EncodedProfile> profiles;  // empty or num_users entries
  bool mask_pads = true;
};

template <class S>
std::vector<std::vector<S>> user_representations(const SinnParamsT<S>& p, const LossInputs& in) {
  std::vector<std::vector<S>> h(in.num_users);
  for (std::size_t u = 0; u < in.num_users; ++u)
    h[u] = u < in.profiles.size() ? encode_user<S>(in.profiles[u], p.context, in.mask_pads)
                                  : std::vector<S>(p.context.size(), S(0.0));
  return h;
}

template <class S>
std::vector<S> onehot(std::size_t num_users, std::size_t u) {
  std::vector<S> e(num_users, S(0.0));
  e[u] = S(1.0);
  return e;
}

template <class S>
std::vector<S> head_logits(const SinnParamsT<S>& p, const S& x_hat) {
  std::vector<S> z(p.head_w.size());
  for (std::size_t c = 0; c < z.size(); ++c) z[c] = x_hat * p.head_w[c] + p.head_b[c];
  return z;
}

/// -log softmax(z)[label], shifted by max(z) for stability.
template <class S>
S cross_entropy(std::span<const S> z, int label) {
  double shift = -INFINITY;
  for (const S& v : z) shift = std::max(shift, ad::value_of(v));
  std::vector<S> ex(z.size());
  for (std::size_t c = 0; c < z.size(); ++c) ex[c] = ad::exp(z[c] - S(shift));
  return ad::log(ad::sum(std::span<const S>(ex))) + S(shift) - z[label];
}

/// Mean cross-entropy of the head's softmax over the posts.
template <class S>
S data_loss(const SinnParamsT<S>& p, const std::vector<std::vector<S>>& h, std::span<const Post> posts,
            std::size_t num_users) {
  if (posts.empty()) return S(0.0);
  std::vector<S> terms;
  terms.reserve(posts.size());
  for (const Post& post : posts) {
    const auto e = onehot<S>(num_users, post.user);
    const S x = forward<S>(p.fnn, S(post.time), e, h[post.user]);
    const auto z = head_logits(p, x);
    terms.push_back(cross_entropy<S>(z, post.label));
  }
  return ad::sum(std::span<const S>(terms)) * S(1.0 / static_cast<double>(posts.size()));
}

/// (1/J) sum_j sum_u (dx_hat_u/dt - rhs_u(x_hat(tau_j)))^2. `noise` holds
/// J blocks of U x U Gumbel draws (SBCM only; may be empty otherwise).
template <class S>
S ode_loss(const SinnParamsT<S>& p, const std::vector<std::vector<S>>& h, std::span<const double> times,
           std::span<const double> noise) {
  if (times.empty()) return S(0.0);
  const std::size_t U = h.size();
  const bool stochastic = p.ode.variant == OdeVariant::SBCM;
  if (stochastic && noise.size() != times.size() * U * U)
    throw UsageError("ode_loss: expected " + std::to_string(times.size() * U * U) + " Gumbel draws");
  std::vector<S> terms;
  std::vector<S> x(U), slope(U);
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (std::size_t u = 0; u < U; ++u) {
      const auto e = onehot<S>(U, u);
      auto vs = value_and_time_derivative<S>(p.fnn, S(times[j]), e, h[u]);
      x[u] = vs.value;
      slope[u] = vs.slope;
    }
    const auto rhs = ode_rhs_all<S>(p.ode, x, stochastic ? noise.subspan(j * U * U, U * U) : noise);
    for (std::size_t u = 0; u < U; ++u) {
      const S r = slope[u] - rhs[u];
      terms.push_back(r * r);
    }
  }
  return ad::sum(std::span<const S>(terms)) * S(1.0 / static_cast<double>(times.size()));
}

template <class S>
struct LossTerms {
  S data;
  S ode;
  S reg;
  S total;
};

/// Terms whose weight is zero are skipped entirely, so alpha = beta = 0
/// returns the data loss untouched.
template <class S>
LossTerms<S> total_loss(const SinnParamsT<S>& p, const LossInputs& in, std::span<const Post> batch,
                        std::span<const double> times, std::span<const double> noise, double alpha, double beta) {
  const auto h = user_representations(p, in);
  LossTerms<S> t{data_loss<S>(p, h, batch, in.num_users), S(0.0), S(0.0), S(0.0)};
  t.total = t.data;
  if (alpha != 0.0) {
    t.ode = ode_loss<S>(p, h, times, noise);
    t.total = t.total + S(alpha) * t.ode;
  }
  if (beta != 0.0) {
    t.reg = l1_regularizer<S>(p.ode);
    t.total = t.total + S(beta) * t.reg;
  }
  return t;
}

struct SinnModel {
  SinnConfig config;
  std::size_t num_users = 0;
  int num_classes = 0;
  double horizon = 0.0;
  SinnParams params;
  ProfileEncoder encoder;
  std::vector<EncodedProfile> profiles;

  LossInputs loss_inputs() const { return {num_users, num_classes, profiles, config.mask_pads}; }
};

/// Encoder over the corpus vocabulary (or the configured embedding file).
ProfileEncoder make_encoder(const ProfileCorpus& corpus, const SinnConfig& config);

/// Freshly initialized model. The head starts as logits
/// -head_scale/2 (x - c_k)^2 + const around the class midpoints c_k, so the
/// initial argmax is the nearest class.
SinnModel init_model(const SinnConfig& config, std::size_t num_users, int num_classes, double horizon,
                     const ProfileCorpus& corpus);

/// Innate opinions for the FJ variant: each user's first training label
/// mapped to its midpoint (0 for users without training posts).
std::vector<double> innate_opinions(const OpinionDataset& train);

struct EpochRecord {
  std::size_t epoch = 0;
  double data_loss = 0.0;
  double ode_loss = 0.0;
  double reg = 0.0;
  double total = 0.0;
  double val_acc = 0.0;
  double val_f1 = 0.0;
};

struct TrainResult {
  SinnModel model;  // parameters from the best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch Adam on split.train, model selection on split.val macro-F1
/// (earliest epoch wins ties; without validation posts the final epoch is
/// kept). Throws NumericError naming the term when a loss turns non-finite.
TrainResult train(const DatasetSplit& split, const ProfileCorpus& corpus, const SinnConfig& config,
                  const EpochCallback& on_epoch = {});

std::string history_csv(const std::vector<EpochRecord>& history);

/// Class probabilities for user u at time t. Unknown users are an InputError.
std::vector<double> predict(const SinnModel& model, std::size_t user, double t);
std::vector<int> predict_labels(const SinnModel& model, std::span<const Post> posts);
/// Continuous latent opinion x_hat_u(t).
double latent_opinion(const SinnModel& model, std::size_t user, double t);

nlohmann::json model_to_json(const SinnModel& model);
SinnModel model_from_json(const nlohmann::json& j, const ProfileCorpus& corpus);
void save_checkpoint(const SinnModel& model, const std::filesystem::path& path);
SinnModel load_checkpoint(const std::filesystem::path& path, const ProfileCorpus& corpus);

}  // namespace sinn
