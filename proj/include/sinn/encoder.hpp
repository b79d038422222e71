#pragma once

// Attention-pooled profile encoder. Word vectors come from a frozen table;
// only the context vector E is trained:
//   e_n = w_n . E,   a = softmax(e) over real tokens,   h_u = sum_n a_n w_n.

#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sinn/autodiff.hpp"
#include "sinn/data.hpp"
#include "sinn/errors.hpp"

namespace sinn {

inline constexpr const char* kPadToken = "[PAD]";

struct TokenizerConfig {
  bool lowercase = true;
  bool strip_punctuation = true;
  std::set<std::string> stop_words;
};

std::vector<std::string> tokenize(const std::string& text, const TokenizerConfig& config = {});

struct PaddedTokens {
  std::vector<std::string> tokens;  // exactly max_words entries
  std::vector<std::uint8_t> mask;   // 1 for real tokens
};

/// Tokenize, keep the first max_words tokens, pad the rest with kPadToken.
PaddedTokens tokenize_and_pad(const std::string& text, std::size_t max_words = 25,
                              const TokenizerConfig& config = {});

std::set<std::string> load_stop_words(const std::filesystem::path& path);

/// Frozen word vectors. Row 0 is the all-zero pad row, rows 1..V hold the
/// vocabulary, and a block of hashed buckets catches out-of-vocabulary tokens.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Seeded random unit vectors. Each word's vector depends only on (seed,
  /// word), so the vocabulary order does not matter.
  static EmbeddingTable random(const std::vector<std::string>& vocabulary, std::size_t dim, std::uint64_t seed,
                               std::size_t oov_buckets = 64);

  /// Text format: a word followed by `dim` numbers per line.
  static EmbeddingTable load(const std::filesystem::path& path, std::uint64_t seed = 0,
                             std::size_t oov_buckets = 64);

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return dim_ ? vectors_.size() / dim_ : 0; }
  std::size_t pad_id() const { return 0; }
  std::size_t id(const std::string& token) const;
  std::span<const double> row(std::size_t id) const { return {vectors_.data() + id * dim_, dim_}; }
  const std::vector<std::string>& vocabulary() const { return words_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t oov_buckets() const { return buckets_; }

 private:
  void add_row(std::span<const double> v);
  void finish(std::uint64_t seed, std::size_t oov_buckets);

  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t buckets_ = 0;
  std::size_t oov_begin_ = 0;
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> vectors_;
};

std::vector<std::string> build_vocabulary(const ProfileCorpus& corpus, const TokenizerConfig& config = {});

template <class S>
struct AttentionResult {
  std::vector<S> pooled;   // length dim
  std::vector<S> weights;  // length N; zero at masked positions
};

/// `word_vectors` is N x dim row-major. With mask_pads the softmax runs over
/// mask == 1 positions only and an all-masked input pools to zero; without it
/// every position (pads included) takes part.
template <class S>
AttentionResult<S> attention_pool(std::span<const double> word_vectors, std::span<const std::uint8_t> mask,
                                  std::span<const S> context, bool mask_pads = true) {
  const std::size_t dim = context.size();
  if (dim == 0 || word_vectors.size() != mask.size() * dim)
    throw UsageError("attention_pool: word vectors do not match mask length and context dimension");
  const std::size_t n = mask.size();
  AttentionResult<S> out{std::vector<S>(dim, S(0.0)), std::vector<S>(n, S(0.0))};
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < n; ++i)
    if (!mask_pads || mask[i]) active.push_back(i);
  if (active.empty()) return out;

  std::vector<S> row(dim);
  std::vector<S> scores;
  scores.reserve(active.size());
  double shift = -INFINITY;
  for (std::size_t i : active) {
    for (std::size_t k = 0; k < dim; ++k) row[k] = S(word_vectors[i * dim + k]);
    scores.push_back(ad::dot(std::span<const S>(row), context));
    shift = std::max(shift, ad::value_of(scores.back()));
  }
  std::vector<S> ex;
  ex.reserve(active.size());
  for (const S& s : scores) ex.push_back(ad::exp(s - S(shift)));
  const S total = ad::sum(std::span<const S>(ex));
  std::vector<S> w;
  w.reserve(active.size());
  for (std::size_t j = 0; j < active.size(); ++j) {
    w.push_back(ex[j] / total);
    out.weights[active[j]] = w.back();
  }
  std::vector<S> column(active.size());
  for (std::size_t k = 0; k < dim; ++k) {
    for (std::size_t j = 0; j < active.size(); ++j) column[j] = S(word_vectors[active[j] * dim + k]);
    out.pooled[k] = ad::dot(std::span<const S>(w), std::span<const S>(column));
  }
  return out;
}

/// Everything needed to turn a profile into h_u, minus the trained context.
struct ProfileEncoder {
  TokenizerConfig tokenizer;
  std::size_t max_words = 25;
  bool mask_pads = true;
  EmbeddingTable table;

  std::size_t dim() const { return table.dim(); }
};

/// A user's padded tokens resolved to stacked word vectors.
struct EncodedProfile {
  bool present = false;
  std::vector<std::string> tokens;
  std::vector<std::uint8_t> mask;
  std::vector<double> vectors;  // max_words x dim
};

EncodedProfile encode_profile_tokens(const ProfileEncoder& encoder, const std::string& text);

/// Pre-tokenized corpus indexed by user id (absent users have present = false).
std::vector<EncodedProfile> encode_corpus(const ProfileEncoder& encoder, const ProfileCorpus& corpus,
                                          std::size_t num_users);

template <class S>
std::vector<S> encode_user(const EncodedProfile& profile, std::span<const S> context, bool mask_pads = true) {
  if (!profile.present) return std::vector<S>(context.size(), S(0.0));
  return attention_pool<S>(profile.vectors, profile.mask, context, mask_pads).pooled;
}

/// h_u for one user straight from the corpus; zero vector when absent.
std::vector<double> encode_user(const ProfileCorpus& corpus, std::size_t user, const ProfileEncoder& encoder,
                                std::span<const double> context);

struct WordScore {
  std::string word;
  double mean_weight = 0.0;
  std::size_t occurrences = 0;
};

/// Words ranked by mean attention weight over their occurrences in the given
/// users' profiles; ties broken alphabetically. Returns at most k entries.
std::vector<WordScore> top_attention_words(const ProfileCorpus& corpus, std::span<const std::size_t> users,
                                           const ProfileEncoder& encoder, std::span<const double> context,
                                           std::size_t k);

}  // namespace sinn
