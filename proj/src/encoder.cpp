#include "sinn/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "sinn/io.hpp"
#include "sinn/rng.hpp"

namespace sinn {

std::vector<std::string> tokenize(const std::string& text, const TokenizerConfig& config) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && !config.stop_words.count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (unsigned char c : text) {
    const bool separator =
        std::isspace(c) || (config.strip_punctuation && c < 0x80 && !std::isalnum(c));
    if (separator) {
      flush();
      continue;
    }
    cur.push_back(config.lowercase && c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  flush();
  return out;
}

PaddedTokens tokenize_and_pad(const std::string& text, std::size_t max_words, const TokenizerConfig& config) {
  if (max_words < 1) throw UsageError("max_words must be at least 1");
  auto tokens = tokenize(text, config);
  if (tokens.size() > max_words) tokens.resize(max_words);
  PaddedTokens out;
  out.mask.assign(max_words, 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) out.mask[i] = 1;
  out.tokens = std::move(tokens);
  out.tokens.resize(max_words, kPadToken);
  return out;
}

std::set<std::string> load_stop_words(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || std::isspace(static_cast<unsigned char>(line.back()))))
      line.pop_back();
    std::size_t b = line.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    words.insert(line.substr(b));
  }
  return words;
}

namespace {

std::vector<double> random_unit_vector(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(dim);
  double norm = 0.0;
  for (double& x : v) {
    x = rng.normal();
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

void EmbeddingTable::add_row(std::span<const double> v) { vectors_.insert(vectors_.end(), v.begin(), v.end()); }

void EmbeddingTable::finish(std::uint64_t seed, std::size_t oov_buckets) {
  seed_ = seed;
  buckets_ = oov_buckets;
  oov_begin_ = rows();
  for (std::size_t b = 0; b < oov_buckets; ++b)
    add_row(random_unit_vector(dim_, mix_seed(seed, 0x00B0C0DEULL + b)));
}

EmbeddingTable EmbeddingTable::random(const std::vector<std::string>& vocabulary, std::size_t dim,
                                      std::uint64_t seed, std::size_t oov_buckets) {
  if (dim == 0) throw UsageError("embedding dimension must be positive");
  EmbeddingTable t;
  t.dim_ = dim;
  t.add_row(std::vector<double>(dim, 0.0));
  for (const auto& w : vocabulary) {
    if (w == kPadToken || t.index_.count(w)) continue;
    t.index_[w] = t.rows();
    t.words_.push_back(w);
    t.add_row(random_unit_vector(dim, mix_seed(seed, fnv1a(w))));
  }
  t.finish(seed, oov_buckets);
  return t;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::uint64_t seed, std::size_t oov_buckets) {
  std::istringstream in(read_text_file(path));
  EmbeddingTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> v;
    std::string num;
    while (fields >> num) {
      try {
        std::size_t pos = 0;
        v.push_back(std::stod(num, &pos));
        if (pos != num.size()) throw std::invalid_argument(num);
      } catch (const std::exception&) {
        throw ParseError(path.string() + ": bad number \"" + num + "\"", line_no);
      }
      if (!std::isfinite(v.back())) throw ParseError(path.string() + ": non-finite embedding value", line_no);
    }
    if (v.empty()) throw ParseError(path.string() + ": word without a vector", line_no);
    if (t.dim_ == 0) {
      t.dim_ = v.size();
      t.add_row(std::vector<double>(t.dim_, 0.0));
    }
    if (v.size() != t.dim_)
      throw ParseError(path.string() + ": expected " + std::to_string(t.dim_) + " values, got " +
                           std::to_string(v.size()),
                       line_no);
    if (word == kPadToken || t.index_.count(word)) continue;
    t.index_[word] = t.rows();
    t.words_.push_back(word);
    t.add_row(v);
  }
  if (t.dim_ == 0) throw ParseError(path.string() + ": no embeddings found");
  t.finish(seed, oov_buckets);
  return t;
}

std::size_t EmbeddingTable::id(const std::string& token) const {
  if (token == kPadToken) return pad_id();
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  if (buckets_ == 0) return pad_id();
  return oov_begin_ + fnv1a(token) % buckets_;
}

std::vector<std::string> build_vocabulary(const ProfileCorpus& corpus, const TokenizerConfig& config) {
  std::set<std::string> words;
  for (const auto& [id, text] : corpus)
    for (auto& w : tokenize(text, config)) words.insert(std::move(w));
  return {words.begin(), words.end()};
}

EncodedProfile encode_profile_tokens(const ProfileEncoder& encoder, const std::string& text) {
  auto padded = tokenize_and_pad(text, encoder.max_words, encoder.tokenizer);
  EncodedProfile out;
  out.present = true;
  const std::size_t dim = encoder.dim();
  out.vectors.reserve(encoder.max_words * dim);
  for (const auto& tok : padded.tokens) {
    auto row = encoder.table.row(encoder.table.id(tok));
    out.vectors.insert(out.vectors.end(), row.begin(), row.end());
  }
  out.tokens = std::move(padded.tokens);
  out.mask = std::move(padded.mask);
  return out;
}

std::vector<EncodedProfile> encode_corpus(const ProfileEncoder& encoder, const ProfileCorpus& corpus,
                                          std::size_t num_users) {
  std::vector<EncodedProfile> out(num_users);
  for (const auto& [id, text] : corpus) {
    if (id >= num_users) throw InputError("profile for user " + std::to_string(id) + " but only " +
                                          std::to_string(num_users) + " users");
    out[id] = encode_profile_tokens(encoder, text);
  }
  return out;
}

std::vector<double> encode_user(const ProfileCorpus& corpus, std::size_t user, const ProfileEncoder& encoder,
                                std::span<const double> context) {
  auto it = corpus.find(user);
  if (it == corpus.end()) return std::vector<double>(context.size(), 0.0);
  return encode_user<double>(encode_profile_tokens(encoder, it->second), context, encoder.mask_pads);
}

std::vector<WordScore> top_attention_words(const ProfileCorpus& corpus, std::span<const std::size_t> users,
                                           const ProfileEncoder& encoder, std::span<const double> context,
                                           std::size_t k) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (std::size_t u : users) {
    auto it = corpus.find(u);
    if (it == corpus.end()) continue;
    const auto profile = encode_profile_tokens(encoder, it->second);
    const auto att = attention_pool<double>(profile.vectors, profile.mask, context, encoder.mask_pads);
    for (std::size_t n = 0; n < profile.tokens.size(); ++n) {
      if (!profile.mask[n]) continue;
      auto& slot = acc[profile.tokens[n]];
      slot.first += att.weights[n];
      slot.second += 1;
    }
  }
  std::vector<WordScore> ranked;
  ranked.reserve(acc.size());
  for (const auto& [word, s] : acc) ranked.push_back({word, s.first / static_cast<double>(s.second), s.second});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const WordScore& a, const WordScore& b) { return a.mean_weight > b.mean_weight; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace sinn
