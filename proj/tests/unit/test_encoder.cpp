#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sinn/encoder.hpp"
#include "sinn/errors.hpp"
#include "sinn/rng.hpp"

using namespace sinn;
using ad::Var;

namespace {

ProfileEncoder make_encoder(const ProfileCorpus& corpus, std::size_t dim = 8, std::size_t max_words = 25) {
  ProfileEncoder enc;
  enc.max_words = max_words;
  enc.table = EmbeddingTable::random(build_vocabulary(corpus), dim, 7);
  return enc;
}

}  // namespace

TEST_CASE("tokenize and pad") {
  auto p = tokenize_and_pad("Pro Life", 4);
  CHECK(p.tokens == std::vector<std::string>{"pro", "life", kPadToken, kPadToken});
  CHECK(p.mask == std::vector<std::uint8_t>{1, 1, 0, 0});
  p = tokenize_and_pad("", 3);
  CHECK(p.tokens == std::vector<std::string>{kPadToken, kPadToken, kPadToken});
  CHECK(p.mask == std::vector<std::uint8_t>{0, 0, 0});
  std::string thirty;
  for (int i = 0; i < 30; ++i) thirty += "w" + std::to_string(i) + " ";
  p = tokenize_and_pad(thirty, 25);
  CHECK(p.tokens.size() == 25);
  CHECK(p.tokens.front() == "w0");
  CHECK(p.tokens.back() == "w24");
  CHECK(std::count(p.mask.begin(), p.mask.end(), 1) == 25);
  CHECK(tokenize("Wife, mother... #MAGA! don't") == std::vector<std::string>{"wife", "mother", "maga", "don", "t"});
  TokenizerConfig keep;
  keep.strip_punctuation = false;
  keep.lowercase = false;
  CHECK(tokenize("Hi, You", keep) == std::vector<std::string>{"Hi,", "You"});
  TokenizerConfig stop;
  stop.stop_words = {"the", "of"};
  CHECK(tokenize("The voice of the people", stop) == std::vector<std::string>{"voice", "people"});
  CHECK_THROWS_AS(tokenize_and_pad("x", 0), UsageError);
}

TEST_CASE("embedding table") {
  auto t = EmbeddingTable::random({"b", "a", "c"}, 16, 3);
  CHECK(t.rows() == 1 + 3 + 64);
  for (double x : t.row(t.pad_id())) CHECK(x == 0.0);
  for (std::size_t r = 1; r < t.rows(); ++r) {
    double n = 0.0;
    for (double x : t.row(r)) n += x * x;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-12));
  }
  auto t2 = EmbeddingTable::random({"c", "a"}, 16, 3);
  auto ra = t.row(t.id("a")), ra2 = t2.row(t2.id("a"));
  CHECK(std::equal(ra.begin(), ra.end(), ra2.begin()));
  CHECK(t.id(kPadToken) == 0);
  CHECK(t.id("zebra") >= 4);
  CHECK(t.id("zebra") == t.id("zebra"));
}

TEST_CASE("embedding loader") {
  auto dir = std::filesystem::temp_directory_path() / "sinn_test_encoder";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "vec.txt");
    out << "pro 1 0 0\nlife 0 1 0.5\n";
  }
  auto t = EmbeddingTable::load(dir / "vec.txt");
  CHECK(t.dim() == 3);
  auto r = t.row(t.id("life"));
  CHECK(r[2] == 0.5);
  {
    std::ofstream out(dir / "bad.txt");
    out << "pro 1 0 0\nlife 0 1\n";
  }
  try {
    EmbeddingTable::load(dir / "bad.txt");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  {
    std::ofstream out(dir / "stop.txt");
    out << "the\n  of \n\nand\n";
  }
  CHECK(load_stop_words(dir / "stop.txt") == std::set<std::string>{"the", "of", "and"});
}

TEST_CASE("attention pooling by hand") {
  // Two one-dimensional words with scores (1, 0) under E = [1].
  std::vector<double> words{1.0, 0.0};
  std::vector<std::uint8_t> mask{1, 1};
  std::vector<double> E{1.0};
  auto r = attention_pool<double>(words, mask, E);
  CHECK(r.weights[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1)));
  CHECK(r.weights[1] == doctest::Approx(1.0 / (std::exp(1.0) + 1)));
  CHECK(r.weights[0] == doctest::Approx(0.7311).epsilon(1e-4));

  std::vector<double> same{0.3, -0.2, 0.3, -0.2, 0.3, -0.2};
  std::vector<std::uint8_t> three{1, 1, 1};
  std::vector<double> E2{5.0, -3.0};
  r = attention_pool<double>(same, three, E2);
  CHECK(r.pooled[0] == doctest::Approx(0.3));
  CHECK(r.pooled[1] == doctest::Approx(-0.2));

  std::vector<double> pads(6, 0.0);
  std::vector<std::uint8_t> none{0, 0, 0};
  r = attention_pool<double>(pads, none, E2);
  CHECK(r.pooled == std::vector<double>{0.0, 0.0});
  // Unmasked, pads share the softmax with real words.
  std::vector<double> mixed{1.0, 0.0};
  std::vector<std::uint8_t> half{1, 0};
  auto masked = attention_pool<double>(mixed, half, E, true);
  auto open = attention_pool<double>(mixed, half, E, false);
  CHECK(masked.pooled[0] == doctest::Approx(1.0));
  CHECK(open.pooled[0] == doctest::Approx(std::exp(1.0) / (std::exp(1.0) + 1)));
}

TEST_CASE("attention weights lie on the simplex and pool stays in the hull") {
  Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng.index(10), b = 1 + rng.index(6);
    std::vector<double> w(n * b), E(b);
    std::vector<std::uint8_t> mask(n);
    for (double& x : w) x = rng.uniform(-1, 1);
    for (double& x : E) x = rng.uniform(-3, 3);
    for (auto& m : mask) m = rng.uniform() < 0.7;
    auto r = attention_pool<double>(w, mask, E);
    double total = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(r.weights[i] >= 0.0);
      if (!mask[i]) CHECK(r.weights[i] == 0.0);
      total += r.weights[i];
      any = any || mask[i];
    }
    if (!any) continue;
    CHECK(std::abs(total - 1.0) < 1e-12);
    for (std::size_t k = 0; k < b; ++k) {
      double lo = INFINITY, hi = -INFINITY;
      for (std::size_t i = 0; i < n; ++i)
        if (mask[i]) {
          lo = std::min(lo, w[i * b + k]);
          hi = std::max(hi, w[i * b + k]);
        }
      CHECK(r.pooled[k] >= lo - 1e-12);
      CHECK(r.pooled[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("permutation equivariance") {
  std::vector<double> w{0.1, 0.9, -0.5, 0.4, 0.7, -0.2}, E{0.8, -1.1};
  std::vector<double> swapped{-0.5, 0.4, 0.1, 0.9, 0.7, -0.2};
  std::vector<std::uint8_t> mask{1, 1, 1};
  auto a = attention_pool<double>(w, mask, E), b = attention_pool<double>(swapped, mask, E);
  CHECK(a.weights[0] == doctest::Approx(b.weights[1]));
  CHECK(a.weights[1] == doctest::Approx(b.weights[0]));
  CHECK(a.pooled[0] == doctest::Approx(b.pooled[0]).epsilon(1e-14));
  CHECK(a.pooled[1] == doctest::Approx(b.pooled[1]).epsilon(1e-14));
}

TEST_CASE("context gradient matches finite differences") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 2 + rng.index(6), b = 1 + rng.index(5);
    std::vector<double> w(n * b), E(b), target(b);
    std::vector<std::uint8_t> mask(n, 1);
    mask[rng.index(n)] = 0;
    for (double& x : w) x = rng.uniform(-1, 1);
    for (double& x : E) x = rng.uniform(-2, 2);
    for (double& x : target) x = rng.uniform(-1, 1);
    auto loss = [&](std::span<const double> e) {
      auto h = attention_pool<double>(w, mask, e).pooled;
      double s = 0.0;
      for (std::size_t k = 0; k < b; ++k) s += (h[k] - target[k]) * (h[k] - target[k]);
      return s;
    };
    ad::Tape tape;
    auto Ev = ad::variables(tape, E);
    auto h = attention_pool<Var>(w, mask, std::span<const Var>(Ev)).pooled;
    Var s(0.0);
    for (std::size_t k = 0; k < b; ++k) s += (h[k] - Var(target[k])) * (h[k] - Var(target[k]));
    auto adj = tape.backward(s.index());
    for (std::size_t k = 0; k < b; ++k) {
      auto ep = E, em = E;
      ep[k] += 1e-5;
      em[k] -= 1e-5;
      const double fd = (loss(ep) - loss(em)) / 2e-5, g = ad::gradient(adj, Ev[k]);
      if (std::abs(g) < 1e-6)
        CHECK(std::abs(g - fd) < 1e-8);
      else
        CHECK(std::abs(g - fd) / std::abs(g) < 1e-4);
    }
  }
}

TEST_CASE("encode user") {
  ProfileCorpus corpus{{0, "Patriot"}, {1, "teacher and mom"}};
  auto enc = make_encoder(corpus);
  std::vector<double> E(8, 0.3);
  auto absent = encode_user(corpus, 5, enc, E);
  CHECK(absent == std::vector<double>(8, 0.0));
  auto single = encode_user(corpus, 0, enc, E);
  auto row = enc.table.row(enc.table.id("patriot"));
  for (std::size_t k = 0; k < 8; ++k) CHECK(single[k] == doctest::Approx(row[k]).epsilon(1e-14));
  CHECK(encode_user(corpus, 1, enc, E) == encode_user(corpus, 1, enc, E));
  auto encoded = encode_corpus(enc, corpus, 3);
  CHECK(encoded[0].present);
  CHECK_FALSE(encoded[2].present);
  CHECK_THROWS_AS(encode_corpus(enc, corpus, 1), InputError);
}

TEST_CASE("top attention words") {
  // A single-word profile always gives that word weight 1.
  ProfileCorpus corpus{{0, "maga"}, {1, "maga"}, {2, "god family country"}};
  auto enc = make_encoder(corpus);
  std::vector<std::size_t> users{0, 1, 2};
  std::vector<double> E(8, 0.0);
  auto ranked = top_attention_words(corpus, users, enc, E, 10);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].word == "maga");
  CHECK(ranked[0].mean_weight == 1.0);
  CHECK(ranked[0].occurrences == 2);
  CHECK(top_attention_words(corpus, users, enc, E, 2).size() == 2);

  ProfileCorpus flat{{0, "a b c"}, {1, "c d e"}, {2, "b e f"}};
  auto enc2 = make_encoder(flat);
  ranked = top_attention_words(flat, users, enc2, E, 100);
  CHECK(ranked.size() == 6);
  for (const auto& w : ranked) CHECK(std::abs(w.mean_weight - 1.0 / 3.0) < 1e-12);
  CHECK(ranked.front().word == "a");
}
