#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sinn/data.hpp"
#include "sinn/errors.hpp"
#include "sinn/rng.hpp"

using namespace sinn;

namespace {

OpinionDataset random_dataset(Rng& rng, std::size_t n) {
  const std::size_t users = 1 + rng.index(8);
  const int classes = 2 + static_cast<int>(rng.index(4));
  std::vector<Post> posts;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rng.uniform() < 0.6) t += rng.uniform(0.0, 3.0);
    posts.push_back({rng.index(users), t, static_cast<int>(rng.index(classes))});
  }
  return OpinionDataset(posts, users, classes, t + 1.0);
}

std::filesystem::path temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "sinn_test_data";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("discretize opinion bins") {
  CHECK(discretize_opinion(0.7) == 4);
  CHECK(discretize_opinion(-1.0) == 0);
  CHECK(discretize_opinion(0.0) == 2);
  CHECK(discretize_opinion(1.0) == 4);
  CHECK(discretize_opinion(-0.6) == 1);
  CHECK(discretize_opinion(-0.2) == 2);
  CHECK(discretize_opinion(0.2) == 3);
  CHECK(discretize_opinion(0.6) == 4);
  CHECK(discretize_opinion(0.5999999) == 3);
  CHECK(discretize_opinion(3.0) == 4);
  CHECK(discretize_opinion(-7.0) == 0);
  CHECK(discretize_opinion(0.1, 2) == 1);
  CHECK(discretize_opinion(-0.1, 2) == 0);
}

TEST_CASE("label to continuous") {
  CHECK(label_to_continuous(2, 5) == doctest::Approx(0.0));
  CHECK(label_to_continuous(4, 5) == doctest::Approx(0.8));
  CHECK(label_to_continuous(0, 2) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(label_to_continuous(5, 5), InputError);
  CHECK_THROWS_AS(label_to_continuous(-1, 5), InputError);
  for (int c : {2, 3, 4, 5, 7})
    for (int l = 0; l < c; ++l) CHECK(discretize_opinion(label_to_continuous(l, c), c) == l);
}

TEST_CASE("chronological split sizes") {
  std::vector<Post> posts;
  for (int i = 0; i < 10; ++i) posts.push_back({0, double(i), 0});
  OpinionDataset d(posts, 1, 5, 10);
  auto s = chronological_split(d, {0.5, 0.2, 0.3});
  CHECK(s.train.size() == 5);
  CHECK(s.val.size() == 2);
  CHECK(s.test.size() == 3);
  s = chronological_split(d, {0.7, 0.1, 0.2});
  CHECK(s.train.size() == 7);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 2);
  OpinionDataset one({{0, 0.0, 1}}, 1, 5, 0);
  s = chronological_split(one, {1.0, 0.0, 0.0});
  CHECK(s.train.size() == 1);
  CHECK(s.val.size() == 0);
  CHECK(s.test.size() == 0);
  CHECK_THROWS_AS(chronological_split(OpinionDataset({}, 1, 5, 0), {0.5, 0.2, 0.3}), InputError);
  CHECK_THROWS_AS(chronological_split(d, {0.5, 0.2, 0.2}), InputError);
}

TEST_CASE("chronological split partitions random datasets") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    auto d = random_dataset(rng, 1 + rng.index(60));
    auto s = chronological_split(d, {0.5, 0.2, 0.3});
    std::vector<Post> joined = s.train.posts();
    joined.insert(joined.end(), s.val.posts().begin(), s.val.posts().end());
    joined.insert(joined.end(), s.test.posts().begin(), s.test.posts().end());
    REQUIRE(joined == d.posts());
  }
}

TEST_CASE("dataset constructor validates and sorts") {
  CHECK_THROWS_AS(OpinionDataset({{3, 0.0, 0}}, 2, 5, 1), InputError);
  CHECK_THROWS_AS(OpinionDataset({{0, 0.0, 5}}, 2, 5, 1), InputError);
  CHECK_THROWS_AS(OpinionDataset({{0, -1.0, 0}}, 2, 5, 1), InputError);
  OpinionDataset d({{0, 2.0, 1}, {1, 1.0, 2}, {0, 1.0, 3}}, 2, 5, 3);
  CHECK(d.posts()[0] == Post{1, 1.0, 2});
  CHECK(d.posts()[1] == Post{0, 1.0, 3});
  CHECK(d.posts()[2] == Post{0, 2.0, 1});
}

TEST_CASE("parse dataset records") {
  bool resorted = true;
  auto d = parse_dataset(
      "{\"user\": 0, \"time\": 0.0, \"label\": 1}\n"
      "{\"user\": 2, \"time\": 1.5, \"label\": 3}\n"
      "{\"user\": 1, \"time\": 2.0, \"label\": 0}\n",
      &resorted);
  CHECK(d.size() == 3);
  CHECK_FALSE(resorted);
  CHECK(d.num_users() == 3);
  CHECK(d.num_classes() == 4);
  CHECK(d.horizon() == 2.0);

  d = parse_dataset(
      "{\"meta\": {\"num_users\": 5, \"num_classes\": 5, \"horizon\": 9}}\n"
      "{\"user\": 0, \"time\": 3.0, \"label\": 1}\n"
      "\n"
      "{\"user\": 2, \"time\": 1.0, \"label\": 3}\n",
      &resorted);
  CHECK(resorted);
  CHECK(d.num_users() == 5);
  CHECK(d.horizon() == 9.0);
  CHECK(d.posts().front().time == 1.0);
}

TEST_CASE("parse errors name the line") {
  auto message = [](const std::string& text) {
    try {
      parse_dataset(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  const std::string meta = "{\"meta\": {\"num_users\": 2, \"num_classes\": 5, \"horizon\": 9}}\n";
  CHECK(message(meta + "{\"user\": 0, \"time\": 0, \"label\": 1}\n{\"user\": 0, \"time\": 1, \"label\": 5}\n")
            .find("line 3") != std::string::npos);
  CHECK(message("{\"user\": 0, \"time\": 0 \n").find("line 1") != std::string::npos);
  CHECK(message("{\"user\": 0, \"label\": 1}\n").find("line 1") != std::string::npos);
  CHECK(message(meta + "{\"user\": 4, \"time\": 0, \"label\": 1}\n").find("line 2") != std::string::npos);
  CHECK(message("{\"user\": 0, \"time\": -2, \"label\": 1}\n").find("line 1") != std::string::npos);
}

TEST_CASE("save and load round trip") {
  Rng rng(5);
  const auto path = temp_path("roundtrip.jsonl");
  for (int rep = 0; rep < 50; ++rep) {
    auto d = random_dataset(rng, rng.index(40));
    save_dataset(d, path);
    bool resorted = true;
    CHECK(load_dataset(path, &resorted) == d);
    CHECK_FALSE(resorted);
  }
  CHECK_THROWS_AS(load_dataset(temp_path("missing.jsonl")), IoError);
}

TEST_CASE("profiles round trip") {
  ProfileCorpus corpus{{0, "Pro life, family first"}, {3, ""}, {7, "caf\xc3\xa9 owner"}};
  const auto path = temp_path("profiles.json");
  save_profiles(corpus, path);
  CHECK(load_profiles(path) == corpus);
  {
    std::ofstream out(path);
    out << "{\"x\": \"bad key\"}";
  }
  CHECK_THROWS_AS(load_profiles(path), ParseError);
}
