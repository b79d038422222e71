#include "sinn/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sinn/errors.hpp"
#include "sinn/io.hpp"

namespace sinn {

using nlohmann::json;

OpinionDataset::OpinionDataset(std::vector<Post> posts, std::size_t num_users, int num_classes,
                               double horizon)
    : posts_(std::move(posts)), num_users_(num_users), num_classes_(num_classes), horizon_(horizon) {
  if (num_classes_ < 2) throw InputError("num_classes must be at least 2");
  if (!std::isfinite(horizon_) || horizon_ < 0.0) throw InputError("horizon must be finite and >= 0");
  for (const Post& p : posts_) {
    if (p.user >= num_users_)
      throw InputError("user id " + std::to_string(p.user) + " >= num_users " + std::to_string(num_users_));
    if (p.label < 0 || p.label >= num_classes_)
      throw InputError("label " + std::to_string(p.label) + " outside 0.." + std::to_string(num_classes_ - 1));
    if (!std::isfinite(p.time) || p.time < 0.0) throw InputError("post time must be finite and >= 0");
  }
  std::stable_sort(posts_.begin(), posts_.end(), [](const Post& a, const Post& b) { return a.time < b.time; });
}

OpinionDataset OpinionDataset::with_posts(std::vector<Post> posts) const {
  return OpinionDataset(std::move(posts), num_users_, num_classes_, horizon_);
}

std::vector<int> OpinionDataset::labels() const {
  std::vector<int> out;
  out.reserve(posts_.size());
  for (const Post& p : posts_) out.push_back(p.label);
  return out;
}

void SplitSpec::validate() const {
  for (double f : {train_frac, val_frac, test_frac})
    if (!(f >= 0.0 && f <= 1.0)) throw InputError("split fractions must lie in [0, 1]");
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9) throw InputError("split fractions must sum to 1");
}

int discretize_opinion(double x, int num_classes) {
  if (num_classes < 2) throw InputError("num_classes must be at least 2");
  if (std::isnan(x)) throw InputError("cannot discretize NaN");
  x = std::clamp(x, -1.0, 1.0);
  int label = 0;
  for (int k = 1; k < num_classes; ++k) {
    // (2k - C) / C rounds to the nearest double of the exact edge.
    const double edge = static_cast<double>(2 * k - num_classes) / num_classes;
    if (x >= edge) label = k;
  }
  return label;
}

double label_to_continuous(int label, int num_classes) {
  if (num_classes < 2) throw InputError("num_classes must be at least 2");
  if (label < 0 || label >= num_classes)
    throw InputError("label " + std::to_string(label) + " outside 0.." + std::to_string(num_classes - 1));
  return -1.0 + (2.0 * label + 1.0) / num_classes;
}

DatasetSplit chronological_split(const OpinionDataset& dataset, const SplitSpec& spec) {
  spec.validate();
  if (dataset.empty()) throw InputError("cannot split an empty dataset");
  const auto& posts = dataset.posts();
  const std::size_t n = posts.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::floor(n * spec.train_frac + 1e-9)));
  const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::floor(n * spec.val_frac + 1e-9)));
  auto slice = [&](std::size_t a, std::size_t b) {
    return dataset.with_posts(std::vector<Post>(posts.begin() + a, posts.begin() + b));
  };
  return {slice(0, n_train), slice(n_train, n_train + n_val), slice(n_train + n_val, n)};
}

namespace {

long long require_integer(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) throw ParseError(std::string("missing field \"") + key + "\"", line);
  if (!it->is_number_integer()) throw ParseError(std::string("field \"") + key + "\" must be an integer", line);
  return it->get<long long>();
}

}  // namespace

OpinionDataset parse_dataset(const std::string& text, bool* resorted) {
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  bool have_meta = false;
  std::size_t meta_users = 0;
  int meta_classes = 0;
  double meta_horizon = 0.0;
  struct Rec {
    Post post;
    std::size_t line;
  };
  std::vector<Rec> recs;

  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!rec.is_object()) throw ParseError("record must be a JSON object", line_no);
    if (rec.contains("meta")) {
      if (have_meta || !recs.empty()) throw ParseError("meta header must be the first record", line_no);
      const json& m = rec["meta"];
      try {
        meta_users = m.at("num_users").get<std::size_t>();
        meta_classes = m.at("num_classes").get<int>();
        meta_horizon = m.at("horizon").get<double>();
      } catch (const json::exception& e) {
        throw ParseError(std::string("bad meta header: ") + e.what(), line_no);
      }
      have_meta = true;
      continue;
    }
    const long long user = require_integer(rec, "user", line_no);
    const long long label = require_integer(rec, "label", line_no);
    auto t = rec.find("time");
    if (t == rec.end() || !t->is_number()) throw ParseError("field \"time\" must be a number", line_no);
    const double time = t->get<double>();
    if (user < 0) throw ParseError("negative user id", line_no);
    if (label < 0) throw ParseError("negative label", line_no);
    if (!std::isfinite(time) || time < 0.0) throw ParseError("time must be finite and non-negative", line_no);
    if (have_meta && static_cast<std::size_t>(user) >= meta_users)
      throw ParseError("user " + std::to_string(user) + " >= num_users " + std::to_string(meta_users), line_no);
    if (have_meta && label >= meta_classes)
      throw ParseError("label " + std::to_string(label) + " >= num_classes " + std::to_string(meta_classes),
                       line_no);
    recs.push_back({Post{static_cast<std::size_t>(user), time, static_cast<int>(label)}, line_no});
  }

  std::vector<Post> posts;
  posts.reserve(recs.size());
  bool sorted = true;
  std::size_t max_user = 0;
  int max_label = 0;
  double max_time = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const Post& p = recs[i].post;
    if (i > 0 && p.time < recs[i - 1].post.time) sorted = false;
    max_user = std::max(max_user, p.user);
    max_label = std::max(max_label, p.label);
    max_time = std::max(max_time, p.time);
    posts.push_back(p);
  }
  if (resorted) *resorted = !sorted;
  if (have_meta) return OpinionDataset(std::move(posts), meta_users, meta_classes, meta_horizon);
  if (posts.empty()) throw ParseError("dataset has no records and no meta header");
  return OpinionDataset(std::move(posts), max_user + 1, std::max(2, max_label + 1), max_time);
}

OpinionDataset load_dataset(const std::filesystem::path& path, bool* resorted) {
  return parse_dataset(read_text_file(path), resorted);
}

std::string format_dataset(const OpinionDataset& dataset) {
  std::string out;
  json meta = {{"meta",
                {{"num_users", dataset.num_users()},
                 {"num_classes", dataset.num_classes()},
                 {"horizon", dataset.horizon()}}}};
  out += meta.dump();
  out += '\n';
  for (const Post& p : dataset.posts()) {
    json rec = {{"user", p.user}, {"time", p.time}, {"label", p.label}};
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const OpinionDataset& dataset, const std::filesystem::path& path) {
  write_text_file(path, format_dataset(dataset));
}

ProfileCorpus load_profiles(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ParseError(path.string() + ": profile file must be a JSON object");
  ProfileCorpus corpus;
  for (auto& [key, value] : doc.items()) {
    std::size_t pos = 0;
    unsigned long long id = 0;
    try {
      id = std::stoull(key, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != key.size() || key.empty()) throw ParseError(path.string() + ": profile key \"" + key + "\" is not a user id");
    if (!value.is_string()) throw ParseError(path.string() + ": profile for user " + key + " must be a string");
    corpus[static_cast<std::size_t>(id)] = value.get<std::string>();
  }
  return corpus;
}

void save_profiles(const ProfileCorpus& corpus, const std::filesystem::path& path) {
  json doc = json::object();
  for (const auto& [id, text] : corpus) doc[std::to_string(id)] = text;
  write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace sinn
