#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sinn {

/// One labeled observation: user `user` posted opinion class `label` at `time`.
struct Post {
  std::size_t user = 0;
  double time = 0.0;
  int label = 0;

  friend bool operator==(const Post&, const Post&) = default;
};

/// Time-ordered post sequence over users 0..num_users-1 and classes
/// 0..num_classes-1, observed on [0, horizon].
class OpinionDataset {
 public:
  OpinionDataset() = default;

  /// Validates and stable-sorts by time. Throws InputError on bad ids/labels.
  OpinionDataset(std::vector<Post> posts, std::size_t num_users, int num_classes, double horizon);

  const std::vector<Post>& posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }
  std::size_t num_users() const { return num_users_; }
  int num_classes() const { return num_classes_; }
  double horizon() const { return horizon_; }

  /// Same users, classes and horizon, different posts (which must be sorted).
  OpinionDataset with_posts(std::vector<Post> posts) const;

  std::vector<int> labels() const;

  friend bool operator==(const OpinionDataset&, const OpinionDataset&) = default;

 private:
  std::vector<Post> posts_;
  std::size_t num_users_ = 0;
  int num_classes_ = 0;
  double horizon_ = 0.0;
};

/// User id -> free-text profile description.
using ProfileCorpus = std::map<std::size_t, std::string>;

struct SplitSpec {
  double train_frac = 0.5;
  double val_frac = 0.2;
  double test_frac = 0.3;

  void validate() const;
};

struct DatasetSplit {
  OpinionDataset train;
  OpinionDataset val;
  OpinionDataset test;
};

/// Equal-width bins over [-1, 1]; left-closed, the last bin also closed at +1.
/// Values outside [-1, 1] are clamped first. For C = 5 the edges are
/// -0.6, -0.2, 0.2, 0.6.
int discretize_opinion(double x, int num_classes = 5);

/// Bin midpoint: -1 + (2 label + 1) / C.
double label_to_continuous(int label, int num_classes);

/// First floor(n train_frac) posts to train, next floor(n val_frac) to val,
/// the rest to test.
DatasetSplit chronological_split(const OpinionDataset& dataset, const SplitSpec& spec);

/// JSON Lines reader. An optional first line {"meta": {...}} fixes U, C and
/// the horizon; otherwise they are inferred. If `resorted` is given it is set
/// when records were out of time order and had to be sorted.
OpinionDataset load_dataset(const std::filesystem::path& path, bool* resorted = nullptr);
OpinionDataset parse_dataset(const std::string& text, bool* resorted = nullptr);
void save_dataset(const OpinionDataset& dataset, const std::filesystem::path& path);
std::string format_dataset(const OpinionDataset& dataset);

ProfileCorpus load_profiles(const std::filesystem::path& path);
void save_profiles(const ProfileCorpus& corpus, const std::filesystem::path& path);

}  // namespace sinn
