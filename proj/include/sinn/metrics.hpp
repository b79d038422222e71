#pragma once

#include <span>
#include <string>
#include <vector>

namespace sinn {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassMetrics> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [true][pred]
};

/// Precision, recall or F1 with a zero denominator are 0. By default the
/// macro mean runs over classes that occur in `truth`; with
/// include_absent_classes every class 0..C-1 counts.
Metrics compute_metrics(std::span<const int> truth, std::span<const int> pred, int num_classes,
                        bool include_absent_classes = false);

/// JSON object with accuracy, macro_f1, per_class and confusion.
std::string metrics_to_json(const Metrics& m);

}  // namespace sinn
