#include "sinn/metrics.hpp"


#include <nlohmann/json.hpp>

#include "sinn/errors.hpp"

namespace sinn {

namespace {

using u128 = unsigned __int128;

u128 gcd128(u128 a, u128 b) {
  while (b) {
    const u128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Mean of fractions n_i / d_i, kept as an exact reduced fraction so the
// result is a single rounding of the true mean. Falls back to long double
// if the running denominator would overflow.
class FractionMean {
 public:
  void add(std::size_t n, std::size_t d) {
    ++count_;
    approx_ += d ? static_cast<long double>(n) / static_cast<long double>(d) : 0.0L;
    if (!exact_ || n == 0) return;
    const u128 g = gcd128(den_, d), scale = d / g;
    u128 num = 0, den = 0, part = 0;
    if (__builtin_mul_overflow(num_, scale, &num) || __builtin_mul_overflow(den_, scale, &den) ||
        __builtin_mul_overflow(static_cast<u128>(n), den_ / g, &part) || __builtin_add_overflow(num, part, &num)) {
      exact_ = false;
      return;
    }
    const u128 r = gcd128(num, den);
    num_ = num / r;
    den_ = den / r;
  }

  double value() const {
    if (count_ == 0) return 0.0;
    if (exact_) {
      u128 den = 0;
      if (!__builtin_mul_overflow(den_, static_cast<u128>(count_), &den)) {
        const u128 r = gcd128(num_, den), num = num_ / r;
        den /= r;
        constexpr u128 kExactDouble = u128(1) << 53;
        if (num < kExactDouble && den < kExactDouble) return static_cast<double>(num) / static_cast<double>(den);
      }
    }
    return static_cast<double>(approx_ / static_cast<long double>(count_));
  }

 private:
  u128 num_ = 0, den_ = 1;
  std::size_t count_ = 0;
  long double approx_ = 0.0L;
  bool exact_ = true;
};

}  // namespace

Metrics compute_metrics(std::span<const int> truth, std::span<const int> pred, int num_classes,
                        bool include_absent_classes) {
  if (truth.size() != pred.size())
    throw UsageError("compute_metrics: " + std::to_string(truth.size()) + " labels but " +
                     std::to_string(pred.size()) + " predictions");
  if (num_classes < 1) throw UsageError("compute_metrics: num_classes must be positive");
  const auto C = static_cast<std::size_t>(num_classes);
  Metrics m;
  m.confusion.assign(C, std::vector<std::size_t>(C, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= num_classes || pred[i] < 0 || pred[i] >= num_classes)
      throw UsageError("compute_metrics: label outside 0.." + std::to_string(num_classes - 1));
    m.confusion[truth[i]][pred[i]]++;
    correct += truth[i] == pred[i];
  }
  m.accuracy = truth.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(truth.size());
  m.per_class.resize(C);
  FractionMean macro;
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t tp = m.confusion[c][c], predicted = 0, actual = 0;
    for (std::size_t k = 0; k < C; ++k) {
      predicted += m.confusion[k][c];
      actual += m.confusion[c][k];
    }
    auto& pc = m.per_class[c];
    pc.support = actual;
    pc.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
    pc.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
    // harmonic mean of precision and recall, 2 tp / (2 tp + fp + fn)
    pc.f1 = tp ? static_cast<double>(2 * tp) / static_cast<double>(predicted + actual) : 0.0;
    if (actual > 0 || include_absent_classes) macro.add(2 * tp, predicted + actual);
  }
  m.macro_f1 = macro.value();
  return m;
}

std::string metrics_to_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["accuracy"] = m.accuracy;
  j["macro_f1"] = m.macro_f1;
  auto& classes = j["per_class"] = nlohmann::ordered_json::array();
  for (const auto& c : m.per_class)
    classes.push_back({{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  j["confusion"] = m.confusion;
  return j.dump(2) + "\n";
}

}  // namespace sinn
