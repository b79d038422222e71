#pragma once

// Scalar reverse-mode automatic differentiation.
//
// A Tape is an append-only Wengert list. Every recorded node stores its value
// and the local partial derivative with respect to each parent, computed at
// record time, so the backward sweep is a single reverse pass of
// multiply-adds. Parents always precede children.
//
// Var is a lightweight handle. A Var without a tape is a constant: arithmetic
// on constants folds immediately and records nothing, which keeps the tape
// free of the zero entries of one-hot inputs and frozen parameters.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace sinn::ad {

enum class Op : std::uint8_t {
  Leaf,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Tanh,
  Exp,
  Log,
  Abs,
  Sigmoid,
  Softplus,
  Sum,
  Dot,
};

class Tape {
 public:
  using Index = std::uint32_t;

  Index leaf(double value);
  Index record(Op op, double value, std::span<const Index> parents, std::span<const double> partials);
  Index record(Op op, double value, Index a, double da);
  Index record(Op op, double value, Index a, double da, Index b, double db);

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double value(Index i) const { return values_[i]; }
  Op op(Index i) const { return ops_[i]; }
  std::span<const Index> parents(Index i) const;

  /// Adjoints d(output)/d(node) for every node, seeded with `seed` at
  /// `output`. Throws UsageError on an empty tape.
  std::vector<double> backward(Index output, double seed = 1.0) const;

  /// Drops all nodes but keeps capacity.
  void clear();
  void reserve(std::size_t nodes, std::size_t edges);

 private:
  std::vector<Op> ops_;
  std::vector<double> values_;
  std::vector<std::uint32_t> edge_begin_{0};
  std::vector<Index> parents_;
  std::vector<double> partials_;
};

class Var {
 public:
  Var() = default;
  Var(double constant) : value_(constant) {}  // NOLINT: implicit by design of the scalar API

  /// New independent variable (a leaf) on `tape`.
  static Var variable(Tape& tape, double value) { return Var(&tape, tape.leaf(value), value); }

  double value() const { return value_; }
  bool is_constant() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  Tape::Index index() const { return index_; }

 private:
  friend Var make_var(Tape*, Tape::Index, double);
  Var(Tape* tape, Tape::Index index, double value) : tape_(tape), index_(index), value_(value) {}

  Tape* tape_ = nullptr;
  Tape::Index index_ = 0;
  double value_ = 0.0;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

Var tanh(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
/// Subgradient 0 at the origin.
Var abs(const Var& x);
/// Logistic function 1 / (1 + exp(-x)).
Var sigmoid(const Var& x);
/// log(1 + exp(x)), evaluated stably.
Var softplus(const Var& x);
/// Passes `x` through when x >= floor, otherwise the constant floor.
Var max(const Var& x, double floor);

Var sum(std::span<const Var> xs);
Var dot(std::span<const Var> a, std::span<const Var> b);

// Same vocabulary for plain doubles so numeric code can be written once as a
// template over the scalar type.
inline double tanh(double x) { return std::tanh(x); }
inline double exp(double x) { return std::exp(x); }
inline double log(double x) { return std::log(x); }
inline double abs(double x) { return std::abs(x); }
inline double max(double x, double floor) { return x >= floor ? x : floor; }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
inline double sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}
inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

/// Inverse of softplus, for initializing reparameterized positives.
inline double softplus_inverse(double y) { return y > 30 ? y : std::log(std::expm1(y)); }

/// Read d(output)/d(v) from an adjoint vector; constants have zero gradient.
inline double gradient(const std::vector<double>& adjoints, const Var& v) {
  return v.is_constant() ? 0.0 : adjoints[v.index()];
}

/// Lift values onto the tape as leaves (or as constants when `trainable` is false).
std::vector<Var> variables(Tape& tape, std::span<const double> values, bool trainable = true);
std::vector<double> values(std::span<const Var> vars);
std::vector<double> gradients(const std::vector<double>& adjoints, std::span<const Var> vars);

}  // namespace sinn::ad
