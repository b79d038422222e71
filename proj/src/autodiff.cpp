#include "sinn/autodiff.hpp"

#include <algorithm>
#include <limits>

#include "sinn/errors.hpp"

namespace sinn::ad {

Tape::Index Tape::leaf(double value) {
  return record(Op::Leaf, value, std::span<const Index>(), std::span<const double>());
}

Tape::Index Tape::record(Op op, double value, std::span<const Index> parents, std::span<const double> partials) {
  if (values_.size() >= std::numeric_limits<Index>::max()) throw UsageError("tape exhausted the index space");
  const auto id = static_cast<Index>(values_.size());
  ops_.push_back(op);
  values_.push_back(value);
  parents_.insert(parents_.end(), parents.begin(), parents.end());
  partials_.insert(partials_.end(), partials.begin(), partials.end());
  edge_begin_.push_back(static_cast<std::uint32_t>(parents_.size()));
  return id;
}

Tape::Index Tape::record(Op op, double value, Index a, double da) {
  const Index p[1] = {a};
  const double d[1] = {da};
  return record(op, value, p, d);
}

Tape::Index Tape::record(Op op, double value, Index a, double da, Index b, double db) {
  const Index p[2] = {a, b};
  const double d[2] = {da, db};
  return record(op, value, p, d);
}

std::span<const Tape::Index> Tape::parents(Index i) const {
  return {parents_.data() + edge_begin_[i], parents_.data() + edge_begin_[i + 1]};
}

std::vector<double> Tape::backward(Index output, double seed) const {
  if (values_.empty()) throw UsageError("backward called on an empty tape");
  if (output >= values_.size()) throw UsageError("backward output index is not on this tape");
  std::vector<double> adj(values_.size(), 0.0);
  adj[output] = seed;
  for (std::size_t i = output + 1; i-- > 0;) {
    const double a = adj[i];
    if (a == 0.0) continue;
    for (std::uint32_t e = edge_begin_[i]; e < edge_begin_[i + 1]; ++e) adj[parents_[e]] += a * partials_[e];
  }
  return adj;
}

void Tape::clear() {
  ops_.clear();
  values_.clear();
  parents_.clear();
  partials_.clear();
  edge_begin_.assign(1, 0);
}

void Tape::reserve(std::size_t nodes, std::size_t edges) {
  ops_.reserve(nodes);
  values_.reserve(nodes);
  edge_begin_.reserve(nodes + 1);
  parents_.reserve(edges);
  partials_.reserve(edges);
}

Var make_var(Tape* tape, Tape::Index index, double value) { return Var(tape, index, value); }

namespace {

Tape* common_tape(const Var& a, const Var& b) {
  if (a.is_constant()) return b.tape();
  if (b.is_constant()) return a.tape();
  if (a.tape() != b.tape()) throw UsageError("operands live on different tapes");
  return a.tape();
}

Var unary(Op op, const Var& x, double value, double partial) {
  if (x.is_constant()) return Var(value);
  Tape* t = x.tape();
  return make_var(t, t->record(op, value, x.index(), partial), value);
}

Var binary(Op op, const Var& a, const Var& b, double value, double da, double db) {
  Tape* t = common_tape(a, b);
  if (!t) return Var(value);
  if (a.is_constant()) return make_var(t, t->record(op, value, b.index(), db), value);
  if (b.is_constant()) return make_var(t, t->record(op, value, a.index(), da), value);
  return make_var(t, t->record(op, value, a.index(), da, b.index(), db), value);
}

struct Scratch {
  std::vector<Tape::Index> parents;
  std::vector<double> partials;
  void reset() {
    parents.clear();
    partials.clear();
  }
  void add(const Var& v, double d) {
    if (v.is_constant() || d == 0.0) return;
    parents.push_back(v.index());
    partials.push_back(d);
  }
};

thread_local Scratch scratch;

}  // namespace

Var operator+(const Var& a, const Var& b) { return binary(Op::Add, a, b, a.value() + b.value(), 1.0, 1.0); }
Var operator-(const Var& a, const Var& b) { return binary(Op::Sub, a, b, a.value() - b.value(), 1.0, -1.0); }
Var operator*(const Var& a, const Var& b) {
  return binary(Op::Mul, a, b, a.value() * b.value(), b.value(), a.value());
}
Var operator/(const Var& a, const Var& b) {
  const double inv = 1.0 / b.value();
  const double q = a.value() * inv;
  return binary(Op::Div, a, b, q, inv, -q * inv);
}
Var operator-(const Var& a) { return unary(Op::Neg, a, -a.value(), -1.0); }

Var tanh(const Var& x) {
  const double y = std::tanh(x.value());
  return unary(Op::Tanh, x, y, 1.0 - y * y);
}
Var exp(const Var& x) {
  const double y = std::exp(x.value());
  return unary(Op::Exp, x, y, y);
}
Var log(const Var& x) { return unary(Op::Log, x, std::log(x.value()), 1.0 / x.value()); }
Var abs(const Var& x) {
  const double v = x.value();
  return unary(Op::Abs, x, std::abs(v), v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0));
}
Var sigmoid(const Var& x) {
  const double y = sigmoid(x.value());
  return unary(Op::Sigmoid, x, y, y * (1.0 - y));
}
Var softplus(const Var& x) { return unary(Op::Softplus, x, softplus(x.value()), sigmoid(x.value())); }
Var max(const Var& x, double floor) { return x.value() >= floor ? x : Var(floor); }

Var sum(std::span<const Var> xs) {
  scratch.reset();
  double s = 0.0;
  Tape* t = nullptr;
  for (const Var& x : xs) {
    s += x.value();
    if (!x.is_constant()) {
      if (t && t != x.tape()) throw UsageError("operands live on different tapes");
      t = x.tape();
    }
    scratch.add(x, 1.0);
  }
  if (!t) return Var(s);
  return make_var(t, t->record(Op::Sum, s, scratch.parents, scratch.partials), s);
}

Var dot(std::span<const Var> a, std::span<const Var> b) {
  if (a.size() != b.size()) throw UsageError("dot operands differ in length");
  scratch.reset();
  double s = 0.0;
  Tape* t = nullptr;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i].value() * b[i].value();
    for (const Var* v : {&a[i], &b[i]}) {
      if (v->is_constant()) continue;
      if (t && t != v->tape()) throw UsageError("operands live on different tapes");
      t = v->tape();
    }
    scratch.add(a[i], b[i].value());
    scratch.add(b[i], a[i].value());
  }
  if (!t || scratch.parents.empty()) return Var(s);
  return make_var(t, t->record(Op::Dot, s, scratch.parents, scratch.partials), s);
}

std::vector<Var> variables(Tape& tape, std::span<const double> vals, bool trainable) {
  std::vector<Var> out;
  out.reserve(vals.size());
  for (double v : vals) out.push_back(trainable ? Var::variable(tape, v) : Var(v));
  return out;
}

std::vector<double> values(std::span<const Var> vars) {
  std::vector<double> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.value());
  return out;
}

std::vector<double> gradients(const std::vector<double>& adjoints, std::span<const Var> vars) {
  std::vector<double> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(gradient(adjoints, v));
  return out;
}

}  // namespace sinn::ad
