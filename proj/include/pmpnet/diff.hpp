#pragma once

// Gradients of scalar losses with respect to flat parameter vectors.
//
// Three pieces live here:
//   * ParamLayout / ParamVector: the flat vector Φ and its named blocks.
//   * Dual<N>: fixed-width forward-mode numbers, used for small inner
//     Jacobians (e.g. residual energy with respect to the five trial values).
//   * Tape / Var: reverse accumulation over a recorded scalar graph. Any
//     loss written as a template over its scalar type can be differentiated
//     through it with grad_of.
//
// Objectives that ship a hand-derived gradient (the training losses) model
// the `Objective` concept and are checked against the tape and against
// central differences by check_grad.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmpnet/errors.hpp"

namespace pmpnet::diff {

// One named slice of the flat parameter vector, stored row-major.
struct ParamBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
  bool operator==(const ParamBlock&) const = default;
};

class ParamLayout {
 public:
  ParamLayout() = default;

  std::size_t add(std::string name, std::size_t rows, std::size_t cols) {
    blocks_.push_back({std::move(name), rows, cols, total_});
    total_ += rows * cols;
    return blocks_.size() - 1;
  }

  std::size_t size() const { return total_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }
  const ParamBlock& block(std::size_t i) const { return blocks_.at(i); }

  const ParamBlock& find(const std::string& name) const {
    for (const auto& b : blocks_)
      if (b.name == name) return b;
    throw InputError("no parameter block named '" + name + "'");
  }

  // Name of the block containing flat index i.
  const std::string& block_of(std::size_t i) const {
    for (const auto& b : blocks_)
      if (i >= b.offset && i < b.offset + b.size()) return b.name;
    throw InputError("parameter index " + std::to_string(i) + " outside layout");
  }

  template <class T>
  std::span<T> slice(std::span<T> flat, std::size_t block_index) const {
    const auto& b = blocks_.at(block_index);
    return flat.subspan(b.offset, b.size());
  }

  bool operator==(const ParamLayout&) const = default;

 private:
  std::vector<ParamBlock> blocks_;
  std::size_t total_ = 0;
};

// Φ plus the layout that names its pieces.
struct ParamVector {
  std::vector<double> values;
  ParamLayout layout;

  ParamVector() = default;
  explicit ParamVector(ParamLayout l) : values(l.size(), 0.0), layout(std::move(l)) {}
  ParamVector(std::vector<double> v, ParamLayout l) : values(std::move(v)), layout(std::move(l)) {
    if (values.size() != layout.size())
      throw InputError("parameter count " + std::to_string(values.size()) +
                       " does not match layout size " + std::to_string(layout.size()));
  }

  std::size_t size() const { return values.size(); }
  std::span<const double> view() const { return values; }

  std::vector<std::vector<double>> unpack() const {
    std::vector<std::vector<double>> out;
    for (const auto& b : layout.blocks())
      out.emplace_back(values.begin() + static_cast<std::ptrdiff_t>(b.offset),
                       values.begin() + static_cast<std::ptrdiff_t>(b.offset + b.size()));
    return out;
  }

  static ParamVector pack(const std::vector<std::vector<double>>& blocks, ParamLayout layout) {
    if (blocks.size() != layout.blocks().size())
      throw InputError("block count does not match layout");
    std::vector<double> flat;
    flat.reserve(layout.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (blocks[i].size() != layout.block(i).size())
        throw InputError("block '" + layout.block(i).name + "' has wrong length");
      flat.insert(flat.end(), blocks[i].begin(), blocks[i].end());
    }
    return ParamVector(std::move(flat), std::move(layout));
  }
};

struct GradResult {
  double loss = 0.0;
  std::vector<double> grad;
};

// ---------------------------------------------------------------------------
// Forward mode
// ---------------------------------------------------------------------------

template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit constant promotion

  static Dual seed(double value, std::size_t k) {
    Dual out(value);
    out.d[k] = 1.0;
    return out;
  }

  Dual operator-() const {
    Dual r(-v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = -d[i];
    return r;
  }
  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    for (std::size_t i = 0; i < N; ++i) d[i] = (d[i] - v * inv * o.d[i]) * inv;
    v *= inv;
    return *this;
  }
  friend Dual operator+(Dual a, const Dual& b) { return a += b; }
  friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
  friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
  friend Dual operator/(Dual a, const Dual& b) { return a /= b; }
  friend Dual operator+(Dual a, double b) { a.v += b; return a; }
  friend Dual operator+(double a, Dual b) { b.v += a; return b; }
  friend Dual operator-(Dual a, double b) { a.v -= b; return a; }
  friend Dual operator-(double a, const Dual& b) { return Dual(a) - b; }
  friend Dual operator*(Dual a, double b) {
    a.v *= b;
    for (auto& x : a.d) x *= b;
    return a;
  }
  friend Dual operator*(double a, Dual b) { return b * a; }
  friend Dual operator/(Dual a, double b) { return a * (1.0 / b); }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }

  friend Dual exp(const Dual& a) {
    const double e = std::exp(a.v);
    Dual r(e);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = e * a.d[i];
    return r;
  }
  friend Dual sin(const Dual& a) {
    Dual r(std::sin(a.v));
    const double c = std::cos(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = c * a.d[i];
    return r;
  }
  friend Dual cos(const Dual& a) {
    Dual r(std::cos(a.v));
    const double s = -std::sin(a.v);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
    return r;
  }
};

// ---------------------------------------------------------------------------
// Reverse mode
// ---------------------------------------------------------------------------

class Tape;

// A scalar recorded on a Tape. A Var with no tape is a constant.
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: implicit constant promotion

  double value() const { return value_; }
  int index() const { return index_; }
  Tape* tape() const { return tape_; }

  friend Var operator+(const Var& a, const Var& b);
  friend Var operator-(const Var& a, const Var& b);
  friend Var operator*(const Var& a, const Var& b);
  friend Var operator/(const Var& a, const Var& b);
  friend Var operator-(const Var& a);
  friend Var exp(const Var& a);
  friend Var sin(const Var& a);
  friend Var cos(const Var& a);

  Var& operator+=(const Var& o) { return *this = *this + o; }
  Var& operator-=(const Var& o) { return *this = *this - o; }
  Var& operator*=(const Var& o) { return *this = *this * o; }

 private:
  friend class Tape;
  Var(double value, int index, Tape* tape) : value_(value), index_(index), tape_(tape) {}

  double value_ = 0.0;
  int index_ = -1;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Var variable(double value) {
    nodes_.push_back({{-1, -1}, {0.0, 0.0}});
    return Var(value, static_cast<int>(nodes_.size()) - 1, this);
  }

  std::size_t size() const { return nodes_.size(); }

  // Adjoints d(out)/d(node) for every recorded node.
  std::vector<double> adjoints(const Var& out) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    if (out.index() < 0) return adj;
    adj[static_cast<std::size_t>(out.index())] = 1.0;
    for (std::size_t k = nodes_.size(); k-- > 0;) {
      const double a = adj[k];
      if (a == 0.0) continue;
      const Node& n = nodes_[k];
      for (int j = 0; j < 2; ++j)
        if (n.parent[j] >= 0) adj[static_cast<std::size_t>(n.parent[j])] += a * n.partial[j];
    }
    return adj;
  }

  // Records a node with up to two parents; constants (index < 0) are dropped.
  Var record(double value, const Var& a, double da, const Var& b, double db) {
    nodes_.push_back({{a.index(), b.index()}, {da, db}});
    return Var(value, static_cast<int>(nodes_.size()) - 1, this);
  }

 private:
  struct Node {
    int parent[2];
    double partial[2];
  };
  std::vector<Node> nodes_;
};

namespace detail {
inline Tape* tape_of(const Var& a, const Var& b) { return a.tape() ? a.tape() : b.tape(); }
}  // namespace detail

inline Var operator+(const Var& a, const Var& b) {
  Tape* t = detail::tape_of(a, b);
  const double v = a.value_ + b.value_;
  return t ? t->record(v, a, 1.0, b, 1.0) : Var(v);
}
inline Var operator-(const Var& a, const Var& b) {
  Tape* t = detail::tape_of(a, b);
  const double v = a.value_ - b.value_;
  return t ? t->record(v, a, 1.0, b, -1.0) : Var(v);
}
inline Var operator*(const Var& a, const Var& b) {
  Tape* t = detail::tape_of(a, b);
  const double v = a.value_ * b.value_;
  return t ? t->record(v, a, b.value_, b, a.value_) : Var(v);
}
inline Var operator/(const Var& a, const Var& b) {
  Tape* t = detail::tape_of(a, b);
  const double v = a.value_ / b.value_;
  return t ? t->record(v, a, 1.0 / b.value_, b, -v / b.value_) : Var(v);
}
inline Var operator-(const Var& a) {
  return a.tape_ ? a.tape_->record(-a.value_, a, -1.0, Var(), 0.0) : Var(-a.value_);
}
inline Var exp(const Var& a) {
  const double e = std::exp(a.value_);
  return a.tape_ ? a.tape_->record(e, a, e, Var(), 0.0) : Var(e);
}
inline Var sin(const Var& a) {
  const double s = std::sin(a.value_);
  return a.tape_ ? a.tape_->record(s, a, std::cos(a.value_), Var(), 0.0) : Var(s);
}
inline Var cos(const Var& a) {
  const double c = std::cos(a.value_);
  return a.tape_ ? a.tape_->record(c, a, -std::sin(a.value_), Var(), 0.0) : Var(c);
}

// Uniform value accessor across double / Dual / Var.
inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }
template <std::size_t N>
double value_of(const Dual<N>& x) { return x.v; }

// ---------------------------------------------------------------------------
// grad_of / check_grad
// ---------------------------------------------------------------------------

// An objective with its own (typically hand-derived) gradient.
template <class F>
concept Objective = requires(const F& f, std::span<const double> x) {
  { f.value(x) } -> std::convertible_to<double>;
  { f.value_and_gradient(x) } -> std::same_as<GradResult>;
};

// A loss written generically over its scalar type: callable on both
// span<const double> and span<const Var>.
template <class F>
concept TapeDifferentiable = requires(const F& f, std::span<const double> xd,
                                      std::span<const Var> xv) {
  { f(xd) } -> std::convertible_to<double>;
  { f(xv) } -> std::convertible_to<Var>;
};

namespace detail {

inline std::string nonfinite_location(const GradResult& r, const ParamLayout* layout,
                                      std::span<const double> at) {
  if (!layout || layout->size() != at.size()) return "loss";
  for (std::size_t i = 0; i < at.size(); ++i)
    if (!std::isfinite(at[i])) return layout->block_of(i);
  for (std::size_t i = 0; i < r.grad.size(); ++i)
    if (!std::isfinite(r.grad[i])) return layout->block_of(i);
  return "loss";
}

template <class F>
GradResult raw_gradient(const F& loss_fn, std::span<const double> at) {
  if constexpr (Objective<F>) {
    return loss_fn.value_and_gradient(at);
  } else {
    static_assert(TapeDifferentiable<F>, "loss_fn must be an Objective or tape-differentiable");
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(at.size());
    for (double x : at) vars.push_back(tape.variable(x));
    const Var out = loss_fn(std::span<const Var>(vars));
    const auto adj = tape.adjoints(out);
    GradResult r;
    r.loss = out.value();
    r.grad.resize(at.size());
    for (std::size_t i = 0; i < at.size(); ++i)
      r.grad[i] = vars[i].index() >= 0 ? adj[static_cast<std::size_t>(vars[i].index())] : 0.0;
    return r;
  }
}

template <class F>
double raw_value(const F& loss_fn, std::span<const double> at) {
  if constexpr (Objective<F>) {
    return loss_fn.value(at);
  } else {
    return static_cast<double>(loss_fn(at));
  }
}

}  // namespace detail

// Loss and exact gradient. Throws NumericalError naming the offending block
// (or "loss") when the loss or any gradient entry is non-finite.
template <class F>
GradResult grad_of(const F& loss_fn, std::span<const double> at,
                   const ParamLayout* layout = nullptr) {
  GradResult r = detail::raw_gradient(loss_fn, at);
  bool finite = std::isfinite(r.loss);
  for (double g : r.grad) finite = finite && std::isfinite(g);
  if (!finite)
    throw NumericalError("non-finite loss or gradient", detail::nonfinite_location(r, layout, at));
  return r;
}

template <class F>
GradResult grad_of(const F& loss_fn, const ParamVector& at) {
  return grad_of(loss_fn, at.view(), &at.layout);
}

struct GradCheckReport {
  double worst_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = true;
  std::vector<double> analytic;
  std::vector<double> numeric;
};

inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-8, std::abs(a) + std::abs(b));
}

// Compares grad_of against central differences with per-component step
// step·max(1, |Φᵢ|).
template <class F>
GradCheckReport check_grad(const F& loss_fn, std::span<const double> at, double step,
                           double tol) {
  if (!(step > 0.0) || !(tol > 0.0)) throw InputError("check_grad needs step > 0 and tol > 0");
  GradCheckReport rep;
  rep.analytic = detail::raw_gradient(loss_fn, at).grad;
  rep.numeric.resize(at.size());
  std::vector<double> probe(at.begin(), at.end());
  for (std::size_t i = 0; i < at.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(at[i]));
    probe[i] = at[i] + h;
    const double up = detail::raw_value(loss_fn, probe);
    probe[i] = at[i] - h;
    const double down = detail::raw_value(loss_fn, probe);
    probe[i] = at[i];
    rep.numeric[i] = (up - down) / (2.0 * h);
    const double err = relative_error(rep.analytic[i], rep.numeric[i]);
    if (!(err <= rep.worst_rel_error)) {
      rep.worst_rel_error = err;
      rep.worst_index = i;
    }
  }
  rep.passed = rep.worst_rel_error <= tol;
  return rep;
}

template <class F>
GradCheckReport check_grad(const F& loss_fn, const ParamVector& at, double step, double tol) {
  return check_grad(loss_fn, at.view(), step, tol);
}

}  // namespace pmpnet::diff
