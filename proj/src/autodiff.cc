// Copyright 2026 The RMP2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rmp2/autodiff.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <utility>

namespace rmp2::ad {

const char* OpName(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kCopy: return "copy";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kNeg: return "negate";
    case Op::kScale: return "scale";
    case Op::kShift: return "shift";
    case Op::kScalarMul: return "scalar_mul";
    case Op::kMul: return "mul";
    case Op::kMatVec: return "matvec";
    case Op::kMatMul: return "matmul";
    case Op::kTranspose: return "transpose";
    case Op::kOuter: return "outer";
    case Op::kDot: return "dot";
    case Op::kSum: return "sum";
    case Op::kBroadcast: return "broadcast";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kPad: return "pad";
    case Op::kSin: return "sin";
    case Op::kCos: return "cos";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kSquare: return "square";
    case Op::kSqrt: return "sqrt";
    case Op::kReciprocal: return "reciprocal";
    case Op::kPower: return "power";
    case Op::kMaxConst: return "max_const";
    case Op::kMinConst: return "min_const";
    case Op::kAbs: return "abs";
    case Op::kStep: return "step";
    case Op::kSolve: return "solve";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Var

Tape& Var::tape() const {
  if (tape_ == nullptr) throw std::logic_error("use of an empty Var");
  return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }

Eigen::VectorXd Var::vector() const {
  const Tensor& v = value();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size());
}

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) throw ShapeError("scalar() on a non-scalar Var");
  return v(0, 0);
}

std::vector<Eigen::Index> Var::shape() const {
  const NodeHeader& h = tape().header(id_);
  if (h.rank == 0) return {};
  if (h.rank == 1) return {rows()};
  return {rows(), cols()};
}

// ---------------------------------------------------------------------------
// Tape

namespace {

void RequireFinite(const Tensor& v, const char* what) {
  if (!v.allFinite()) {
    throw DomainError(std::string("non-finite value produced by ") + what);
  }
}

}  // namespace

Var Tape::Push(const NodeHeader& header, Tensor value) {
  const auto id = static_cast<NodeId>(headers_.size());
  headers_.push_back(header);
  values_.push_back(std::move(value));
  return Var(this, id);
}

Var Tape::input(const Eigen::VectorXd& value) {
  RequireFinite(value, "input");
  NodeHeader h;
  h.rank = 1;
  return Push(h, value);
}

Var Tape::input_matrix(const Eigen::MatrixXd& value) {
  RequireFinite(value, "input");
  NodeHeader h;
  h.rank = 2;
  return Push(h, value);
}

Var Tape::scalar(double value) {
  Tensor v(1, 1);
  v(0, 0) = value;
  RequireFinite(v, "input");
  NodeHeader h;
  h.rank = 0;
  return Push(h, std::move(v));
}

void Tape::SetValue(const Var& input, const Tensor& value) {
  if (&input.tape() != this) throw ShapeError("SetValue: Var from another tape");
  if (headers_[input.id()].op != Op::kInput) {
    throw std::invalid_argument("SetValue: node is not an input");
  }
  Tensor& slot = values_[input.id()];
  if (slot.rows() != value.rows() || slot.cols() != value.cols()) {
    throw ShapeError("SetValue: shape mismatch");
  }
  RequireFinite(value, "input");
  slot = value;
}

void Tape::Replay() {
  for (std::size_t id = 0; id < headers_.size(); ++id) {
    const NodeHeader& h = headers_[id];
    if (h.op == Op::kInput) continue;
    const Tensor* a = h.parent0 >= 0 ? &values_[h.parent0] : nullptr;
    const Tensor* b = h.parent1 >= 0 ? &values_[h.parent1] : nullptr;
    values_[id] = EvaluatePrimitive(h, a, b);
  }
}

Var Tape::Record(const NodeHeader& header) {
  const Tensor* a = header.parent0 >= 0 ? &values_[header.parent0] : nullptr;
  const Tensor* b = header.parent1 >= 0 ? &values_[header.parent1] : nullptr;
  Tensor value = EvaluatePrimitive(header, a, b);
  return Push(header, std::move(value));
}

Tensor EvaluatePrimitive(const NodeHeader& h, const Tensor* a, const Tensor* b) {
  Tensor out;
  switch (h.op) {
    case Op::kInput:
      throw std::logic_error("inputs are not evaluated");
    case Op::kCopy: out = *a; break;
    case Op::kAdd: out = *a + *b; break;
    case Op::kSub: out = *a - *b; break;
    case Op::kNeg: out = -*a; break;
    case Op::kScale: out = *a * h.c; break;
    case Op::kShift: out = a->array() + h.c; break;
    case Op::kScalarMul: out = (*a)(0, 0) * *b; break;
    case Op::kMul: out = a->cwiseProduct(*b); break;
    case Op::kMatVec:
    case Op::kMatMul: out.noalias() = *a * *b; break;
    case Op::kTranspose: out = a->transpose(); break;
    case Op::kOuter: out.noalias() = *a * b->transpose(); break;
    case Op::kDot:
      out.resize(1, 1);
      out(0, 0) = a->cwiseProduct(*b).sum();
      break;
    case Op::kSum:
      out.resize(1, 1);
      out(0, 0) = a->sum();
      break;
    case Op::kBroadcast: out = Tensor::Constant(h.i0, h.i1, (*a)(0, 0)); break;
    case Op::kConcat:
      out.resize(a->rows() + b->rows(), 1);
      out << *a, *b;
      break;
    case Op::kSlice: out = a->middleRows(h.i0, h.i1); break;
    case Op::kPad:
      out = Tensor::Zero(h.i1, 1);
      out.middleRows(h.i0, a->rows()) = *a;
      break;
    case Op::kSin: out = a->array().sin(); break;
    case Op::kCos: out = a->array().cos(); break;
    case Op::kTanh: out = a->array().tanh(); break;
    case Op::kExp: out = a->array().exp(); break;
    case Op::kLog:
      if ((a->array() <= 0.0).any()) throw DomainError("log of a non-positive value");
      out = a->array().log();
      break;
    case Op::kSquare: out = a->array().square(); break;
    case Op::kSqrt:
      if ((a->array() < 0.0).any()) throw DomainError("sqrt of a negative value");
      out = a->array().sqrt();
      break;
    case Op::kReciprocal:
      if ((a->array() == 0.0).any()) throw DomainError("reciprocal of zero");
      out = a->array().inverse();
      break;
    case Op::kPower:
      if (h.c != std::floor(h.c) && (a->array() < 0.0).any()) {
        throw DomainError("non-integer power of a negative value");
      }
      if (h.c < 0.0 && (a->array() == 0.0).any()) {
        throw DomainError("negative power of zero");
      }
      out = a->array().pow(h.c);
      break;
    case Op::kMaxConst: out = a->array().max(h.c); break;
    case Op::kMinConst: out = a->array().min(h.c); break;
    case Op::kAbs: out = a->array().abs(); break;
    case Op::kStep: {
      const auto mode = static_cast<StepMode>(h.i0);
      out.resize(a->rows(), a->cols());
      for (Eigen::Index i = 0; i < a->size(); ++i) {
        const double x = a->data()[i];
        double v = 0.0;
        switch (mode) {
          case StepMode::kGreater: v = x > h.c ? 1.0 : 0.0; break;
          case StepMode::kLess: v = x < h.c ? 1.0 : 0.0; break;
          case StepMode::kSign: v = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); break;
        }
        out.data()[i] = v;
      }
      break;
    }
    case Op::kSolve: {
      Eigen::FullPivLU<Tensor> lu(*a);
      if (!lu.isInvertible()) throw DomainError("solve with a singular matrix");
      out = lu.solve(*b);
      break;
    }
  }
  RequireFinite(out, OpName(h.op));
  return out;
}

// ---------------------------------------------------------------------------
// Primitive builders

namespace {

Tape& TapeOf(const Var& a) {
  if (!a.valid()) throw std::invalid_argument("empty Var operand");
  return a.tape();
}

Tape& TapeOf(const Var& a, const Var& b) {
  Tape& t = TapeOf(a);
  if (&TapeOf(b) != &t) throw ShapeError("operands belong to different tapes");
  return t;
}

std::string ShapeString(const Var& v) {
  std::ostringstream os;
  os << "[" << v.rows() << "x" << v.cols() << "]";
  return os.str();
}

[[noreturn]] void ThrowShape(const char* op, const Var& a, const Var& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + ShapeString(a) +
                   " and " + ShapeString(b));
}

[[noreturn]] void ThrowShape(const char* op, const Var& a) {
  throw ShapeError(std::string(op) + ": invalid shape " + ShapeString(a));
}

std::uint8_t RankOf(const Var& v) { return v.tape().header(v.id()).rank; }

bool SameShape(const Var& a, const Var& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

bool IsVector(const Var& a) { return a.cols() == 1; }

Var Unary(Op op, const Var& x, std::uint8_t rank, double c = 0.0,
          std::int32_t i0 = 0, std::int32_t i1 = 0) {
  Tape& t = TapeOf(x);
  NodeHeader h;
  h.op = op;
  h.rank = rank;
  h.parent0 = x.id();
  h.c = c;
  h.i0 = i0;
  h.i1 = i1;
  return t.Record(h);
}

Var Binary(Op op, const Var& a, const Var& b, std::uint8_t rank) {
  Tape& t = TapeOf(a, b);
  NodeHeader h;
  h.op = op;
  h.rank = rank;
  h.parent0 = a.id();
  h.parent1 = b.id();
  return t.Record(h);
}

Var Elementwise(Op op, const Var& x, double c = 0.0) {
  return Unary(op, x, RankOf(x), c);
}

}  // namespace

Var copy(const Var& x) { return Elementwise(Op::kCopy, x); }

Var add(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (!SameShape(a, b)) ThrowShape("add", a, b);
  return Binary(Op::kAdd, a, b, RankOf(a));
}

Var sub(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (!SameShape(a, b)) ThrowShape("sub", a, b);
  return Binary(Op::kSub, a, b, RankOf(a));
}

Var neg(const Var& a) { return Elementwise(Op::kNeg, a); }
Var scale(const Var& a, double c) { return Elementwise(Op::kScale, a, c); }
Var shift(const Var& a, double c) { return Elementwise(Op::kShift, a, c); }

Var scalar_mul(const Var& s, const Var& a) {
  TapeOf(s, a);
  if (s.size() != 1) ThrowShape("scalar_mul", s, a);
  return Binary(Op::kScalarMul, s, a, RankOf(a));
}

Var mul(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (!SameShape(a, b)) ThrowShape("mul", a, b);
  return Binary(Op::kMul, a, b, RankOf(a));
}

Var matvec(const Var& m, const Var& x) {
  TapeOf(m, x);
  if (!IsVector(x) || m.cols() != x.rows()) ThrowShape("matvec", m, x);
  return Binary(Op::kMatVec, m, x, 1);
}

Var matmul(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (a.cols() != b.rows()) ThrowShape("matmul", a, b);
  return Binary(Op::kMatMul, a, b, 2);
}

Var transpose(const Var& m) { return Unary(Op::kTranspose, m, 2); }

Var outer(const Var& u, const Var& v) {
  TapeOf(u, v);
  if (!IsVector(u) || !IsVector(v)) ThrowShape("outer", u, v);
  return Binary(Op::kOuter, u, v, 2);
}

Var dot(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (!SameShape(a, b)) ThrowShape("dot", a, b);
  return Binary(Op::kDot, a, b, 0);
}

Var sum(const Var& a) { return Unary(Op::kSum, a, 0); }

Var broadcast(const Var& s, Eigen::Index rows, Eigen::Index cols) {
  TapeOf(s);
  if (s.size() != 1 || rows < 1 || cols < 1) ThrowShape("broadcast", s);
  return Unary(Op::kBroadcast, s, cols == 1 ? 1 : 2, 0.0,
               static_cast<std::int32_t>(rows), static_cast<std::int32_t>(cols));
}

Var concat(const Var& a, const Var& b) {
  TapeOf(a, b);
  if (!IsVector(a) || !IsVector(b)) ThrowShape("concat", a, b);
  return Binary(Op::kConcat, a, b, 1);
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  Var out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat(out, parts[i]);
  return out;
}

Var slice(const Var& a, Eigen::Index start, Eigen::Index length) {
  TapeOf(a);
  if (!IsVector(a) || start < 0 || length < 1 || start + length > a.rows()) {
    ThrowShape("slice", a);
  }
  return Unary(Op::kSlice, a, 1, 0.0, static_cast<std::int32_t>(start),
               static_cast<std::int32_t>(length));
}

Var pad(const Var& a, Eigen::Index start, Eigen::Index total) {
  TapeOf(a);
  if (!IsVector(a) || start < 0 || start + a.rows() > total) ThrowShape("pad", a);
  return Unary(Op::kPad, a, 1, 0.0, static_cast<std::int32_t>(start),
               static_cast<std::int32_t>(total));
}

Var sin(const Var& x) { return Elementwise(Op::kSin, x); }
Var cos(const Var& x) { return Elementwise(Op::kCos, x); }
Var tanh(const Var& x) { return Elementwise(Op::kTanh, x); }
Var exp(const Var& x) { return Elementwise(Op::kExp, x); }
Var log(const Var& x) { return Elementwise(Op::kLog, x); }
Var square(const Var& x) { return Elementwise(Op::kSquare, x); }
Var sqrt(const Var& x) { return Elementwise(Op::kSqrt, x); }
Var reciprocal(const Var& x) { return Elementwise(Op::kReciprocal, x); }
Var power(const Var& x, double p) { return Elementwise(Op::kPower, x, p); }
Var max_const(const Var& x, double c) { return Elementwise(Op::kMaxConst, x, c); }
Var min_const(const Var& x, double c) { return Elementwise(Op::kMinConst, x, c); }
Var abs(const Var& x) { return Elementwise(Op::kAbs, x); }

Var step(const Var& x, double c, StepMode mode) {
  return Unary(Op::kStep, x, RankOf(x), c, static_cast<std::int32_t>(mode));
}

Var solve(const Var& m, const Var& f) {
  TapeOf(m, f);
  if (m.rows() != m.cols() || !IsVector(f) || f.rows() != m.rows()) {
    ThrowShape("solve", m, f);
  }
  return Binary(Op::kSolve, m, f, 1);
}

Var div(const Var& a, const Var& b) {
  if (b.size() == 1 && a.size() != 1) return scalar_mul(reciprocal(b), a);
  return mul(a, reciprocal(b));
}

Var squared_norm(const Var& a) { return dot(a, a); }

Var operator+(const Var& a, const Var& b) { return add(a, b); }
Var operator-(const Var& a, const Var& b) { return sub(a, b); }
Var operator-(const Var& a) { return neg(a); }
Var operator*(const Var& a, const Var& b) {
  if (a.size() == 1 && b.size() != 1) return scalar_mul(a, b);
  if (b.size() == 1 && a.size() != 1) return scalar_mul(b, a);
  return mul(a, b);
}
Var operator*(const Var& a, double c) { return scale(a, c); }
Var operator*(double c, const Var& a) { return scale(a, c); }
Var operator+(const Var& a, double c) { return shift(a, c); }
Var operator+(double c, const Var& a) { return shift(a, c); }
Var operator-(const Var& a, double c) { return shift(a, -c); }
Var operator-(double c, const Var& a) { return shift(neg(a), c); }
Var operator/(const Var& a, const Var& b) { return div(a, b); }
Var operator/(const Var& a, double c) { return scale(a, 1.0 / c); }

// ---------------------------------------------------------------------------
// Reverse sweep

namespace {

// Concrete adjoints; nothing is recorded.
struct ValueAlgebra {
  using T = Tensor;
  const Tape& tape;

  const Tensor& X(NodeId id) const { return tape.value(id); }
  Eigen::Index Rows(NodeId id) const { return tape.value(id).rows(); }

  static T Neg(const T& a) { return -a; }
  static T Scale(const T& a, double c) { return a * c; }
  static T Shift(const T& a, double c) { return a.array() + c; }
  static T Add(const T& a, const T& b) { return a + b; }
  static T Mul(const T& a, const T& b) { return a.cwiseProduct(b); }
  static T ScalarMul(const T& s, const T& a) { return s(0, 0) * a; }
  static T MatVec(const T& m, const T& x) { return m * x; }
  static T MatMul(const T& a, const T& b) { return a * b; }
  static T Transpose(const T& a) { return a.transpose(); }
  static T Outer(const T& u, const T& v) { return u * v.transpose(); }
  static T Dot(const T& a, const T& b) {
    T out(1, 1);
    out(0, 0) = a.cwiseProduct(b).sum();
    return out;
  }
  static T Sum(const T& a) {
    T out(1, 1);
    out(0, 0) = a.sum();
    return out;
  }
  static T Broadcast(const T& s, Eigen::Index r, Eigen::Index c) {
    return T::Constant(r, c, s(0, 0));
  }
  static T Slice(const T& a, Eigen::Index start, Eigen::Index len) {
    return a.middleRows(start, len);
  }
  static T Pad(const T& a, Eigen::Index start, Eigen::Index total) {
    T out = T::Zero(total, 1);
    out.middleRows(start, a.rows()) = a;
    return out;
  }
  static T Sin(const T& a) { return a.array().sin(); }
  static T Cos(const T& a) { return a.array().cos(); }
  static T Square(const T& a) { return a.array().square(); }
  static T Reciprocal(const T& a) { return a.array().inverse(); }
  static T Power(const T& a, double p) { return a.array().pow(p); }
  static T Step(const T& a, double c, StepMode mode) {
    NodeHeader h;
    h.op = Op::kStep;
    h.c = c;
    h.i0 = static_cast<std::int32_t>(mode);
    return EvaluatePrimitive(h, &a, nullptr);
  }
  static T Solve(const T& m, const T& f) {
    Eigen::FullPivLU<Tensor> lu(m);
    if (!lu.isInvertible()) throw DomainError("solve with a singular matrix");
    return lu.solve(f);
  }
};

// Adjoints recorded on the tape, so the result is itself differentiable.
struct VarAlgebra {
  using T = Var;
  Tape& tape;

  Var X(NodeId id) const { return Var(&tape, id); }
  Eigen::Index Rows(NodeId id) const { return tape.value(id).rows(); }

  static T Neg(const T& a) { return neg(a); }
  static T Scale(const T& a, double c) { return scale(a, c); }
  static T Shift(const T& a, double c) { return shift(a, c); }
  static T Add(const T& a, const T& b) { return add(a, b); }
  static T Mul(const T& a, const T& b) { return mul(a, b); }
  static T ScalarMul(const T& s, const T& a) { return scalar_mul(s, a); }
  static T MatVec(const T& m, const T& x) { return matvec(m, x); }
  static T MatMul(const T& a, const T& b) { return matmul(a, b); }
  static T Transpose(const T& a) { return transpose(a); }
  static T Outer(const T& u, const T& v) { return outer(u, v); }
  static T Dot(const T& a, const T& b) { return dot(a, b); }
  static T Sum(const T& a) { return sum(a); }
  static T Broadcast(const T& s, Eigen::Index r, Eigen::Index c) {
    return broadcast(s, r, c);
  }
  static T Slice(const T& a, Eigen::Index start, Eigen::Index len) {
    return slice(a, start, len);
  }
  static T Pad(const T& a, Eigen::Index start, Eigen::Index total) {
    return pad(a, start, total);
  }
  static T Sin(const T& a) { return sin(a); }
  static T Cos(const T& a) { return cos(a); }
  static T Square(const T& a) { return square(a); }
  static T Reciprocal(const T& a) { return reciprocal(a); }
  static T Power(const T& a, double p) { return power(a, p); }
  static T Step(const T& a, double c, StepMode mode) { return step(a, c, mode); }
  static T Solve(const T& m, const T& f) { return solve(m, f); }
};

// Vector-Jacobian rule of one node: given the adjoint `g` of node `self`,
// writes the contributions to the parents that are flagged in `need`.
template <class Alg, class T = typename Alg::T>
void Propagate(const Alg& alg, const NodeHeader& h, NodeId self, const T& g,
               bool need0, bool need1, std::optional<T>& out0,
               std::optional<T>& out1) {
  const NodeId p0 = h.parent0;
  const NodeId p1 = h.parent1;
  switch (h.op) {
    case Op::kInput:
    case Op::kStep:
      return;
    case Op::kCopy:
    case Op::kShift:
      if (need0) out0 = g;
      return;
    case Op::kAdd:
      if (need0) out0 = g;
      if (need1) out1 = g;
      return;
    case Op::kSub:
      if (need0) out0 = g;
      if (need1) out1 = Alg::Neg(g);
      return;
    case Op::kNeg:
      if (need0) out0 = Alg::Neg(g);
      return;
    case Op::kScale:
      if (need0) out0 = Alg::Scale(g, h.c);
      return;
    case Op::kScalarMul:
      if (need0) out0 = Alg::Dot(g, alg.X(p1));
      if (need1) out1 = Alg::ScalarMul(alg.X(p0), g);
      return;
    case Op::kMul:
      if (need0) out0 = Alg::Mul(g, alg.X(p1));
      if (need1) out1 = Alg::Mul(g, alg.X(p0));
      return;
    case Op::kMatVec:
      if (need0) out0 = Alg::Outer(g, alg.X(p1));
      if (need1) out1 = Alg::MatVec(Alg::Transpose(alg.X(p0)), g);
      return;
    case Op::kMatMul:
      if (need0) out0 = Alg::MatMul(g, Alg::Transpose(alg.X(p1)));
      if (need1) out1 = Alg::MatMul(Alg::Transpose(alg.X(p0)), g);
      return;
    case Op::kTranspose:
      if (need0) out0 = Alg::Transpose(g);
      return;
    case Op::kOuter:
      if (need0) out0 = Alg::MatVec(g, alg.X(p1));
      if (need1) out1 = Alg::MatVec(Alg::Transpose(g), alg.X(p0));
      return;
    case Op::kDot:
      if (need0) out0 = Alg::ScalarMul(g, alg.X(p1));
      if (need1) out1 = Alg::ScalarMul(g, alg.X(p0));
      return;
    case Op::kSum: {
      const auto& x = alg.tape.value(p0);
      if (need0) out0 = Alg::Broadcast(g, x.rows(), x.cols());
      return;
    }
    case Op::kBroadcast:
      if (need0) out0 = Alg::Sum(g);
      return;
    case Op::kConcat: {
      const Eigen::Index na = alg.Rows(p0);
      if (need0) out0 = Alg::Slice(g, 0, na);
      if (need1) out1 = Alg::Slice(g, na, alg.Rows(p1));
      return;
    }
    case Op::kSlice:
      if (need0) out0 = Alg::Pad(g, h.i0, alg.Rows(p0));
      return;
    case Op::kPad:
      if (need0) out0 = Alg::Slice(g, h.i0, alg.Rows(p0));
      return;
    case Op::kSin:
      if (need0) out0 = Alg::Mul(g, Alg::Cos(alg.X(p0)));
      return;
    case Op::kCos:
      if (need0) out0 = Alg::Neg(Alg::Mul(g, Alg::Sin(alg.X(p0))));
      return;
    case Op::kTanh:
      // 1 - tanh²
      if (need0) {
        out0 = Alg::Mul(g, Alg::Shift(Alg::Neg(Alg::Square(alg.X(self))), 1.0));
      }
      return;
    case Op::kExp:
      if (need0) out0 = Alg::Mul(g, alg.X(self));
      return;
    case Op::kLog:
      if (need0) out0 = Alg::Mul(g, Alg::Reciprocal(alg.X(p0)));
      return;
    case Op::kSquare:
      if (need0) out0 = Alg::Scale(Alg::Mul(g, alg.X(p0)), 2.0);
      return;
    case Op::kSqrt:
      if (need0) out0 = Alg::Scale(Alg::Mul(g, Alg::Reciprocal(alg.X(self))), 0.5);
      return;
    case Op::kReciprocal:
      if (need0) out0 = Alg::Neg(Alg::Mul(g, Alg::Square(alg.X(self))));
      return;
    case Op::kPower:
      if (need0) out0 = Alg::Scale(Alg::Mul(g, Alg::Power(alg.X(p0), h.c - 1.0)), h.c);
      return;
    case Op::kMaxConst:
      if (need0) out0 = Alg::Mul(g, Alg::Step(alg.X(p0), h.c, StepMode::kGreater));
      return;
    case Op::kMinConst:
      if (need0) out0 = Alg::Mul(g, Alg::Step(alg.X(p0), h.c, StepMode::kLess));
      return;
    case Op::kAbs:
      if (need0) out0 = Alg::Mul(g, Alg::Step(alg.X(p0), 0.0, StepMode::kSign));
      return;
    case Op::kSolve: {
      // y = M⁻¹ f:  f̄ = M⁻ᵀ ḡ,  M̄ = -f̄ yᵀ
      T f_bar = Alg::Solve(Alg::Transpose(alg.X(p0)), g);
      if (need0) out0 = Alg::Neg(Alg::Outer(f_bar, alg.X(self)));
      if (need1) out1 = std::move(f_bar);
      return;
    }
  }
}

// Nodes in [lo, hi] that depend on at least one of the sweep targets.
struct Segment {
  NodeId lo = 0;
  NodeId hi = -1;
  std::vector<std::uint8_t> depends;

  bool Depends(NodeId id) const {
    return id >= lo && id <= hi && depends[id - lo] != 0;
  }
};

Segment BuildSegment(const Tape& tape, NodeId out, std::span<const NodeId> wrt) {
  Segment seg;
  seg.lo = *std::min_element(wrt.begin(), wrt.end());
  seg.hi = out;
  if (seg.hi < seg.lo) return seg;
  seg.depends.assign(static_cast<std::size_t>(seg.hi - seg.lo + 1), 0);
  for (NodeId id : wrt) {
    if (id <= seg.hi) seg.depends[id - seg.lo] = 1;
  }
  for (NodeId id = seg.lo; id <= seg.hi; ++id) {
    auto& d = seg.depends[id - seg.lo];
    if (d != 0) continue;
    const NodeHeader& h = tape.header(id);
    if (h.op == Op::kStep || h.op == Op::kInput) continue;
    d = static_cast<std::uint8_t>(seg.Depends(h.parent0) || seg.Depends(h.parent1));
  }
  return seg;
}

template <class Alg, class T = typename Alg::T>
std::vector<std::optional<T>> Sweep(const Alg& alg, Tape& tape, const Segment& seg,
                                    NodeId out, T seed, std::span<const NodeId> wrt) {
  std::vector<std::optional<T>> result(wrt.size());
  if (!seg.Depends(out)) return result;

  std::vector<std::optional<T>> adjoint(static_cast<std::size_t>(out - seg.lo + 1));
  adjoint[out - seg.lo] = std::move(seed);
  std::int64_t visited = 0;

  for (NodeId id = out; id >= seg.lo; --id) {
    const std::optional<T>& g = adjoint[id - seg.lo];
    if (!g) continue;
    const NodeHeader h = tape.header(id);  // copy: recording may grow the tape
    const bool need0 = seg.Depends(h.parent0);
    const bool need1 = seg.Depends(h.parent1);
    if (!need0 && !need1) continue;
    ++visited;
    std::optional<T> c0, c1;
    Propagate(alg, h, id, *g, need0, need1, c0, c1);
    auto accumulate = [&](NodeId parent, std::optional<T>& c) {
      if (!c) return;
      auto& slot = adjoint[parent - seg.lo];
      if (slot) {
        slot = Alg::Add(*slot, *c);
      } else {
        slot = std::move(c);
      }
    };
    accumulate(h.parent0, c0);
    if (h.parent1 == h.parent0 && c1) {
      // x op x: both contributions land on the same slot
      accumulate(h.parent0, c1);
    } else {
      accumulate(h.parent1, c1);
    }
  }

  SweepStats& stats = tape.mutable_stats();
  ++stats.sweeps;
  stats.nodes_visited += visited;
  stats.last_visited = visited;
  stats.last_segment = out - seg.lo + 1;

  for (std::size_t i = 0; i < wrt.size(); ++i) {
    const NodeId id = wrt[i];
    if (id <= out) result[i] = adjoint[id - seg.lo];
  }
  return result;
}

// Runs one sweep in the requested mode; missing adjoints become zeros.
std::vector<Var> RunSweep(Tape& tape, const Segment& seg, NodeId out,
                          const Tensor& seed, std::span<const NodeId> wrt,
                          bool create_graph) {
  std::vector<Var> grads;
  grads.reserve(wrt.size());
  if (create_graph) {
    VarAlgebra alg{tape};
    Var seed_var = seed.cols() == 1 ? tape.input(seed) : tape.input_matrix(seed);
    auto adj = Sweep(alg, tape, seg, out, seed_var, wrt);
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      if (adj[i]) {
        grads.push_back(*adj[i]);
      } else {
        const Tensor& u = tape.value(wrt[i]);
        grads.push_back(u.cols() == 1 ? tape.input(Eigen::VectorXd::Zero(u.rows()))
                                      : tape.input_matrix(Tensor::Zero(u.rows(), u.cols())));
      }
    }
  } else {
    ValueAlgebra alg{tape};
    auto adj = Sweep(alg, tape, seg, out, seed, wrt);
    for (std::size_t i = 0; i < wrt.size(); ++i) {
      const Tensor& u = tape.value(wrt[i]);
      Tensor g = adj[i] ? std::move(*adj[i]) : Tensor::Zero(u.rows(), u.cols());
      grads.push_back(g.cols() == 1 ? tape.input(g) : tape.input_matrix(g));
    }
  }
  return grads;
}

std::vector<NodeId> Ids(Tape& tape, std::span<const Var> vars) {
  std::vector<NodeId> ids;
  ids.reserve(vars.size());
  for (const Var& v : vars) {
    if (&TapeOf(v) != &tape) throw ShapeError("operands belong to different tapes");
    ids.push_back(v.id());
  }
  return ids;
}

}  // namespace

std::vector<Var> Gradients(const Var& s, std::span<const Var> wrt, bool create_graph) {
  Tape& tape = TapeOf(s);
  if (s.size() != 1) throw ShapeError("Gradient: output is not a scalar");
  if (wrt.empty()) return {};
  const std::vector<NodeId> ids = Ids(tape, wrt);
  const Segment seg = BuildSegment(tape, s.id(), ids);
  return RunSweep(tape, seg, s.id(), Tensor::Ones(1, 1), ids, create_graph);
}

Var Gradient(const Var& s, const Var& u, bool create_graph) {
  const Var wrt[] = {u};
  return Gradients(s, wrt, create_graph)[0];
}

Var Backward(const Var& v, const Tensor& seed, const Var& u, bool create_graph) {
  Tape& tape = TapeOf(v, u);
  if (seed.rows() != v.rows() || seed.cols() != v.cols()) {
    throw ShapeError("Backward: seed shape differs from output shape");
  }
  const NodeId ids[] = {u.id()};
  const Segment seg = BuildSegment(tape, v.id(), ids);
  return RunSweep(tape, seg, v.id(), seed, ids, create_graph)[0];
}

Var Jacobian(const Var& v, const Var& u, bool create_graph) {
  Tape& tape = TapeOf(v, u);
  if (!IsVector(v) || !IsVector(u)) ThrowShape("Jacobian", v, u);
  const Eigen::Index m = v.rows();
  const Eigen::Index n = u.rows();
  const NodeId ids[] = {u.id()};
  const Segment seg = BuildSegment(tape, v.id(), ids);

  if (!create_graph) {
    Tensor jac = Tensor::Zero(m, n);
    if (seg.Depends(v.id())) {
      ValueAlgebra alg{tape};
      for (Eigen::Index i = 0; i < m; ++i) {
        auto row = Sweep(alg, tape, seg, v.id(), Tensor(Eigen::VectorXd::Unit(m, i)), ids);
        if (row[0]) jac.row(i) = row[0]->transpose();
      }
    }
    return tape.input_matrix(jac);
  }

  Var jac;
  for (Eigen::Index i = 0; i < m; ++i) {
    Var row = RunSweep(tape, seg, v.id(), Eigen::VectorXd::Unit(m, i), ids, true)[0];
    Var term = outer(tape.input(Eigen::VectorXd::Unit(m, i)), row);
    jac = jac.valid() ? add(jac, term) : term;
  }
  return jac;
}

std::vector<Var> Jvp(std::span<const Var> vs, const Var& u, const Var& w,
                     bool create_graph) {
  Tape& tape = TapeOf(u, w);
  if (!IsVector(u) || !IsVector(w) || w.rows() != u.rows()) {
    ThrowShape("Jvp", u, w);
  }
  if (vs.empty()) return {};
  std::vector<Var> dummies;
  dummies.reserve(vs.size());
  Var inner;
  for (const Var& v : vs) {
    if (&TapeOf(v) != &tape) throw ShapeError("operands belong to different tapes");
    if (!IsVector(v)) ThrowShape("Jvp", v);
    Var lambda = tape.input(Eigen::VectorXd::Ones(v.rows()));
    dummies.push_back(lambda);
    Var term = dot(lambda, v);
    inner = inner.valid() ? add(inner, term) : term;
  }
  // g(λ) = Jᵀλ, recorded so that it can be swept again.
  Var g = Gradient(inner, u, /*create_graph=*/true);
  Var outer_scalar = dot(g, w);
  return Gradients(outer_scalar, dummies, create_graph);
}

Var Jvp(const Var& v, const Var& u, const Var& w, bool create_graph) {
  const Var vs[] = {v};
  return Jvp(vs, u, w, create_graph)[0];
}

Var Jvp(const Var& v, const Var& u, const Eigen::VectorXd& w, bool create_graph) {
  return Jvp(v, u, TapeOf(u).input(w), create_graph);
}

}  // namespace rmp2::ad
